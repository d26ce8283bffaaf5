"""Hidden-variable models over a finite space and the operations that
track how much of their mass stays local and freely chosen.

A model consists of

* ``p_lambda``          -- prior P(lambda), shape (K,)
* ``p_lambda_given_xy`` -- P(lambda | x, y), shape (K, M_A, M_B); every
  (x, y) column is a distribution over lambda
* ``outcome_tables``    -- P(a, b | x, y, lambda), shape (K, M_A, M_B, 2, 2)
* ``settings``          -- the joint setting distribution P(x, y) the model
  is built for (needed to invert the conditionals via Bayes)
* ``factorized``        -- optional response functions (P(a|x,lambda),
  P(b|y,lambda)) when the outcome tables are products

A hidden variable is *local* when its outcome table factorizes into
setting-local response functions, and *free* when P(lambda | x, y) does
not depend on the settings at all.  The central construction here is
``dilate``: given any behaviour and any setting distribution it builds a
model that reproduces both exactly with every hidden variable local, at
the price of making the setting choices fully determined by lambda.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .behaviour import (
    DEFAULT_TOLERANCE,
    Behaviour,
    SettingsDistribution,
    Tolerance,
    ValidationReport,
    Violation,
    validate,
    validate_settings,
)
from .errors import DomainError, ModelError, StructureError


@dataclass(frozen=True, eq=False)
class FactorizedTables:
    """Response functions: alice[k, x, a] = P(a | x, lambda_k), and the
    Bob analogue."""

    alice: np.ndarray
    bob: np.ndarray


@dataclass(frozen=True, eq=False)
class HVModel:
    p_lambda: np.ndarray
    p_lambda_given_xy: np.ndarray
    outcome_tables: np.ndarray
    settings: SettingsDistribution
    factorized: FactorizedTables | None = None

    @property
    def lambda_count(self) -> int:
        return self.p_lambda.shape[0]

    @property
    def num_settings_a(self) -> int:
        return self.outcome_tables.shape[1]

    @property
    def num_settings_b(self) -> int:
        return self.outcome_tables.shape[2]


@dataclass(frozen=True)
class LambdaClassification:
    local: tuple[int, ...]
    nonlocal_: tuple[int, ...]
    free: tuple[int, ...]
    nonfree: tuple[int, ...]


@dataclass(frozen=True)
class ModelMeasures:
    locality_mass: float
    freedom_mass: float


def _frozen(arr, shape, what: str) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True, order="C")
    if out.shape != shape:
        raise StructureError(f"{what} must have shape {shape}, got {out.shape}")
    out.flags.writeable = False
    return out


def make_model(
    p_lambda,
    p_lambda_given_xy,
    outcome_tables,
    settings: SettingsDistribution,
    factorized: FactorizedTables | None = None,
) -> HVModel:
    """Shape-checked, frozen-array constructor."""
    tables = np.asarray(outcome_tables, dtype=np.float64)
    if tables.ndim != 5 or tables.shape[3:] != (2, 2):
        raise StructureError(
            f"outcome tables must have shape (K, M_A, M_B, 2, 2), got {tables.shape}"
        )
    k, ma, mb = tables.shape[:3]
    if k < 1:
        raise StructureError("a model needs at least one hidden variable")
    if (settings.num_settings_a, settings.num_settings_b) != (ma, mb):
        raise StructureError(
            "settings distribution shape "
            f"({settings.num_settings_a}, {settings.num_settings_b}) "
            f"does not match outcome tables ({ma}, {mb})"
        )
    if factorized is not None:
        fa = _frozen(factorized.alice, (k, ma, 2), "factorized alice tables")
        fb = _frozen(factorized.bob, (k, mb, 2), "factorized bob tables")
        factorized = FactorizedTables(fa, fb)
    return HVModel(
        p_lambda=_frozen(p_lambda, (k,), "p_lambda"),
        p_lambda_given_xy=_frozen(p_lambda_given_xy, (k, ma, mb), "p_lambda_given_xy"),
        outcome_tables=_frozen(tables, (k, ma, mb, 2, 2), "outcome_tables"),
        settings=settings,
        factorized=factorized,
    )


def validate_model(m: HVModel, tol: Tolerance = DEFAULT_TOLERANCE) -> ValidationReport:
    """Normalization and non-negativity of every stored distribution."""
    out: list[Violation] = []
    p = m.p_lambda
    if np.any(p < -tol.eps):
        k = int(np.argmin(p))
        out.append(Violation("negative", ("p_lambda", k), float(-p[k])))
    if abs(p.sum() - 1.0) > tol.eps:
        out.append(Violation("normalization", ("p_lambda",), float(abs(p.sum() - 1.0))))
    cond = m.p_lambda_given_xy
    if np.any(cond < -tol.eps):
        idx = np.unravel_index(int(np.argmin(cond)), cond.shape)
        out.append(Violation("negative", ("p_lambda_given_xy",) + tuple(map(int, idx)), float(-cond[idx])))
    col_sums = cond.sum(axis=0)
    bad = np.abs(col_sums - 1.0) > tol.eps
    for x, y in zip(*np.nonzero(bad)):
        out.append(
            Violation(
                "conditional_normalization",
                (int(x), int(y)),
                float(abs(col_sums[x, y] - 1.0)),
            )
        )
    tables = m.outcome_tables
    if np.any(tables < -tol.eps):
        idx = np.unravel_index(int(np.argmin(tables)), tables.shape)
        out.append(Violation("negative", ("outcome_tables",) + tuple(map(int, idx)), float(-tables[idx])))
    t_sums = tables.sum(axis=(3, 4))
    bad = np.abs(t_sums - 1.0) > tol.eps
    for k, x, y in zip(*np.nonzero(bad)):
        out.append(
            Violation(
                "normalization",
                ("outcome_tables", int(k), int(x), int(y)),
                float(abs(t_sums[k, x, y] - 1.0)),
            )
        )
    for v in validate_settings(m.settings, tol).violations:
        out.append(Violation(v.kind, ("settings",) + v.location, v.magnitude))
    if m.factorized is not None:
        prod = m.factorized.alice[:, :, None, :, None] * m.factorized.bob[:, None, :, None, :]
        gap = float(np.max(np.abs(prod - tables)))
        if gap > tol.eps:
            out.append(Violation("factorized_mismatch", (), gap))
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# Classification and measures.
# ---------------------------------------------------------------------------


def classify(m: HVModel, tol: Tolerance = DEFAULT_TOLERANCE) -> LambdaClassification:
    """Partition the hidden variables into local/non-local and free/non-free.

    lambda is local when, at every (x, y), its outcome table equals the
    product of its own marginals *and* those marginals do not depend on
    the other party's setting (existence of setting-local response
    functions).  lambda is free when P(lambda | x, y) equals P(lambda)
    for every setting pair.  All comparisons are entrywise within tol.
    """
    t = m.outcome_tables
    pa = t.sum(axis=4)  # (K, MA, MB, 2) Alice marginal at each (x, y)
    pb = t.sum(axis=3)  # (K, MA, MB, 2) Bob marginal
    prod = pa[:, :, :, :, None] * pb[:, :, :, None, :]
    factor_gap = np.abs(t - prod).max(axis=(1, 2, 3, 4))
    a_dep = np.abs(pa - pa[:, :, :1, :]).max(axis=(1, 2, 3))  # y-dependence
    b_dep = np.abs(pb - pb[:, :1, :, :]).max(axis=(1, 2, 3))  # x-dependence
    local_mask = (factor_gap <= tol.eps) & (a_dep <= tol.eps) & (b_dep <= tol.eps)

    free_gap = np.abs(m.p_lambda_given_xy - m.p_lambda[:, None, None]).max(axis=(1, 2))
    free_mask = free_gap <= tol.eps

    idx = np.arange(m.lambda_count)
    return LambdaClassification(
        local=tuple(int(i) for i in idx[local_mask]),
        nonlocal_=tuple(int(i) for i in idx[~local_mask]),
        free=tuple(int(i) for i in idx[free_mask]),
        nonfree=tuple(int(i) for i in idx[~free_mask]),
    )


def measures(m: HVModel, tol: Tolerance = DEFAULT_TOLERANCE) -> ModelMeasures:
    """Prior mass of the local and of the free hidden variables."""
    cls = classify(m, tol)
    return ModelMeasures(
        locality_mass=float(m.p_lambda[list(cls.local)].sum()) if cls.local else 0.0,
        freedom_mass=float(m.p_lambda[list(cls.free)].sum()) if cls.free else 0.0,
    )


# ---------------------------------------------------------------------------
# Reconstruction.
# ---------------------------------------------------------------------------


def reconstruct_behaviour(m: HVModel) -> Behaviour:
    """P(a, b | x, y) = sum_k P(a, b | x, y, k) P(k | x, y)."""
    table = np.einsum("kxyab,kxy->xyab", m.outcome_tables, m.p_lambda_given_xy)
    return Behaviour.from_table(table)


def reconstruct_settings(
    m: HVModel, tol: Tolerance = DEFAULT_TOLERANCE
) -> SettingsDistribution:
    """Recover P(x, y) = sum_k P(x, y | k) P(k), inverting the stored
    conditionals via Bayes against the stored setting distribution.

    Raises ModelError when prior, conditionals and settings are not
    Bayes-consistent (i.e. P(x, y | k) would not normalize).
    """
    s = m.settings.table
    # Bayes consistency: sum_xy P(k | x, y) P(x, y) must reproduce P(k).
    implied_prior = np.einsum("kxy,xy->k", m.p_lambda_given_xy, s)
    gap = float(np.max(np.abs(implied_prior - m.p_lambda)))
    if gap > tol.eps:
        raise ModelError(
            f"no setting distribution is Bayes-consistent with the stored "
            f"conditionals (worst prior residual {gap:.3e})"
        )
    # sum_k P(x,y|k) P(k) with P(x,y|k) = P(k|x,y) P(x,y) / P(k); the prior
    # cancels, zero-mass hidden variables contribute nothing.
    mask = m.p_lambda > 0.0
    out = s * m.p_lambda_given_xy[mask].sum(axis=0)
    return SettingsDistribution.from_table(out)


# ---------------------------------------------------------------------------
# Constructions.
# ---------------------------------------------------------------------------


def dilation_index(u: int, v: int, a: int, b: int, num_settings_b: int) -> int:
    """Position of hidden variable (u, v, alpha_a, beta_b) in a dilation."""
    return ((u * num_settings_b + v) * 2 + a) * 2 + b


def dilation_label(k: int, num_settings_b: int) -> tuple[int, int, int, int]:
    """Inverse of :func:`dilation_index`."""
    b = k % 2
    a = (k // 2) % 2
    uv = k // 4
    return uv // num_settings_b, uv % num_settings_b, a, b


def dilate(
    b: Behaviour,
    settings: SettingsDistribution,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> HVModel:
    """Local deterministic model reproducing ``b`` and ``settings`` exactly.

    One hidden variable per (setting pair, outcome pair): lambda = (u, v,
    alpha, beta) fixes both outcomes deterministically (hence locally) for
    every setting, occurs with prior P(alpha beta | u v) P(u v), and is
    only ever presented with the setting pair (u, v): P(lambda | x, y)
    vanishes unless (x, y) = (u, v), where it is P(alpha beta | x y).
    The reconstructed behaviour and settings are exact copies; the price
    is that no hidden variable with positive prior is free (for more than
    one setting pair).
    """
    report = validate(b, tol)
    if not report.valid:
        raise DomainError(f"dilation needs a valid behaviour: {report.violations[0]}")
    s_report = validate_settings(settings, tol)
    if not s_report.valid:
        raise DomainError(
            f"dilation needs a valid settings distribution: {s_report.violations[0]}"
        )
    ma, mb = b.num_settings_a, b.num_settings_b
    if (settings.num_settings_a, settings.num_settings_b) != (ma, mb):
        raise DomainError("behaviour and settings distribution shapes differ")
    k = ma * mb * 4
    p_lambda = np.zeros(k)
    cond = np.zeros((k, ma, mb))
    tables = np.zeros((k, ma, mb, 2, 2))
    fa = np.zeros((k, ma, 2))
    fb = np.zeros((k, mb, 2))
    for u in range(ma):
        for v in range(mb):
            for a in range(2):
                for bb in range(2):
                    lam = dilation_index(u, v, a, bb, mb)
                    p_lambda[lam] = b.table[u, v, a, bb] * settings.table[u, v]
                    cond[lam, u, v] = b.table[u, v, a, bb]
                    tables[lam, :, :, a, bb] = 1.0
                    fa[lam, :, a] = 1.0
                    fb[lam, :, bb] = 1.0
    return make_model(p_lambda, cond, tables, settings, FactorizedTables(fa, fb))


def trivial_free_model(
    b: Behaviour,
    settings: SettingsDistribution | None = None,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> HVModel:
    """Single-lambda model: the behaviour itself is the outcome table.

    Fully free by construction (K = 1 forces P(lambda | x, y) = 1), and
    local exactly when the behaviour factorizes setting-locally."""
    report = validate(b, tol)
    if not report.valid:
        raise DomainError(f"model needs a valid behaviour: {report.violations[0]}")
    ma, mb = b.num_settings_a, b.num_settings_b
    if settings is None:
        settings = SettingsDistribution.uniform(ma, mb)
    if (settings.num_settings_a, settings.num_settings_b) != (ma, mb):
        raise DomainError("behaviour and settings distribution shapes differ")
    return make_model(
        np.ones(1),
        np.ones((1, ma, mb)),
        b.table[None, :, :, :, :],
        settings,
    )


# ---------------------------------------------------------------------------
# Combinators.
# ---------------------------------------------------------------------------


def compose(
    components: Sequence[tuple[float, HVModel]],
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> HVModel:
    """Mix models on the disjoint union of their hidden-variable spaces.

    Component weights scale both the priors and the conditionals, keeping
    every (x, y) column normalized; outcome tables ride along unchanged.
    All components must share the setting counts and the same settings
    distribution (they describe one experiment).
    """
    if not components:
        raise ModelError("compose needs at least one component")
    weights = np.array([w for w, _ in components], dtype=np.float64)
    models = [m for _, m in components]
    if np.any(weights < -tol.eps) or abs(weights.sum() - 1.0) > tol.eps:
        raise ModelError("component weights must be non-negative and sum to 1")
    weights = np.clip(weights, 0.0, None)
    ma, mb = models[0].num_settings_a, models[0].num_settings_b
    s_table = models[0].settings.table
    for m in models[1:]:
        if (m.num_settings_a, m.num_settings_b) != (ma, mb):
            raise ModelError("components must share setting counts")
        if np.max(np.abs(m.settings.table - s_table)) > tol.eps:
            raise ModelError("components must share the settings distribution")
    p_lambda = np.concatenate([w * m.p_lambda for w, m in zip(weights, models)])
    cond = np.concatenate([w * m.p_lambda_given_xy for w, m in zip(weights, models)])
    tables = np.concatenate([m.outcome_tables for m in models])
    factorized = None
    if all(m.factorized is not None for m in models):
        factorized = FactorizedTables(
            np.concatenate([m.factorized.alice for m in models]),
            np.concatenate([m.factorized.bob for m in models]),
        )
    return make_model(p_lambda, cond, tables, models[0].settings, factorized)


def restrict(
    m: HVModel,
    subset: Iterable[int],
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> tuple[float, HVModel]:
    """Condition the model on ``lambda in subset``.

    Returns ``(p_S, restricted)`` where p_S is the prior mass of the
    subset.  Priors are rescaled by 1/p_S.  Conditionals are rescaled
    per (x, y) column by the subset's conditional mass at that column;
    when that mass is constant across columns (the case for the free and
    the non-free part of any model) this is exactly division by p_S.
    Columns where the subset has no conditional mass are settings the
    restricted model is never asked about; they fall back to the
    restricted prior.  The settings distribution is conditioned via
    Bayes accordingly.
    """
    idx = sorted({int(i) for i in subset})
    if not idx:
        raise DomainError("restriction needs a non-empty subset")
    if idx[0] < 0 or idx[-1] >= m.lambda_count:
        raise DomainError("restriction subset out of range")
    p_s = float(m.p_lambda[idx].sum())
    if p_s <= 0.0:
        raise DomainError("restriction subset must carry positive prior mass")
    new_prior = m.p_lambda[idx] / p_s
    cond = m.p_lambda_given_xy[idx]
    col_mass = cond.sum(axis=0)  # (MA, MB)
    new_cond = np.empty_like(cond)
    probed = col_mass > tol.eps
    for x in range(m.num_settings_a):
        for y in range(m.num_settings_b):
            if probed[x, y]:
                new_cond[:, x, y] = cond[:, x, y] / col_mass[x, y]
            else:
                new_cond[:, x, y] = new_prior
    new_settings = SettingsDistribution.from_table(
        m.settings.table * col_mass / p_s
    )
    factorized = None
    if m.factorized is not None:
        factorized = FactorizedTables(
            m.factorized.alice[idx], m.factorized.bob[idx]
        )
    return p_s, make_model(
        new_prior, new_cond, m.outcome_tables[idx], new_settings, factorized
    )


def readjust_settings(
    m: HVModel,
    new_settings: SettingsDistribution,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> HVModel:
    """Rebuild a fully local model for a different setting distribution,
    preserving its behaviour and its freedom mass.

    The free part keeps its hidden variables (their conditionals are
    installed as the prior, which is what Bayes dictates for free
    lambdas under any setting distribution).  The non-free part is
    replaced wholesale by the dilation of the behaviour it reconstructs,
    which is local and carries zero freedom mass, matching the mass the
    non-free part contributed before.
    """
    s_report = validate_settings(new_settings, tol)
    if not s_report.valid:
        raise DomainError(f"invalid settings distribution: {s_report.violations[0]}")
    if not new_settings.nontrivial:
        raise DomainError(
            "readjusting needs a setting distribution that probes every pair"
        )
    if (new_settings.num_settings_a, new_settings.num_settings_b) != (
        m.num_settings_a,
        m.num_settings_b,
    ):
        raise DomainError("model and new settings distribution shapes differ")
    cls = classify(m, tol)
    if cls.nonlocal_:
        raise DomainError(
            f"readjusting is defined for fully local models; hidden variables "
            f"{cls.nonlocal_[:4]}... are not local"
        )
    p_free = float(m.p_lambda[list(cls.free)].sum()) if cls.free else 0.0

    def _free_rebuild(prior, tables, factorized):
        cond = np.repeat(prior[:, None, None], m.num_settings_a, axis=1)
        cond = np.repeat(cond, m.num_settings_b, axis=2)
        return make_model(prior, cond, tables, new_settings, factorized)

    if p_free >= 1.0 - tol.eps:
        return _free_rebuild(m.p_lambda.copy(), m.outcome_tables, m.factorized)
    if p_free <= tol.eps:
        return dilate(reconstruct_behaviour(m), new_settings, tol)

    _, free_part = restrict(m, cls.free, tol)
    free_fact = free_part.factorized
    free_model = _free_rebuild(
        free_part.p_lambda.copy(), free_part.outcome_tables, free_fact
    )
    _, nonfree_part = restrict(m, cls.nonfree, tol)
    dilated = dilate(reconstruct_behaviour(nonfree_part), new_settings, tol)
    return compose([(p_free, free_model), (1.0 - p_free, dilated)], tol)


# ---------------------------------------------------------------------------
# JSON interchange.
# ---------------------------------------------------------------------------


def model_to_jsonable(m: HVModel) -> dict:
    """Plain-Python dict mirroring the model's fields, lambda-indexed."""
    out = {
        "num_lambda": m.lambda_count,
        "num_settings_a": m.num_settings_a,
        "num_settings_b": m.num_settings_b,
        "p_lambda": m.p_lambda.tolist(),
        "p_lambda_given_xy": m.p_lambda_given_xy.tolist(),
        "outcome_tables": m.outcome_tables.tolist(),
        "settings_distribution": m.settings.table.tolist(),
    }
    if m.factorized is not None:
        out["factorized"] = {
            "alice": m.factorized.alice.tolist(),
            "bob": m.factorized.bob.tolist(),
        }
    return out


def model_from_jsonable(obj) -> HVModel:
    """Inverse of :func:`model_to_jsonable`; structural checks only."""
    if not isinstance(obj, dict):
        raise StructureError(f"model JSON must be an object, got {type(obj).__name__}")
    for key in (
        "p_lambda",
        "p_lambda_given_xy",
        "outcome_tables",
        "settings_distribution",
    ):
        if key not in obj:
            raise StructureError(f"model JSON is missing {key!r}")
    settings = SettingsDistribution.from_table(obj["settings_distribution"])
    factorized = None
    if obj.get("factorized") is not None:
        fact = obj["factorized"]
        if not isinstance(fact, dict) or "alice" not in fact or "bob" not in fact:
            raise StructureError(
                "factorized tables must be an object with 'alice' and 'bob'"
            )
        factorized = FactorizedTables(
            np.asarray(fact["alice"], dtype=np.float64),
            np.asarray(fact["bob"], dtype=np.float64),
        )
    try:
        tables = np.asarray(obj["outcome_tables"], dtype=np.float64)
        prior = np.asarray(obj["p_lambda"], dtype=np.float64)
        cond = np.asarray(obj["p_lambda_given_xy"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise StructureError(f"model JSON contains a ragged or non-numeric array: {exc}")
    model = make_model(prior, cond, tables, settings, factorized)
    for key, declared in (
        ("num_lambda", model.lambda_count),
        ("num_settings_a", model.num_settings_a),
        ("num_settings_b", model.num_settings_b),
    ):
        if key in obj and obj[key] != declared:
            raise StructureError(
                f"model JSON declares {key}={obj[key]} but arrays imply {declared}"
            )
    return model
