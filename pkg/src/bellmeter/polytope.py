"""Local polytope machinery: deterministic vertices, PR boxes, and the
two decompositions of a non-signalling behaviour.

For two settings per party the non-signalling polytope has 24 extremal
points: 16 local deterministic vertices plus 8 PR boxes (one pair per
CHSH expression, saturating it at +4 and -4).  Two decomposition routes
are provided and kept deliberately independent of each other:

* ``decompose_onto_pr_box``: closed-form split b = p * local + (1-p) * PR
  with p = (4 - S_max) / 2, built by relabelling the behaviour so the
  violated CHSH expression becomes S_1 and peeling off the matching box.
* ``local_content_lp``: linear program maximizing the weight on local
  deterministic vertices, for any setting count within the vertex cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .behaviour import (
    DEFAULT_TOLERANCE,
    Behaviour,
    Tolerance,
    is_non_signalling,
    validate,
)
from .chsh import chsh_values
from .errors import DomainError
from .lp import STATUS_OPTIMAL, LpProblem, solve
from .rng import SplitMix64

#: Safety cap on 4**M, the number of deterministic vertices enumerated.
VERTEX_CAP = 4096


@dataclass(frozen=True, eq=False)
class LocalDeterministicVertex:
    """Deterministic strategy: fixed outcome index per setting, per party."""

    outputs_a: tuple[int, ...]
    outputs_b: tuple[int, ...]
    behaviour: Behaviour


@dataclass(frozen=True, eq=False)
class PrBox:
    """Extremal non-signalling box k (1-based); boxes 2i-1 and 2i saturate
    the i-th CHSH expression at +4 and -4 respectively."""

    index: int
    behaviour: Behaviour


@dataclass(frozen=True, eq=False)
class PrBoxDecomposition:
    p: float
    local_part: Behaviour
    pr_part: PrBox


@dataclass(frozen=True, eq=False)
class LocalContent:
    """LP split b = sum_j w_j D_j + (1 - mu) * remainder with mu = sum w_j."""

    mu: float
    weights: np.ndarray
    remainder: Behaviour | None


def _vertex_table(out_a: tuple[int, ...], out_b: tuple[int, ...]) -> np.ndarray:
    ma, mb = len(out_a), len(out_b)
    t = np.zeros((ma, mb, 2, 2))
    for x in range(ma):
        for y in range(mb):
            t[x, y, out_a[x], out_b[y]] = 1.0
    return t


def enumerate_local_vertices(
    num_settings_a: int, num_settings_b: int | None = None
) -> list[LocalDeterministicVertex]:
    """All deterministic local strategies (2**M_A * 2**M_B of them)."""
    ma = num_settings_a
    mb = ma if num_settings_b is None else num_settings_b
    if ma < 1 or mb < 1:
        raise DomainError("need at least one setting per party")
    count = (2**ma) * (2**mb)
    if count > VERTEX_CAP:
        raise DomainError(
            f"{count} deterministic vertices exceed the cap of {VERTEX_CAP}"
        )
    vertices = []
    for out_a in product((0, 1), repeat=ma):
        for out_b in product((0, 1), repeat=mb):
            vertices.append(
                LocalDeterministicVertex(
                    out_a, out_b, Behaviour.from_table(_vertex_table(out_a, out_b))
                )
            )
    return vertices


# The i-th CHSH expression assigns a minus sign to exactly one correlator
# cell; a box saturating it at +4 anti-correlates on that cell and
# correlates everywhere else.
_TWISTED_CELL = {1: (1, 1), 2: (1, 0), 3: (0, 1), 4: (0, 0)}

_CORRELATED = np.array([[0.5, 0.0], [0.0, 0.5]])
_ANTI = np.array([[0.0, 0.5], [0.5, 0.0]])


def pr_box(index: int) -> PrBox:
    """Extremal box ``index`` in 1..8 (see :class:`PrBox`)."""
    if not 1 <= index <= 8:
        raise DomainError(f"PR-box index must be in 1..8, got {index}")
    expression = (index + 1) // 2
    positive = index % 2 == 1
    twisted = _TWISTED_CELL[expression]
    t = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            anti = (x, y) == twisted
            if not positive:
                anti = not anti
            t[x, y] = _ANTI if anti else _CORRELATED
    return PrBox(index, Behaviour.from_table(t))


def pr_boxes() -> list[PrBox]:
    return [pr_box(k) for k in range(1, 9)]


def mix_extremal(weights) -> Behaviour:
    """Convex mixture over the 24 extremal points of the two-setting
    non-signalling polytope: the 16 local vertices (enumeration order)
    followed by the 8 PR boxes."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (24,):
        raise DomainError(f"need 24 weights, got shape {w.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise DomainError("weights must be non-negative and sum to 1")
    tables = [v.behaviour.table for v in enumerate_local_vertices(2)]
    tables += [box.behaviour.table for box in pr_boxes()]
    acc = np.zeros((2, 2, 2, 2))
    for wi, ti in zip(w, tables):
        acc += wi * ti
    return Behaviour.from_table(acc)


def sample_nonsignalling(seed: int, num_settings: int = 2) -> Behaviour:
    """Random non-signalling behaviour: Dirichlet(1,..,1) mixture over the
    24 extremal points, deterministic per seed (own SplitMix64 stream)."""
    if num_settings != 2:
        raise DomainError("sampling is implemented for two settings per party")
    rng = SplitMix64.stream(seed, 0)
    gammas = np.array([rng.exponential() for _ in range(24)])
    return mix_extremal(gammas / gammas.sum())


# ---------------------------------------------------------------------------
# Closed-form decomposition against the violated CHSH expression.
# ---------------------------------------------------------------------------

# Relabellings that map CHSH expression i to expression 1:
#   i=2: relabel Bob's settings (y -> 1-y); i=3: Alice's (x -> 1-x);
#   i=4: both.  A negative value is fixed by flipping Alice's outcomes.
# Each map is an involution, so applying it twice restores the original.


def _relabel(table: np.ndarray, flip_x: bool, flip_y: bool, flip_a: bool) -> np.ndarray:
    out = table
    if flip_x:
        out = out[::-1, :, :, :]
    if flip_y:
        out = out[:, ::-1, :, :]
    if flip_a:
        out = out[:, :, ::-1, :]
    return np.ascontiguousarray(out)


def _require_valid_ns(b: Behaviour, tol: Tolerance, op: str) -> None:
    report = validate(b, tol)
    if not report.valid:
        raise DomainError(f"{op} needs a valid behaviour: {report.violations[0]}")
    ok, witness = is_non_signalling(b, tol)
    if not ok:
        raise DomainError(f"{op} needs a non-signalling behaviour: {witness}")


def decompose_onto_pr_box(
    b: Behaviour, tol: Tolerance = DEFAULT_TOLERANCE
) -> PrBoxDecomposition:
    """Split ``b`` as p * local + (1 - p) * PR-box with p = (4 - S_max)/2.

    The violated CHSH expression (unique for non-signalling input) picks
    the box; the local part is the rescaled difference, which lands inside
    the local polytope with the relabelled |S_1| saturating 2 exactly.
    A behaviour with no violation (S_max <= 2) is its own local part with
    p = 1; a behaviour that itself saturates S_max = 4 is a PR box and
    gets p = 0 with a uniform local part by convention.
    """
    _require_valid_ns(b, tol, "PR-box decomposition")
    if b.num_settings_a != 2 or b.num_settings_b != 2:
        raise DomainError("PR-box decomposition needs two settings per party")
    values = chsh_values(b)
    abs_values = [abs(s) for s in values]
    s_max = max(abs_values)
    if s_max <= 2.0:
        return PrBoxDecomposition(1.0, b, pr_box(1))

    expression = abs_values.index(s_max) + 1
    positive = values[expression - 1] > 0
    box_index = 2 * expression - (1 if positive else 0)
    box = pr_box(box_index)
    p = (4.0 - s_max) / 2.0
    if p <= tol.eps:
        # The behaviour sits (numerically) on the extremal box itself.
        uniform = Behaviour.from_table(np.full((2, 2, 2, 2), 0.25))
        return PrBoxDecomposition(0.0, uniform, box)

    flip_x = expression in (3, 4)
    flip_y = expression in (2, 4)
    flip_a = not positive
    canon = _relabel(b.table, flip_x, flip_y, flip_a)
    box1 = pr_box(1).behaviour.table
    local_canon = (canon - (1.0 - p) * box1) / p
    local = _relabel(local_canon, flip_x, flip_y, flip_a)
    # Zero out the -1e-16-scale noise the subtraction leaves behind.
    local = np.where((local < 0.0) & (local >= -tol.eps), 0.0, local)
    local_b = Behaviour.from_table(local)
    report = validate(local_b, tol)
    if not report.valid:
        raise DomainError(
            f"local part left the polytope (worst: {report.violations[0]}); "
            "input is likely outside the non-signalling set"
        )
    return PrBoxDecomposition(p, local_b, box)


# ---------------------------------------------------------------------------
# LP route: maximal weight on local deterministic vertices.
# ---------------------------------------------------------------------------


def local_content_lp(b: Behaviour, tol: Tolerance = DEFAULT_TOLERANCE) -> LocalContent:
    """Maximize sum_j w_j subject to sum_j w_j D_j <= b entrywise, w >= 0.

    The optimum mu is the largest local mass; mu <= 1 is automatic because
    each vertex puts mass 1 in every (x, y) block.  For mu < 1 the rescaled
    remainder (b - sum w_j D_j) / (1 - mu) is itself a valid non-signalling
    behaviour, which is asserted before returning.
    """
    _require_valid_ns(b, tol, "local content")
    vertices = enumerate_local_vertices(b.num_settings_a, b.num_settings_b)
    n = len(vertices)
    cells = b.table.size
    a = np.empty((cells, n))
    for j, v in enumerate(vertices):
        a[:, j] = v.behaviour.table.reshape(-1)
    u = b.table.reshape(-1).copy()
    # Probability tables round-tripped through files carry -1e-17 noise;
    # the loader clamps it, so u >= 0 here and phase 1 is never needed.
    problem = LpProblem.from_arrays(np.ones(n), a, u)
    solution = solve(problem, tol)
    if solution.status != STATUS_OPTIMAL:
        # The zero vector is always feasible and the objective is bounded
        # by normalization, so anything else is a solver defect.
        raise DomainError(f"local-content LP ended with status {solution.status}")
    w = solution.x
    mu = float(min(max(solution.value, 0.0), 1.0))
    if 1.0 - mu <= tol.eps:
        return LocalContent(mu, w, None)
    residual = (u - a @ w).reshape(b.table.shape) / (1.0 - mu)
    residual = np.where((residual < 0.0) & (residual >= -tol.eps), 0.0, residual)
    remainder = Behaviour.from_table(residual)
    _require_valid_ns(remainder, tol, "LP remainder")
    return LocalContent(mu, w, remainder)
