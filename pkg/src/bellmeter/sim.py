"""Monte Carlo simulation of hidden-variable models.

Each trial draws, in order, a hidden variable, a setting pair and an
outcome pair, all by inverse-CDF sampling from a per-trial SplitMix64
stream keyed by (seed, trial index).  Because every trial owns its own
stream, a run over [0, N) is bit-identical to any partition of it into
ranges — ``run_trial_range`` exists exactly for that kind of chunking.

Settings can come from the model's own distribution (hidden variable
first, then settings from P(x,y|lambda) via Bayes) or from an external
distribution; the latter is only meaningful when every hidden variable
is free, since otherwise P(x,y|lambda) is not independent of lambda and
no single external source reproduces the model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import simulate_trials
from .behaviour import DEFAULT_TOLERANCE, SettingsDistribution, Tolerance
from .errors import DomainError, StructureError
from .hvmodel import HVModel, classify, validate_model

_SETTINGS_SOURCES = ("model", "external")


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Trial count, master seed, and where the settings come from."""

    trials: int
    seed: int
    settings_source: str = "model"
    external_settings: SettingsDistribution | None = None

    def __post_init__(self) -> None:
        if self.trials < 0:
            raise StructureError(f"trial count must be non-negative, got {self.trials}")
        if not (0 <= self.seed < 2**64):
            raise StructureError("seed must fit in an unsigned 64-bit integer")
        if self.settings_source not in _SETTINGS_SOURCES:
            raise StructureError(
                f"settings_source must be one of {_SETTINGS_SOURCES}, "
                f"got {self.settings_source!r}"
            )
        if self.settings_source == "external" and self.external_settings is None:
            raise StructureError("external settings source needs external_settings")


@dataclass(frozen=True, eq=False)
class SimResult:
    """Counts from a finished run.

    ``counts[x, y, a, b]`` are outcome tallies, ``setting_counts[x, y]``
    their per-setting totals; ``local_trials`` / ``free_trials`` count
    trials whose hidden variable classified as local / free.
    """

    trials: int
    seed: int
    first_trial: int
    counts: np.ndarray
    setting_counts: np.ndarray
    local_trials: int
    free_trials: int

    def empirical_table(self) -> np.ndarray:
        """Relative frequencies P(a,b|x,y); NaN where a setting pair was
        never sampled."""
        freq = np.full(self.counts.shape, np.nan)
        seen = self.setting_counts > 0
        freq[seen] = self.counts[seen] / self.setting_counts[seen, None, None]
        return freq


def _cumulative_tables(
    model: HVModel, config: SimConfig, tol: Tolerance
) -> tuple[np.ndarray, np.ndarray, int, np.ndarray, np.ndarray, np.ndarray]:
    ma, mb = model.num_settings_a, model.num_settings_b
    k = model.lambda_count
    c = ma * mb

    cum_lambda = np.cumsum(model.p_lambda)

    cls = classify(model, tol)
    is_local = np.zeros(k, dtype=np.uint8)
    is_free = np.zeros(k, dtype=np.uint8)
    is_local[list(cls.local)] = 1
    is_free[list(cls.free)] = 1

    if config.settings_source == "external":
        if len(cls.free) != k:
            raise DomainError(
                "external settings require every hidden variable to be free "
                f"(only {len(cls.free)} of {k} are)"
            )
        ext = config.external_settings
        if ext.table.shape != (ma, mb):
            raise DomainError(
                f"external settings shape {ext.table.shape} does not match "
                f"the model's {(ma, mb)}"
            )
        cum_settings = np.cumsum(ext.table.reshape(1, c), axis=1)
        external = 1
    else:
        # P(x,y|lambda) = P(lambda|x,y) P(x,y) / P(lambda); hidden
        # variables of zero mass are never drawn, so give them uniform
        # rows rather than dividing by zero.
        joint = model.p_lambda_given_xy * model.settings.table[None, :, :]
        rows = np.empty((k, c))
        for i in range(k):
            mass = model.p_lambda[i]
            if mass > 0.0:
                rows[i] = (joint[i] / mass).reshape(c)
            else:
                rows[i] = 1.0 / c
        cum_settings = np.cumsum(rows, axis=1)
        external = 0

    cum_outcomes = np.cumsum(
        model.outcome_tables.reshape(k * c, 4), axis=1
    )
    return cum_lambda, cum_settings, external, cum_outcomes, is_local, is_free


def run_trial_range(
    model: HVModel,
    config: SimConfig,
    first_trial: int,
    n_trials: int,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> SimResult:
    """Simulate trials [first_trial, first_trial + n_trials).

    Counts from disjoint ranges under the same (model, config) add up to
    exactly the counts of one run over their union.
    """
    if first_trial < 0 or n_trials < 0:
        raise StructureError("trial range must be non-negative")
    report = validate_model(model, tol)
    if not report.valid:
        raise DomainError(f"model fails validation: {report.violations[0]}")

    cum_lambda, cum_settings, external, cum_outcomes, is_local, is_free = (
        _cumulative_tables(model, config, tol)
    )
    ma, mb = model.num_settings_a, model.num_settings_b
    c = ma * mb
    counts_ab = np.zeros(c * 4, dtype=np.int64)
    counts_xy = np.zeros(c, dtype=np.int64)
    n_local, n_free = simulate_trials(
        config.seed,
        first_trial,
        n_trials,
        np.ascontiguousarray(cum_lambda),
        np.ascontiguousarray(cum_settings),
        external,
        np.ascontiguousarray(cum_outcomes),
        is_local,
        is_free,
        counts_ab,
        counts_xy,
    )
    return SimResult(
        trials=n_trials,
        seed=config.seed,
        first_trial=first_trial,
        counts=counts_ab.reshape(ma, mb, 2, 2),
        setting_counts=counts_xy.reshape(ma, mb),
        local_trials=int(n_local),
        free_trials=int(n_free),
    )


def run(
    model: HVModel, config: SimConfig, tol: Tolerance = DEFAULT_TOLERANCE
) -> SimResult:
    """Simulate trials [0, config.trials)."""
    return run_trial_range(model, config, 0, config.trials, tol)
