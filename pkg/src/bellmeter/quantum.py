"""Two-qubit behaviours from Born's rule, plus chained Bell expressions.

States are |psi> = cos(theta/2)|00> + sin(theta/2)|11> with Schmidt angle
theta in [0, pi/2]; measurements are projective in the x-z plane, given by
the ket angle phi of the +1 outcome, |phi> = cos(phi)|0> + sin(phi)|1>.
All amplitudes involved are real, so the Born probabilities reduce to
squared real contractions; the test suite checks them against an
independent 4x4 density-matrix trace oracle.

For the maximally entangled state the correlator at ket angles (alpha,
beta) is cos(2(alpha - beta)): the factor 2 converts ket angles to
rotation angles on the Bloch equator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .behaviour import (
    DEFAULT_TOLERANCE,
    Behaviour,
    Tolerance,
    correlator,
    is_non_signalling,
    validate,
)
from .errors import DomainError

#: Enumerating 2**M_B sign vectors is capped here; beyond it the local
#: maximum must be supplied by the caller.
_S_LOC_ENUMERATION_CAP = 16


@dataclass(frozen=True)
class TwoQubitPureState:
    """Schmidt-diagonal pure state cos(theta/2)|00> + sin(theta/2)|11>."""

    theta: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.theta <= math.pi / 2 + 1e-12):
            raise DomainError(f"Schmidt angle must lie in [0, pi/2], got {self.theta}")

    def amplitudes(self) -> np.ndarray:
        """Real amplitudes over the computational basis |00>,|01>,|10>,|11>."""
        return np.array(
            [math.cos(self.theta / 2.0), 0.0, 0.0, math.sin(self.theta / 2.0)]
        )


def maximally_entangled() -> TwoQubitPureState:
    return TwoQubitPureState(math.pi / 2.0)


@dataclass(frozen=True)
class MeasurementBasis:
    """Projective qubit measurement in the x-z plane; ``angle`` is the ket
    angle of the +1 outcome."""

    angle: float

    def kets(self) -> np.ndarray:
        """Rows: the +1 and -1 outcome kets (orthonormal, real)."""
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, s], [-s, c]])


def born_behaviour(
    state: TwoQubitPureState,
    alice: list[MeasurementBasis] | tuple[MeasurementBasis, ...],
    bob: list[MeasurementBasis] | tuple[MeasurementBasis, ...],
) -> Behaviour:
    """P(a, b | x, y) = |<a_x| (x) <b_y| psi>|^2 for all setting pairs."""
    if not alice or not bob:
        raise DomainError("each party needs at least one measurement")
    psi = state.amplitudes()
    table = np.zeros((len(alice), len(bob), 2, 2))
    for x, basis_a in enumerate(alice):
        ka = basis_a.kets()
        for y, basis_b in enumerate(bob):
            kb = basis_b.kets()
            for ai in range(2):
                for bi in range(2):
                    amp = 0.0
                    for i in range(2):
                        for j in range(2):
                            amp += ka[ai, i] * kb[bi, j] * psi[2 * i + j]
                    table[x, y, ai, bi] = amp * amp
    b = Behaviour.from_table(table)
    # Born probabilities are non-negative, normalized and non-signalling
    # by construction; anything else is an arithmetic defect.
    assert validate(b).valid
    assert is_non_signalling(b)[0]
    return b


def tsirelson_settings() -> tuple[tuple[MeasurementBasis, ...], tuple[MeasurementBasis, ...]]:
    """The pinned two-setting pair reaching |S| = 2*sqrt(2) on the
    maximally entangled state: Alice at ket angles {0, pi/4}, Bob at
    {pi/8, 3*pi/8}."""
    alice = (MeasurementBasis(0.0), MeasurementBasis(math.pi / 4.0))
    bob = (MeasurementBasis(math.pi / 8.0), MeasurementBasis(3.0 * math.pi / 8.0))
    return alice, bob


def chsh_optimal_settings(
    theta: float,
) -> tuple[tuple[MeasurementBasis, ...], tuple[MeasurementBasis, ...]]:
    """Settings maximizing the first CHSH expression on the state with
    Schmidt angle theta: S_1 = 2*sqrt(1 + sin^2(theta)).

    Alice measures at ket angles {0, pi/4}; Bob at {chi/2, -chi/2} with
    tan(chi) = sin(theta).  At theta = 0 Bob's two settings coincide and
    S_1 degenerates to the local maximum 2.
    """
    chi = math.atan(math.sin(theta))
    alice = (MeasurementBasis(0.0), MeasurementBasis(math.pi / 4.0))
    bob = (MeasurementBasis(chi / 2.0), MeasurementBasis(-chi / 2.0))
    return alice, bob


def chained_settings(
    m: int,
) -> tuple[tuple[MeasurementBasis, ...], tuple[MeasurementBasis, ...]]:
    """Interleaved settings for the m-setting chained scenario.

    With step theta = pi / (2m - 1), Alice measures at i * theta and Bob
    at (j + 1/2) * theta, so the 2m - 1 adjacent pairs in the chain are
    separated by theta/2 in ket angle while Alice's first and Bob's last
    setting sit a quarter turn apart.
    """
    if m < 2:
        raise DomainError(f"the chained scenario needs at least 2 settings, got {m}")
    step = math.pi / (2 * m - 1)
    alice = tuple(MeasurementBasis(i * step) for i in range(m))
    bob = tuple(MeasurementBasis((j + 0.5) * step) for j in range(m))
    return alice, bob


# ---------------------------------------------------------------------------
# Bell expressions over correlators.
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BellExpression:
    """Linear expression sum_xy alpha[x,y] * E_xy with its algebraic
    maximum s_sharp = sum |alpha| and local maximum s_loc."""

    coefficients: np.ndarray
    s_sharp: float
    s_loc: float


def _enumerate_s_loc(alpha: np.ndarray) -> float:
    """max over deterministic +-1 assignments; exact, 2**M_B enumeration.

    For fixed Bob signs the optimal Alice signs follow by taking absolute
    values row-wise, so only Bob's side needs enumerating.
    """
    mb = alpha.shape[1]
    if mb > _S_LOC_ENUMERATION_CAP:
        raise DomainError(
            f"local-maximum enumeration is capped at {_S_LOC_ENUMERATION_CAP} "
            f"settings for Bob (got {mb}); pass s_loc explicitly"
        )
    n = 1 << mb
    signs = ((np.arange(n)[:, None] >> np.arange(mb)[None, :]) & 1) * 2.0 - 1.0
    row_sums = signs @ alpha.T  # (n, M_A)
    return float(np.abs(row_sums).sum(axis=1).max())


def bell_expression(coefficients, s_loc: float | None = None) -> BellExpression:
    alpha = np.asarray(coefficients, dtype=np.float64)
    if alpha.ndim != 2:
        raise DomainError("coefficients must form a 2-d matrix")
    s_sharp = float(np.abs(alpha).sum())
    if s_loc is None:
        s_loc = _enumerate_s_loc(alpha)
    if not s_loc <= s_sharp + 1e-12:
        raise DomainError(f"s_loc {s_loc} exceeds the algebraic maximum {s_sharp}")
    frozen = alpha.copy()
    frozen.flags.writeable = False
    return BellExpression(frozen, s_sharp, float(s_loc))


def chained_expression(m: int) -> BellExpression:
    """Chained Bell expression: + for the 2m-1 adjacent pairs
    (A_1 B_1), (A_2 B_1), (A_2 B_2), ..., (A_m B_m) and - for the closing
    pair (A_1 B_m).  Algebraic maximum 2m, local maximum 2(m - 1)."""
    if m < 2:
        raise DomainError(f"the chained expression needs at least 2 settings, got {m}")
    alpha = np.zeros((m, m))
    for i in range(m):
        alpha[i, i] = 1.0
        if i + 1 < m:
            alpha[i + 1, i] = 1.0
    alpha[0, m - 1] = -1.0
    # The local maximum 2(m-1) is exact for this pattern (flipping any
    # single sign around the chain costs two correlators); the test suite
    # re-derives it by enumeration for small m.
    return bell_expression(alpha, s_loc=2.0 * (m - 1))


def evaluate_expression(expr: BellExpression, b: Behaviour) -> float:
    """sum_xy alpha[x,y] * E_xy on the behaviour's correlators."""
    ma, mb = expr.coefficients.shape
    if (b.num_settings_a, b.num_settings_b) != (ma, mb):
        raise DomainError(
            f"expression is {ma}x{mb} but behaviour is "
            f"{b.num_settings_a}x{b.num_settings_b}"
        )
    total = 0.0
    for x in range(ma):
        for y in range(mb):
            c = expr.coefficients[x, y]
            if c != 0.0:
                total += c * correlator(b, x, y)
    return total


def free_choice_upper_bound(
    expr: BellExpression, b: Behaviour, tol: Tolerance = DEFAULT_TOLERANCE
) -> float:
    """Largest possible free (equivalently local) mass given the observed
    expression value: (s_sharp - S) / (s_sharp - s_loc), clamped to [0, 1].
    """
    denom = expr.s_sharp - expr.s_loc
    if denom <= tol.eps:
        raise DomainError(
            "expression has no gap between algebraic and local maximum"
        )
    s_value = evaluate_expression(expr, b)
    return min(max((expr.s_sharp - s_value) / denom, 0.0), 1.0)


def free_fraction_floor(theta: float) -> float:
    """cos(theta): no finite measurement scenario on the state with Schmidt
    angle theta can push the free mass below this, and optimized chained
    scenarios approach it."""
    if not (0.0 <= theta <= math.pi / 2 + 1e-12):
        raise DomainError(f"Schmidt angle must lie in [0, pi/2], got {theta}")
    return math.cos(theta)


@dataclass(frozen=True, eq=False)
class ChainedAnalysis:
    m: int
    behaviour: Behaviour
    s_value: float
    s_sharp: float
    s_loc: float
    bound: float
    envelope: float


def chained_analysis(m: int) -> ChainedAnalysis:
    """Chained scenario on the maximally entangled state.

    The quantum value is (2m-1) cos(pi/(2m-1)) + 1, giving the free-mass
    bound m - S/2; the envelope pi^2 / (4(2m-1)) dominates it and decays
    to zero, which is the ever-tighter-violation story as m grows.
    """
    alice, bob = chained_settings(m)
    behaviour = born_behaviour(maximally_entangled(), list(alice), list(bob))
    expr = chained_expression(m)
    s_value = evaluate_expression(expr, behaviour)
    bound = free_choice_upper_bound(expr, behaviour)
    envelope = math.pi**2 / (4.0 * (2 * m - 1))
    return ChainedAnalysis(
        m, behaviour, s_value, expr.s_sharp, expr.s_loc, bound, envelope
    )
