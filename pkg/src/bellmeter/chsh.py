"""CHSH expressions and the closed-form failure measure for two settings.

For a 2x2-setting behaviour with correlators E_xy the four CHSH values are

    S_1 = +E00 + E01 + E10 - E11
    S_2 = +E00 + E01 - E10 + E11
    S_3 = +E00 - E01 + E10 + E11
    S_4 = -E00 + E01 + E10 + E11

i.e. each S_i flips the sign of exactly one correlator.  For non-signalling
behaviours at most one |S_i| can exceed the local bound 2, and the largest
hidden-variable mass that can stay local (equivalently: keep the settings
free) is 1 when max_i |S_i| <= 2 and (4 - max_i |S_i|) / 2 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .behaviour import DEFAULT_TOLERANCE, Behaviour, Tolerance, correlator
from .errors import DomainError

#: Sign matrices of S_1..S_4 over the correlator grid [x][y].
CHSH_SIGNS = (
    ((1.0, 1.0), (1.0, -1.0)),
    ((1.0, 1.0), (-1.0, 1.0)),
    ((1.0, -1.0), (1.0, 1.0)),
    ((-1.0, 1.0), (1.0, 1.0)),
)


@dataclass(frozen=True)
class ChshReport:
    s_values: tuple[float, float, float, float]
    s_max: float
    measure: float


def _require_two_settings(b: Behaviour) -> None:
    if b.num_settings_a != 2 or b.num_settings_b != 2:
        raise DomainError(
            "CHSH quantities need exactly two settings per party, got "
            f"{b.num_settings_a}x{b.num_settings_b}"
        )


def chsh_values(b: Behaviour) -> tuple[float, float, float, float]:
    """The four CHSH combinations of the correlators of ``b``."""
    _require_two_settings(b)
    e = [[correlator(b, x, y) for y in range(2)] for x in range(2)]
    values = []
    for signs in CHSH_SIGNS:
        values.append(sum(signs[x][y] * e[x][y] for x in range(2) for y in range(2)))
    return tuple(values)  # type: ignore[return-value]


def s_max_value(s_values: tuple[float, float, float, float]) -> float:
    return max(abs(s) for s in s_values)


def measure_from_smax(s_max: float, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """Largest hidden-variable mass that can behave locally (equivalently,
    with free settings), as a function of the largest |CHSH| value.

    Returns 1 for s_max <= 2 (a fully local and free model exists) and
    (4 - s_max)/2 beyond, hitting 0 at the algebraic maximum 4.
    """
    if not (-tol.eps <= s_max <= 4.0 + tol.eps):
        raise DomainError(f"s_max {s_max} outside [0, 4]")
    s = min(max(s_max, 0.0), 4.0)
    if s <= 2.0:
        return 1.0
    return (4.0 - s) / 2.0


def chsh_report(b: Behaviour, tol: Tolerance = DEFAULT_TOLERANCE) -> ChshReport:
    values = chsh_values(b)
    s_max = s_max_value(values)
    return ChshReport(values, s_max, measure_from_smax(s_max, tol))


def pairwise_bound_check(b: Behaviour, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """Check |S_i| + |S_j| <= 4 for all i != j.

    Holds for every non-signalling behaviour; in particular at most one
    CHSH combination can exceed 2 at a time.
    """
    values = chsh_values(b)
    return all(
        abs(values[i]) + abs(values[j]) <= 4.0 + tol.eps
        for i, j in combinations(range(4), 2)
    )
