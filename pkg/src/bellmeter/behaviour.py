"""Data model for two-party, binary-outcome measurement statistics.

A behaviour is the table P(a, b | x, y) for settings x of Alice and y of
Bob and outcomes a, b in {+1, -1}.  Tables are stored as read-only float64
arrays of shape (M_A, M_B, 2, 2), indexed [x][y][a][b] with outcome index
0 meaning +1 and index 1 meaning -1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, StructureError

#: Value of outcome index 0 and 1.
OUTCOME_VALUES = (1.0, -1.0)


@dataclass(frozen=True)
class Tolerance:
    """Numerical tolerance for probabilistic comparisons."""

    eps: float = 1e-9

    def __post_init__(self) -> None:
        if not (self.eps >= 0.0 and np.isfinite(self.eps)):
            raise DomainError(f"tolerance must be finite and >= 0, got {self.eps}")


DEFAULT_TOLERANCE = Tolerance()


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True, order="C")
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Behaviour:
    """Joint conditional outcome table P(a, b | x, y)."""

    table: np.ndarray

    @staticmethod
    def from_table(table: np.ndarray | Sequence) -> "Behaviour":
        arr = np.asarray(table, dtype=np.float64)
        if arr.ndim != 4 or arr.shape[2:] != (2, 2):
            raise StructureError(
                f"behaviour table must have shape (M_A, M_B, 2, 2), got {arr.shape}"
            )
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise StructureError("behaviour needs at least one setting per party")
        return Behaviour(table=_freeze(arr))

    @property
    def num_settings_a(self) -> int:
        return self.table.shape[0]

    @property
    def num_settings_b(self) -> int:
        return self.table.shape[1]


@dataclass(frozen=True, eq=False)
class SettingsDistribution:
    """Joint distribution P(x, y) over setting pairs."""

    table: np.ndarray

    @staticmethod
    def from_table(table: np.ndarray | Sequence) -> "SettingsDistribution":
        arr = np.asarray(table, dtype=np.float64)
        if arr.ndim != 2:
            raise StructureError(
                f"settings distribution must be a 2-d table, got shape {arr.shape}"
            )
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise StructureError("settings distribution needs at least one cell")
        return SettingsDistribution(table=_freeze(arr))

    @staticmethod
    def uniform(num_settings_a: int, num_settings_b: int | None = None) -> "SettingsDistribution":
        mb = num_settings_a if num_settings_b is None else num_settings_b
        cells = num_settings_a * mb
        return SettingsDistribution.from_table(
            np.full((num_settings_a, mb), 1.0 / cells)
        )

    @property
    def num_settings_a(self) -> int:
        return self.table.shape[0]

    @property
    def num_settings_b(self) -> int:
        return self.table.shape[1]

    @property
    def nontrivial(self) -> bool:
        """True when every setting pair has strictly positive probability."""
        return bool(np.all(self.table > 0.0))


@dataclass(frozen=True)
class Violation:
    kind: str  # "negative", "excess", "normalization"
    location: tuple
    magnitude: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def valid(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class SignallingWitness:
    """Marginal of `party` at `setting`, outcome index `outcome`, differs
    between the two other-party settings in `other_settings`."""

    party: str  # "alice" or "bob"
    setting: int
    outcome: int
    other_settings: tuple[int, int]
    discrepancy: float


def validate(b: Behaviour, tol: Tolerance = DEFAULT_TOLERANCE) -> ValidationReport:
    """Check entrywise non-negativity and per-(x, y) normalization."""
    t = b.table
    out: list[Violation] = []
    for idx in zip(*np.nonzero(t < -tol.eps)):
        loc = tuple(int(i) for i in idx)
        out.append(Violation("negative", loc, float(-t[loc])))
    for idx in zip(*np.nonzero(t > 1.0 + tol.eps)):
        loc = tuple(int(i) for i in idx)
        out.append(Violation("excess", loc, float(t[loc] - 1.0)))
    sums = t.sum(axis=(2, 3))
    for idx in zip(*np.nonzero(np.abs(sums - 1.0) > tol.eps)):
        loc = tuple(int(i) for i in idx)
        out.append(Violation("normalization", loc, float(abs(sums[loc] - 1.0))))
    return ValidationReport(tuple(out))


def validate_settings(
    s: SettingsDistribution, tol: Tolerance = DEFAULT_TOLERANCE
) -> ValidationReport:
    t = s.table
    out: list[Violation] = []
    for idx in zip(*np.nonzero(t < -tol.eps)):
        loc = tuple(int(i) for i in idx)
        out.append(Violation("negative", loc, float(-t[loc])))
    total = float(t.sum())
    if abs(total - 1.0) > tol.eps:
        out.append(Violation("normalization", (), abs(total - 1.0)))
    return ValidationReport(tuple(out))


def marginal_alice(b: Behaviour) -> np.ndarray:
    """P(a | x, y) as an (M_A, M_B, 2) array (summed over Bob's outcome)."""
    return b.table.sum(axis=3)


def marginal_bob(b: Behaviour) -> np.ndarray:
    """P(b | x, y) as an (M_A, M_B, 2) array (summed over Alice's outcome)."""
    return b.table.sum(axis=2)


def is_non_signalling(
    b: Behaviour, tol: Tolerance = DEFAULT_TOLERANCE
) -> tuple[bool, SignallingWitness | None]:
    """Decide whether each party's marginals ignore the other's setting.

    Returns ``(True, None)`` or ``(False, witness)`` where the witness
    carries the worst offending marginal discrepancy.
    """
    ma = marginal_alice(b)  # (MA, MB, 2); must not depend on y
    mb = marginal_bob(b)  # (MA, MB, 2); must not depend on x
    worst: SignallingWitness | None = None

    def consider(party: str, setting: int, outcome: int, pair: tuple[int, int], gap: float):
        nonlocal worst
        if gap > tol.eps and (worst is None or gap > worst.discrepancy):
            worst = SignallingWitness(party, setting, outcome, pair, gap)

    for x in range(b.num_settings_a):
        for a in range(2):
            col = ma[x, :, a]
            y1 = int(np.argmin(col))
            y2 = int(np.argmax(col))
            consider("alice", x, a, (y1, y2), float(col[y2] - col[y1]))
    for y in range(b.num_settings_b):
        for bo in range(2):
            col = mb[:, y, bo]
            x1 = int(np.argmin(col))
            x2 = int(np.argmax(col))
            consider("bob", y, bo, (x1, x2), float(col[x2] - col[x1]))
    return (worst is None), worst


def correlator(b: Behaviour, x: int, y: int) -> float:
    """Expectation of the +-1 outcome product at setting pair (x, y)."""
    if not (0 <= x < b.num_settings_a and 0 <= y < b.num_settings_b):
        raise DomainError(f"setting pair ({x}, {y}) out of range")
    cell = b.table[x, y]
    return float(cell[0, 0] - cell[0, 1] - cell[1, 0] + cell[1, 1])


def mix(behaviours: Iterable[Behaviour], weights: Iterable[float]) -> Behaviour:
    """Convex combination of behaviours with matching setting counts."""
    bs = list(behaviours)
    ws = [float(w) for w in weights]
    if len(bs) != len(ws) or not bs:
        raise DomainError("mix needs equally many behaviours and weights")
    if any(w < 0 for w in ws) or abs(sum(ws) - 1.0) > 1e-12:
        raise DomainError("mixture weights must be non-negative and sum to 1")
    shape = bs[0].table.shape
    if any(b.table.shape != shape for b in bs):
        raise DomainError("mixture components must share setting counts")
    acc = np.zeros(shape)
    for w, b in zip(ws, bs):
        acc += w * b.table
    return Behaviour.from_table(acc)


# ---------------------------------------------------------------------------
# JSON interchange.
#
# Behaviour documents:
#   {"num_settings_a": MA, "num_settings_b": MB,
#    "probabilities": [x][y][a][b] nested lists,
#    "settings_distribution": [x][y] nested lists (optional)}
# ---------------------------------------------------------------------------


def _clamp_small_negatives(arr: np.ndarray, eps: float, what: str) -> np.ndarray:
    mask = (arr < 0.0) & (arr >= -eps)
    n = int(mask.sum())
    if n:
        # File round-trips and LP output produce -1e-17-scale noise; zero it
        # here so downstream non-negativity contracts hold exactly.
        warnings.warn(
            f"clamped {n} slightly negative {what} entr{'y' if n == 1 else 'ies'} to 0",
            stacklevel=3,
        )
        arr = arr.copy()
        arr[mask] = 0.0
    return arr


def behaviour_to_jsonable(
    b: Behaviour, settings: SettingsDistribution | None = None
) -> dict:
    doc: dict = {
        "num_settings_a": b.num_settings_a,
        "num_settings_b": b.num_settings_b,
        "probabilities": b.table.tolist(),
    }
    if settings is not None:
        doc["settings_distribution"] = settings.table.tolist()
    return doc


def behaviour_from_jsonable(
    doc: dict, tol: Tolerance = DEFAULT_TOLERANCE
) -> tuple[Behaviour, SettingsDistribution | None]:
    """Parse a behaviour document; clamps tiny negative noise on load."""
    if not isinstance(doc, dict):
        raise StructureError("behaviour document must be a JSON object")
    try:
        ma = int(doc["num_settings_a"])
        mb = int(doc["num_settings_b"])
        probs = doc["probabilities"]
    except (KeyError, TypeError, ValueError) as exc:
        raise StructureError(f"behaviour document missing/invalid field: {exc}") from exc
    try:
        arr = np.asarray(probs, dtype=np.float64)
    except ValueError as exc:
        raise StructureError(f"probabilities are not a rectangular table: {exc}") from exc
    if arr.shape != (ma, mb, 2, 2):
        raise StructureError(
            f"probabilities shape {arr.shape} does not match "
            f"declared ({ma}, {mb}, 2, 2)"
        )
    arr = _clamp_small_negatives(arr, tol.eps, "probability")
    behaviour = Behaviour.from_table(arr)
    settings = None
    if doc.get("settings_distribution") is not None:
        s_arr = np.asarray(doc["settings_distribution"], dtype=np.float64)
        if s_arr.shape != (ma, mb):
            raise StructureError(
                f"settings_distribution shape {s_arr.shape} does not match ({ma}, {mb})"
            )
        s_arr = _clamp_small_negatives(s_arr, tol.eps, "settings")
        settings = SettingsDistribution.from_table(s_arr)
    return behaviour, settings


def settings_from_jsonable(
    doc, tol: Tolerance = DEFAULT_TOLERANCE
) -> SettingsDistribution:
    arr = np.asarray(doc, dtype=np.float64)
    if arr.ndim != 2:
        raise StructureError("settings distribution must be a 2-d nested list")
    arr = _clamp_small_negatives(arr, tol.eps, "settings")
    return SettingsDistribution.from_table(arr)
