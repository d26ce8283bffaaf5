"""Dense two-phase primal simplex for small linear programs.

Problems are stated as

    maximize    c . w
    subject to  A w <= u,   w >= 0

which is the exact shape of the local-content program (columns indexed by
deterministic vertices, rows by probability-table cells).  The solver is
deliberately self-contained: the pivot loop uses Bland's rule (smallest
eligible index enters; ties in the ratio test break toward the smallest
basic variable index), which cannot cycle and makes runs deterministic, at
the price of more pivots than steepest-edge rules.  The loop itself lives
in ``bellmeter._kernels`` (compiled when available, pure Python otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .behaviour import DEFAULT_TOLERANCE, Tolerance
from .errors import DomainError, SolverError

#: Pivot threshold: entries smaller than this are treated as zero when
#: choosing entering/leaving variables.  Separate from feasibility tolerance.
PIVOT_EPS = 1e-11

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"

_MAX_ITERATIONS = 1_000_000


@dataclass(frozen=True, eq=False)
class LpProblem:
    objective: np.ndarray  # (n,)
    constraint_matrix: np.ndarray  # (m, n)
    upper_bounds: np.ndarray  # (m,)

    @staticmethod
    def from_arrays(objective, constraint_matrix, upper_bounds) -> "LpProblem":
        c = np.asarray(objective, dtype=np.float64)
        a = np.asarray(constraint_matrix, dtype=np.float64)
        u = np.asarray(upper_bounds, dtype=np.float64)
        if a.ndim != 2 or c.ndim != 1 or u.ndim != 1:
            raise DomainError("LP needs a matrix A and vectors c, u")
        m, n = a.shape
        if c.shape != (n,) or u.shape != (m,):
            raise DomainError(
                f"inconsistent LP shapes: A {a.shape}, c {c.shape}, u {u.shape}"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(c)) and np.all(np.isfinite(u))):
            raise DomainError("LP data must be finite")
        return LpProblem(c, a, u)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    value: float | None
    x: np.ndarray | None
    iterations: int


def _build_phase1(a: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Tableau with slacks plus artificials for rows with negative bound."""
    m, n = a.shape
    neg_rows = np.nonzero(u < 0.0)[0]
    n_art = len(neg_rows)
    width = n + m + n_art + 1
    tab = np.zeros((m + 1, width))
    tab[:m, :n] = a
    tab[:m, n : n + m] = np.eye(m)
    tab[:m, -1] = u
    # Flip infeasible rows so the right-hand side is non-negative, then give
    # each one an artificial basic variable.
    art_col = n + m
    basis = np.empty(m, dtype=np.int64)
    basis[:] = n + np.arange(m)
    for k, i in enumerate(neg_rows):
        tab[i, :-1] *= -1.0
        tab[i, -1] *= -1.0
        tab[i, art_col + k] = 1.0
        basis[i] = art_col + k
    # Reduced costs for minimizing the sum of artificials: price out the
    # basic artificial rows.
    for i in neg_rows:
        tab[m, :] -= tab[i, :]
    tab[m, art_col : art_col + n_art] += 1.0
    return tab, basis, n_art, art_col


def _rebuild_objective(tab: np.ndarray, basis: np.ndarray, cost: np.ndarray) -> None:
    """Set the reduced-cost row for minimizing ``cost . vars``."""
    m = tab.shape[0] - 1
    row = np.zeros(tab.shape[1])
    row[: len(cost)] = cost
    for i in range(m):
        cb = cost[basis[i]] if basis[i] < len(cost) else 0.0
        if cb != 0.0:
            row -= cb * tab[i, :]
    tab[m, :] = row


def solve(
    problem: LpProblem,
    tol: Tolerance = DEFAULT_TOLERANCE,
    max_iterations: int = _MAX_ITERATIONS,
) -> LpSolution:
    """Solve the LP; statuses are "optimal", "infeasible" or "unbounded".

    On "optimal" the returned point is re-checked against the constraints
    (A w <= u + eps entrywise, w >= -eps) and the value recomputed as c . w;
    a failed check raises SolverError rather than returning silently.
    """
    a = problem.constraint_matrix
    c = problem.objective
    u = problem.upper_bounds
    m, n = a.shape
    total_iters = 0

    if np.any(u < 0.0):
        tab, basis, n_art, art_col = _build_phase1(a, u)
        status, iters = _kernels.simplex_pivots(
            tab, basis, art_col, PIVOT_EPS, max_iterations
        )
        total_iters += iters
        if status == 2 or (status == 0 and -tab[m, -1] > tol.eps):
            # Positive residual infeasibility; iteration-cap counts as a
            # failure to certify feasibility too.
            if status == 2:
                raise SolverError(f"phase 1 hit the {max_iterations}-pivot cap")
            return LpSolution(STATUS_INFEASIBLE, None, None, total_iters)
        if status == 1:
            raise SolverError("phase 1 reported an unbounded auxiliary program")
        # Drive any artificial still basic (at level ~0) out of the basis.
        for i in range(m):
            if basis[i] >= art_col:
                pivot_col = -1
                for j in range(art_col):
                    if abs(tab[i, j]) > PIVOT_EPS:
                        pivot_col = j
                        break
                if pivot_col >= 0:
                    piv = tab[i, pivot_col]
                    tab[i, :] /= piv
                    for r in range(m + 1):
                        if r != i and tab[r, pivot_col] != 0.0:
                            tab[r, :] -= tab[r, pivot_col] * tab[i, :]
                    basis[i] = pivot_col
                # Otherwise the row is redundant; the artificial stays basic
                # at zero and can never re-enter (columns past art_col are
                # not eligible in phase 2).
        tab2 = tab
        n_enterable = art_col
    else:
        width = n + m + 1
        tab2 = np.zeros((m + 1, width))
        tab2[:m, :n] = a
        tab2[:m, n : n + m] = np.eye(m)
        tab2[:m, -1] = u
        basis = (n + np.arange(m)).astype(np.int64)
        n_enterable = n + m

    cost = np.zeros(n_enterable)
    cost[:n] = -c  # maximize c.w == minimize -c.w
    _rebuild_objective(tab2, basis, cost)
    status, iters = _kernels.simplex_pivots(
        tab2, basis, n_enterable, PIVOT_EPS, max_iterations
    )
    total_iters += iters
    if status == 2:
        raise SolverError(f"simplex hit the {max_iterations}-pivot cap")
    if status == 1:
        return LpSolution(STATUS_UNBOUNDED, None, None, total_iters)

    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab2[i, -1]
    # Post-hoc certificate: the reported point must actually be feasible.
    if np.any(x < -tol.eps):
        raise SolverError("simplex returned a point with negative coordinates")
    slack_violation = float(np.max(a @ x - u, initial=0.0))
    if slack_violation > tol.eps:
        raise SolverError(
            f"simplex returned an infeasible point (violation {slack_violation:.3e})"
        )
    value = float(c @ x)
    return LpSolution(STATUS_OPTIMAL, value, x, total_iters)
