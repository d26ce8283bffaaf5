"""Pure-Python kernels: reference implementations of the hot loops.

These mirror the compiled versions in ``_core.pyx`` operation for
operation.  Python floats are IEEE doubles, so with identical operation
order both backends produce bit-identical results; the test suite checks
that whenever the compiled module is available.
"""

from __future__ import annotations

from ..rng import GAMMA, mix64, stream_state

_MASK64 = (1 << 64) - 1
_UNIT = 1.0 / 9007199254740992.0  # 2**-53


def simplex_pivots(tab, basis, n_enterable, eps, max_iter):
    """Run Bland-rule pivots on ``tab`` until optimal/unbounded/capped.

    ``tab`` is the (m+1) x width tableau (objective row last, right-hand
    side in the last column); ``basis`` the length-m basic-variable index
    vector.  Both are numpy arrays and are updated in place.  Returns
    ``(status, iterations)`` with status 0 optimal, 1 unbounded, 2 cap.
    """
    m = tab.shape[0] - 1
    width = tab.shape[1]
    rhs = width - 1
    rows = [[float(v) for v in tab[i]] for i in range(m + 1)]
    bas = [int(v) for v in basis]
    obj = rows[m]
    iters = 0
    while True:
        enter = -1
        for j in range(n_enterable):
            if obj[j] < -eps:
                enter = j
                break
        if enter < 0:
            status = 0
            break
        leave = -1
        best = 0.0
        for i in range(m):
            aij = rows[i][enter]
            if aij > eps:
                r = rows[i][rhs] / aij
                if leave < 0 or r < best or (r == best and bas[i] < bas[leave]):
                    leave = i
                    best = r
        if leave < 0:
            status = 1
            break
        if iters >= max_iter:
            status = 2
            break
        piv_row = rows[leave]
        piv = piv_row[enter]
        for k in range(width):
            piv_row[k] /= piv
        for i in range(m + 1):
            if i == leave:
                continue
            f = rows[i][enter]
            if f != 0.0:
                row = rows[i]
                for k in range(width):
                    row[k] -= f * piv_row[k]
        bas[leave] = enter
        iters += 1
    for i in range(m + 1):
        tab[i, :] = rows[i]
    basis[:] = bas
    return status, iters


def simulate_trials(
    seed,
    first_trial,
    n_trials,
    cum_lambda,
    cum_settings,
    external,
    cum_outcomes,
    is_local,
    is_free,
    counts_ab,
    counts_xy,
):
    """Run trials [first_trial, first_trial + n_trials) into the counts.

    Each trial uses its own SplitMix64 stream derived from (seed, trial
    index) and draws, in order: the hidden variable, the setting pair,
    the outcome pair.  All three use inverse-CDF sampling on the supplied
    cumulative tables (first index whose cumulative is >= u).  Counts are
    accumulated into ``counts_ab`` (xy-major, outcome index a*2+b) and
    ``counts_xy``.  Returns (local_trials, free_trials).
    """
    K = len(cum_lambda)
    C = cum_settings.shape[1]
    cl = [float(v) for v in cum_lambda]
    cs = [[float(v) for v in row] for row in cum_settings]
    co = [[float(v) for v in row] for row in cum_outcomes]
    loc = [int(v) for v in is_local]
    fre = [int(v) for v in is_free]
    cab = [0] * (C * 4)
    cxy = [0] * C
    n_local = 0
    n_free = 0
    seed &= _MASK64
    ext = bool(external)
    ext_row = cs[0]
    for t in range(first_trial, first_trial + n_trials):
        state = stream_state(seed, t)

        state = (state + GAMMA) & _MASK64
        u = (mix64(state) >> 11) * _UNIT
        lam = 0
        while lam < K - 1 and cl[lam] < u:
            lam += 1

        state = (state + GAMMA) & _MASK64
        u = (mix64(state) >> 11) * _UNIT
        row = ext_row if ext else cs[lam]
        xy = 0
        while xy < C - 1 and row[xy] < u:
            xy += 1

        state = (state + GAMMA) & _MASK64
        u = (mix64(state) >> 11) * _UNIT
        orow = co[lam * C + xy]
        ab = 0
        while ab < 3 and orow[ab] < u:
            ab += 1

        cab[xy * 4 + ab] += 1
        cxy[xy] += 1
        n_local += loc[lam]
        n_free += fre[lam]
    for i in range(C * 4):
        counts_ab[i] += cab[i]
    for i in range(C):
        counts_xy[i] += cxy[i]
    return n_local, n_free
