# cython: language_level=3
"""Compiled kernels: simplex pivot loop and Monte Carlo trial loop.

Operation-for-operation identical to ``fallback.py``.  Do not "optimise"
the floating-point arithmetic here (no reassociation, no FMA intrinsics):
bit-identity between the two backends is a tested contract.
"""


cdef unsigned long long GAMMA = <unsigned long long>0x9E3779B97F4A7C15
cdef double _UNIT = 1.0 / 9007199254740992.0  # 2**-53


cdef inline unsigned long long _mix64(unsigned long long z) nogil:
    z ^= z >> 30
    z = z * <unsigned long long>0xBF58476D1CE4E5B9
    z ^= z >> 27
    z = z * <unsigned long long>0x94D049BB133111EB
    z ^= z >> 31
    return z


cdef inline unsigned long long _stream_state(
    unsigned long long seed, unsigned long long index
) nogil:
    return _mix64(seed ^ _mix64((index + 1) * GAMMA))


def simplex_pivots(
    double[:, ::1] tab,
    long long[::1] basis,
    Py_ssize_t n_enterable,
    double eps,
    long long max_iter,
):
    """Bland-rule pivots; see fallback.simplex_pivots for the contract."""
    cdef Py_ssize_t m = tab.shape[0] - 1
    cdef Py_ssize_t width = tab.shape[1]
    cdef Py_ssize_t rhs = width - 1
    cdef long long iters = 0
    cdef int status = -1
    cdef Py_ssize_t enter, leave, i, j, k
    cdef double aij, r, best, piv, f
    with nogil:
        while True:
            enter = -1
            for j in range(n_enterable):
                if tab[m, j] < -eps:
                    enter = j
                    break
            if enter < 0:
                status = 0
                break
            leave = -1
            best = 0.0
            for i in range(m):
                aij = tab[i, enter]
                if aij > eps:
                    r = tab[i, rhs] / aij
                    if leave < 0 or r < best or (r == best and basis[i] < basis[leave]):
                        leave = i
                        best = r
            if leave < 0:
                status = 1
                break
            if iters >= max_iter:
                status = 2
                break
            piv = tab[leave, enter]
            for k in range(width):
                tab[leave, k] /= piv
            for i in range(m + 1):
                if i == leave:
                    continue
                f = tab[i, enter]
                if f != 0.0:
                    for k in range(width):
                        tab[i, k] -= f * tab[leave, k]
            basis[leave] = enter
            iters += 1
    return status, iters


def simulate_trials(
    unsigned long long seed,
    long long first_trial,
    long long n_trials,
    double[::1] cum_lambda,
    double[:, ::1] cum_settings,
    int external,
    double[:, ::1] cum_outcomes,
    unsigned char[::1] is_local,
    unsigned char[::1] is_free,
    long long[::1] counts_ab,
    long long[::1] counts_xy,
):
    """Per-trial-stream Monte Carlo; see fallback.simulate_trials."""
    cdef Py_ssize_t K = cum_lambda.shape[0]
    cdef Py_ssize_t C = cum_settings.shape[1]
    cdef long long n_local = 0
    cdef long long n_free = 0
    cdef long long t
    cdef unsigned long long state
    cdef double u
    cdef Py_ssize_t lam, xy, ab
    with nogil:
        for t in range(first_trial, first_trial + n_trials):
            state = _stream_state(seed, <unsigned long long>t)

            state = state + GAMMA
            u = <double>(_mix64(state) >> 11) * _UNIT
            lam = 0
            while lam < K - 1 and cum_lambda[lam] < u:
                lam += 1

            state = state + GAMMA
            u = <double>(_mix64(state) >> 11) * _UNIT
            xy = 0
            if external:
                while xy < C - 1 and cum_settings[0, xy] < u:
                    xy += 1
            else:
                while xy < C - 1 and cum_settings[lam, xy] < u:
                    xy += 1

            state = state + GAMMA
            u = <double>(_mix64(state) >> 11) * _UNIT
            ab = 0
            while ab < 3 and cum_outcomes[lam * C + xy, ab] < u:
                ab += 1

            counts_ab[xy * 4 + ab] += 1
            counts_xy[xy] += 1
            n_local += is_local[lam]
            n_free += is_free[lam]
    return n_local, n_free
