# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled move evaluation; must stay in lockstep with ``_pykernels.py``.

Floating-point expressions are written in the same order as the Python
fallback so both backends pick identical moves.
"""

import numpy as np

cdef int TWO_OPT = 1
cdef int OR_OPT = 2
cdef int RELOCATE = 4
cdef int EXCHANGE = 8


def tour_cost(tour, D):
    cdef const long[::1] t = np.ascontiguousarray(tour, dtype=np.int_)
    cdef const double[:, ::1] d = np.ascontiguousarray(D, dtype=np.float64)
    cdef Py_ssize_t p
    cdef double total = 0.0
    for p in range(t.shape[0] - 1):
        total += d[t[p], t[p + 1]]
    return total


def best_move(tour, D, int flags, double eps=1e-10):
    cdef const long[::1] t = np.ascontiguousarray(tour, dtype=np.int_)
    cdef const double[:, ::1] d = np.ascontiguousarray(D, dtype=np.float64)
    cdef Py_ssize_t L = t.shape[0]
    cdef Py_ssize_t i, j, k, s, e, smin, smax
    cdef long a, b, c, x, y, dd, ti, tj, prev, nxt, si, se
    cdef double best = -eps
    cdef double delta, base, removed, dab
    cdef int bkind = 0
    cdef Py_ssize_t bi = 0, bj = 0, bk = 0

    if flags & TWO_OPT:
        for i in range(1, L - 2):
            a = t[i - 1]
            ti = t[i]
            base = d[a, ti]
            for j in range(i + 1, L - 1):
                tj = t[j]
                b = t[j + 1]
                delta = d[a, tj] + d[ti, b] - base - d[tj, b]
                if delta < best:
                    best = delta
                    bkind = 1; bi = i; bj = j; bk = 0

    if flags & (OR_OPT | RELOCATE):
        smin = 1 if flags & RELOCATE else 2
        smax = 3 if flags & OR_OPT else 1
        for s in range(smin, smax + 1):
            for i in range(1, L - s):
                e = i + s - 1
                prev = t[i - 1]
                nxt = t[e + 1]
                si = t[i]
                se = t[e]
                removed = d[prev, si] + d[se, nxt] - d[prev, nxt]
                for k in range(0, L - 1):
                    if i - 1 <= k <= e:
                        continue
                    a = t[k]
                    b = t[k + 1]
                    dab = d[a, b]
                    delta = d[a, si] + d[se, b] - dab - removed
                    if delta < best:
                        best = delta
                        bkind = 2; bi = i; bj = s; bk = k
                    if s > 1:
                        delta = d[a, se] + d[si, b] - dab - removed
                        if delta < best:
                            best = delta
                            bkind = 3; bi = i; bj = s; bk = k

    if flags & EXCHANGE:
        for i in range(1, L - 3):
            a = t[i - 1]
            x = t[i]
            b = t[i + 1]
            for j in range(i + 2, L - 1):
                c = t[j - 1]
                y = t[j]
                dd = t[j + 1]
                delta = (d[a, y] + d[y, b] + d[c, x] + d[x, dd]) - (d[a, x] + d[x, b] + d[c, y] + d[y, dd])
                if delta < best:
                    best = delta
                    bkind = 4; bi = i; bj = j; bk = 0

    if bkind == 0:
        return (0, 0, 0, 0, 0.0)
    return (bkind, bi, bj, bk, best)
