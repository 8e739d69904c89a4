"""Pure-Python move evaluation; mirrors ``_ckernels.pyx`` operation for operation.

A solution is a giant tour: the routes concatenated, sharing depot copies as
separators, e.g. ``[0, 3, 1, 0, 2, 0]`` for two routes.  Positions 0 and
``L-1`` hold the depot and never move; interior depot copies may, which is
what lets a single move change route membership.
"""

TWO_OPT = 1
OR_OPT = 2
RELOCATE = 4
EXCHANGE = 8

MOVE_NONE = 0
MOVE_REVERSE = 1
MOVE_SEGMENT = 2
MOVE_SEGMENT_REVERSED = 3
MOVE_SWAP = 4


def tour_cost(tour, D):
    total = 0.0
    for p in range(len(tour) - 1):
        total += D[tour[p]][tour[p + 1]]
    return total


def best_move(tour, D, flags, eps=1e-10):
    """Best improving move under cost matrix ``D``.

    Returns ``(kind, i, j, k, delta)``; ``kind == MOVE_NONE`` when nothing
    improves by more than ``eps``.  Ties keep the first move in scan order.
    """
    t = [int(v) for v in tour]
    if hasattr(D, "tolist"):
        D = D.tolist()
    L = len(t)
    best = -eps
    bkind, bi, bj, bk = MOVE_NONE, 0, 0, 0

    if flags & TWO_OPT:
        for i in range(1, L - 2):
            a = t[i - 1]
            ti = t[i]
            Da = D[a]
            Dti = D[ti]
            base = Da[ti]
            for j in range(i + 1, L - 1):
                tj = t[j]
                b = t[j + 1]
                delta = Da[tj] + Dti[b] - base - D[tj][b]
                if delta < best:
                    best = delta
                    bkind, bi, bj, bk = MOVE_REVERSE, i, j, 0

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
                removed = D[prev][si] + D[se][nxt] - D[prev][nxt]
                for k in range(0, L - 1):
                    if i - 1 <= k <= e:
                        continue
                    a = t[k]
                    b = t[k + 1]
                    dab = D[a][b]
                    delta = D[a][si] + D[se][b] - dab - removed
                    if delta < best:
                        best = delta
                        bkind, bi, bj, bk = MOVE_SEGMENT, i, s, k
                    if s > 1:
                        delta = D[a][se] + D[si][b] - dab - removed
                        if delta < best:
                            best = delta
                            bkind, bi, bj, bk = MOVE_SEGMENT_REVERSED, i, s, k

    if flags & EXCHANGE:
        for i in range(1, L - 3):
            a = t[i - 1]
            x = t[i]
            b = t[i + 1]
            for j in range(i + 2, L - 1):
                c = t[j - 1]
                y = t[j]
                d = t[j + 1]
                delta = (D[a][y] + D[y][b] + D[c][x] + D[x][d]) - (D[a][x] + D[x][b] + D[c][y] + D[y][d])
                if delta < best:
                    best = delta
                    bkind, bi, bj, bk = MOVE_SWAP, i, j, 0

    if bkind == MOVE_NONE:
        return (MOVE_NONE, 0, 0, 0, 0.0)
    return (bkind, bi, bj, bk, best)
