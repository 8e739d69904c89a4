"""Clarke-Wright savings construction held to a fixed number of routes."""

from __future__ import annotations

from ..errors import InfeasibleError
from ..instance import Instance
from ..solution import RouteSet


def solve_savings(inst: Instance, m: int) -> RouteSet:
    """Merge out-and-back routes by descending savings until ``m`` remain.

    Merges only join route ends that touch the depot, never join a route to
    itself, and stop once ``m`` routes are left.  If the savings pass leaves
    more than ``m`` routes, the cheapest end-to-end joins finish the job.
    """
    n = inst.n
    if m < 1:
        raise InfeasibleError(f"m must be >= 1, got {m}")
    if n <= m:
        raise InfeasibleError(f"{n} nodes cannot be split among {m} salesmen")
    D = inst.matrix()

    routes: dict[int, list[int]] = {v: [v] for v in range(1, n)}
    owner = {v: v for v in range(1, n)}

    savings = []
    for i in range(1, n):
        for j in range(i + 1, n):
            savings.append((D[0, i] + D[0, j] - D[i, j], i, j))
    # Descending savings, ties by (i, j) ascending.
    savings.sort(key=lambda s: (-s[0], s[1], s[2]))

    def merge(i: int, j: int) -> None:
        ri, rj = owner[i], owner[j]
        a, b = routes[ri], routes[rj]
        if a[-1] != i:
            a.reverse()
        if b[0] != j:
            b.reverse()
        a.extend(b)
        del routes[rj]
        for v in b:
            owner[v] = ri

    def is_end(v: int) -> bool:
        r = routes[owner[v]]
        return r[0] == v or r[-1] == v

    for _, i, j in savings:
        if len(routes) <= m:
            break
        if owner[i] != owner[j] and is_end(i) and is_end(j):
            merge(i, j)

    while len(routes) > m:
        best = None
        keys = sorted(routes)
        for x, ka in enumerate(keys):
            for kb in keys[x + 1:]:
                for i in {routes[ka][0], routes[ka][-1]}:
                    for j in {routes[kb][0], routes[kb][-1]}:
                        increase = D[i, j] - D[0, i] - D[0, j]
                        cand = (increase, min(i, j), max(i, j), i, j)
                        if best is None or cand < best:
                            best = cand
        merge(best[3], best[4])

    ordered = sorted(routes.values(), key=lambda r: min(r))
    return RouteSet(tuple((0, *r, 0) for r in ordered), source="reference-savings")
