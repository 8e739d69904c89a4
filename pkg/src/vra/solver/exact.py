"""Exhaustive mTSP oracle for tiny instances (test use only)."""

from __future__ import annotations

from itertools import permutations

from ..errors import InvalidSizeError, InfeasibleError
from ..instance import Instance
from ..solution import RouteSet

MAX_EXACT_NODES = 10


def _set_partitions(items: list[int], max_blocks: int):
    """Partitions of ``items`` into at most ``max_blocks`` nonempty blocks, in a fixed order."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest, max_blocks):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        if len(part) < max_blocks:
            yield [[first]] + part


def _best_tour(block: tuple[int, ...], D) -> tuple[float, tuple[int, ...]]:
    if len(block) == 1:
        v = block[0]
        return D[0][v] + D[v][0], (0, v, 0)
    best_cost, best_route = None, None
    # permutations() yields in lexicographic order; keep the first strict minimum.
    for perm in permutations(block):
        if perm[0] > perm[-1]:
            continue
        cost = D[0][perm[0]]
        for a, b in zip(perm, perm[1:]):
            cost += D[a][b]
        cost += D[perm[-1]][0]
        if best_cost is None or cost < best_cost:
            best_cost, best_route = cost, (0, *perm, 0)
    return best_cost, best_route


def solve_exact(inst: Instance, m: int) -> RouteSet:
    """Globally optimal split into at most ``m`` routes; unused salesmen get ``(0, 0)``."""
    if inst.n > MAX_EXACT_NODES:
        raise InvalidSizeError(f"exact solver is limited to n <= {MAX_EXACT_NODES}, got {inst.n}")
    if m < 1:
        raise InfeasibleError(f"m must be >= 1, got {m}")
    D = inst.matrix().tolist()
    memo: dict[tuple[int, ...], tuple[float, tuple[int, ...]]] = {}

    def tour(block):
        key = tuple(sorted(block))
        if key not in memo:
            memo[key] = _best_tour(key, D)
        return memo[key]

    best = None
    for part in _set_partitions(list(range(1, inst.n)), m):
        total, routes = 0.0, []
        for block in part:
            c, r = tour(block)
            total += c
            routes.append(r)
        routes.sort()
        cand = (total, routes)
        if best is None or total < best[0] or (total == best[0] and routes < best[1]):
            best = cand
    routes = best[1] + [(0, 0)] * (m - len(best[1]))
    return RouteSet(tuple(routes), source="exact")
