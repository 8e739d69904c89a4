"""Guided local search over depot-anchored route sets.

Features are undirected edges.  At each local optimum of the augmented cost
``d(e) + lam * mean_edge * penalty(e)`` the edges of the current solution
with maximal utility ``d(e) / (1 + penalty(e))`` get one more penalty, and
local search resumes on the re-weighted matrix.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import DomainError
from ..instance import Instance
from ..solution import RouteSet, validate

IMPROVE_EPS = 1e-10


@dataclass
class SolverConfig:
    m: int = 1
    time_limit: float = 120.0
    # When set, the search runs this many penalty rounds and ignores the clock.
    iteration_limit: int | None = None
    gls_lambda: float = 0.1
    neighborhoods: tuple[str, ...] = ("two_opt", "or_opt", "relocate", "exchange")
    seed: int = 0

    def __post_init__(self):
        if not self.gls_lambda > 0:
            raise DomainError("gls_lambda must be positive")
        if self.iteration_limit is None and not self.time_limit > 0:
            raise DomainError("time_limit must be positive")
        if self.iteration_limit is not None and self.iteration_limit < 0:
            raise DomainError("iteration_limit must be >= 0")
        unknown = set(self.neighborhoods) - set(kernels.NEIGHBORHOOD_FLAGS)
        if unknown:
            raise DomainError(f"unknown neighborhoods: {sorted(unknown)}")

    @property
    def budget_mode(self) -> str:
        return "iterations" if self.iteration_limit is not None else "seconds"

    def flags(self) -> int:
        out = 0
        for name in self.neighborhoods:
            out |= kernels.NEIGHBORHOOD_FLAGS[name]
        return out


@dataclass
class GLSResult:
    routes: RouteSet
    distance: float
    start_distance: float
    rounds: int
    moves: int
    history: list[float] = field(default_factory=list)


def to_giant_tour(rs: RouteSet) -> list[int]:
    tour = [0]
    for r in rs.routes:
        tour.extend(r[1:])
    return tour


def from_giant_tour(tour, source: str = "") -> RouteSet:
    routes, cur = [], [0]
    for v in tour[1:]:
        cur.append(v)
        if v == 0:
            routes.append(tuple(cur))
            cur = [0]
    return RouteSet(tuple(routes), source=source)


def _canonical(rs: RouteSet) -> RouteSet:
    # Orient each route so its first interior node is the smaller end; order routes.
    routes = []
    for r in rs.routes:
        if len(r) > 3 and r[1] > r[-2]:
            r = r[::-1]
        routes.append(r)
    routes.sort(key=lambda r: (len(r) == 2, r))
    return RouteSet(tuple(routes), rs.source)


def guided_local_search(start: RouteSet, inst: Instance, cfg: SolverConfig) -> GLSResult:
    if not validate(start, inst, cfg.m).valid:
        raise DomainError("guided local search needs a valid starting solution")
    D = np.ascontiguousarray(inst.matrix(), dtype=np.float64)
    flags = cfg.flags()
    deadline = None if cfg.iteration_limit is not None else time.perf_counter() + cfg.time_limit

    def out_of_time() -> bool:
        return deadline is not None and time.perf_counter() >= deadline

    tour = to_giant_tour(start)
    arr = np.array(tour, dtype=np.int_)
    start_cost = kernels.tour_cost(arr, D)
    best_cost, best_tour = start_cost, list(tour)
    history = [best_cost]
    penalties = np.zeros_like(D)
    aug = D
    rounds = moves = 0

    # No neighbour exists: every solution is the same tour.
    trivial = inst.n - 1 <= (1 if cfg.m > 1 else 3)

    while not trivial:
        while not out_of_time():
            move = kernels.best_move(arr, aug, flags, IMPROVE_EPS)
            if move[0] == kernels.MOVE_NONE:
                break
            kernels.apply_move(tour, move)
            arr = np.array(tour, dtype=np.int_)
            moves += 1
            cost = kernels.tour_cost(arr, D)
            if cost < best_cost - IMPROVE_EPS:
                best_cost, best_tour = cost, list(tour)
                history.append(best_cost)
        if out_of_time() or (cfg.iteration_limit is not None and rounds >= cfg.iteration_limit):
            break

        edges = [(a, b) for a, b in zip(tour, tour[1:]) if a != b]
        cost = kernels.tour_cost(arr, D)
        mean_edge = cost / len(edges)
        utils = [D[a, b] / (1.0 + penalties[a, b]) for a, b in edges]
        top = max(utils)
        for (a, b), u in zip(edges, utils):
            if u >= top - 1e-12:
                penalties[a, b] += 1.0
                penalties[b, a] = penalties[a, b]
        aug = D + (cfg.gls_lambda * mean_edge) * penalties
        rounds += 1

    routes = _canonical(from_giant_tour(best_tour, source="reference-gls"))
    return GLSResult(routes, best_cost, start_cost, rounds, moves, history)


def improve_gls(start: RouteSet, inst: Instance, cfg: SolverConfig) -> RouteSet:
    """Improve ``start`` with guided local search; never returns anything worse."""
    return guided_local_search(start, inst, cfg).routes
