"""Offline stand-in for a vision chat model.

The mock reads the structured instance and routes behind the images from a
:class:`MockContext` sidecar and answers in the same text grammars a live
model is asked for:

* initializer: angular sweep around the depot into ``m`` sectors, nearest
  neighbour order inside each sector;
* critic: repairs missing or duplicated nodes by cheapest insertion, then
  applies one intra-route 2-opt move (best-improving or random);
* scorer: ``5 - 3*(incomplete) - min(crossings, 2)`` clamped to ``[1, 5]``.

Initializer and critic replies drop one random node with probability
``hallucination_rate``.  Everything is seeded from the behaviour seed and the
request's cache key, so identical requests always get identical text.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field

from ..errors import ConfigError, MockMisuseError
from ..instance import Instance
from ..parsing import format_routes
from ..solution import RouteSet, crossing_count, validate

IMPROVEMENT_MODES = ("best", "random")


@dataclass(frozen=True)
class MockBehavior:
    hallucination_rate: float = 0.0
    improvement_mode: str = "best"
    seed: int = 0
    # Overrides hallucination_rate for initializer replies when set.
    initializer_hallucination_rate: float | None = None

    def __post_init__(self):
        for rate in (self.hallucination_rate, self.initializer_hallucination_rate):
            if rate is not None and not 0.0 <= rate <= 1.0:
                raise ConfigError(f"hallucination rate {rate} outside [0, 1]")
        if self.improvement_mode not in IMPROVEMENT_MODES:
            raise ConfigError(f"improvement_mode must be one of {IMPROVEMENT_MODES}")

    @property
    def model_id(self) -> str:
        ih = "" if self.initializer_hallucination_rate is None else f":ih={self.initializer_hallucination_rate:g}"
        return f"mock:h={self.hallucination_rate:g}{ih}:mode={self.improvement_mode}:seed={self.seed}"


@dataclass
class MockContext:
    instance: Instance
    m: int
    incumbent: RouteSet | None = None
    candidates: tuple[RouteSet, ...] = field(default_factory=tuple)


def sweep_routes(inst: Instance, m: int) -> RouteSet:
    depot = inst.depot
    pts = inst.nodes
    order = sorted(range(1, inst.n), key=lambda v: (math.atan2(pts[v].y - depot.y, pts[v].x - depot.x), v))
    if m > 1 and len(order) > 1:
        angles = [math.atan2(pts[v].y - depot.y, pts[v].x - depot.x) for v in order]
        gaps = [(angles[(i + 1) % len(order)] - angles[i]) % (2 * math.pi) for i in range(len(order))]
        widest = max(range(len(gaps)), key=lambda i: (gaps[i], -i))
        order = order[widest + 1:] + order[:widest + 1]
    q, r = divmod(len(order), m)
    D = inst.matrix()
    routes, pos = [], 0
    for s in range(m):
        size = q + (1 if s < r else 0)
        sector = order[pos:pos + size]
        pos += size
        route, cur, left = [0], 0, set(sector)
        while left:
            cur = min(left, key=lambda v: (D[cur, v], v))
            left.remove(cur)
            route.append(cur)
        route.append(0)
        routes.append(tuple(route))
    return RouteSet(tuple(routes))


def repair(rs: RouteSet, inst: Instance, m: int) -> RouteSet:
    """Drop duplicates and bad indices, fix the route count, cheapest-insert missing nodes."""
    D = inst.matrix()
    seen: set[int] = set()
    routes: list[list[int]] = []
    for route in rs.routes[:m]:
        kept = []
        for v in route:
            if 1 <= v < inst.n and v not in seen:
                seen.add(v)
                kept.append(v)
        routes.append([0, *kept, 0])
    while len(routes) < m:
        routes.append([0, 0])
    for v in range(1, inst.n):
        if v in seen:
            continue
        best = None
        for ri, route in enumerate(routes):
            for p in range(len(route) - 1):
                a, b = route[p], route[p + 1]
                cost = D[a, v] + D[v, b] - D[a, b]
                if best is None or cost < best[0]:
                    best = (cost, ri, p)
        _, ri, p = best
        routes[ri].insert(p + 1, v)
    return RouteSet(tuple(tuple(r) for r in routes))


def best_two_opt(rs: RouteSet, inst: Instance) -> RouteSet:
    D = inst.matrix()
    best = (-1e-10, None)
    for ri, route in enumerate(rs.routes):
        for i in range(1, len(route) - 2):
            for j in range(i + 1, len(route) - 1):
                delta = D[route[i - 1], route[j]] + D[route[i], route[j + 1]] - D[route[i - 1], route[i]] - D[route[j], route[j + 1]]
                if delta < best[0]:
                    best = (delta, (ri, i, j))
    if best[1] is None:
        return rs
    return _reverse(rs, *best[1])


def random_two_opt(rs: RouteSet, rng: random.Random) -> RouteSet:
    eligible = [ri for ri, r in enumerate(rs.routes) if len(r) >= 4]
    if not eligible:
        return rs
    ri = rng.choice(eligible)
    i, j = sorted(rng.sample(range(1, len(rs.routes[ri]) - 1), 2))
    return _reverse(rs, ri, i, j)


def _reverse(rs: RouteSet, ri: int, i: int, j: int) -> RouteSet:
    route = list(rs.routes[ri])
    route[i:j + 1] = route[i:j + 1][::-1]
    routes = list(rs.routes)
    routes[ri] = tuple(route)
    return RouteSet(tuple(routes))


def drop_random_node(rs: RouteSet, rng: random.Random) -> RouteSet:
    spots = [(ri, p) for ri, r in enumerate(rs.routes) for p in range(1, len(r) - 1)]
    if not spots:
        return rs
    ri, p = rng.choice(spots)
    routes = list(rs.routes)
    routes[ri] = routes[ri][:p] + routes[ri][p + 1:]
    return RouteSet(tuple(routes))


def mock_score(rs: RouteSet, inst: Instance, m: int) -> int:
    incomplete = 0 if validate(rs, inst, m).valid else 1
    score = 5 - 3 * incomplete - min(crossing_count(rs, inst), 2)
    return max(1, min(5, score))


def scorer_reply(scores: list[int]) -> str:
    best = scores.index(max(scores)) + 1
    listing = ", ".join(f"image{i}: {s}" for i, s in enumerate(scores, start=1))
    return f"<<{listing}>>\n<<the best route: {best}>>"


class MockBackend:
    kind = "mock"

    def __init__(self, behavior: MockBehavior = MockBehavior()):
        self.behavior = behavior

    @property
    def model_id(self) -> str:
        return self.behavior.model_id

    def _rng(self, req) -> random.Random:
        digest = hashlib.sha256(f"{self.behavior.seed}:{req.cache_key()}".encode()).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def complete(self, req, ctx: MockContext | None = None) -> str:
        if not isinstance(ctx, MockContext):
            raise MockMisuseError("the mock backend needs a MockContext describing the images")
        rng = self._rng(req)
        inst, m = ctx.instance, ctx.m
        b = self.behavior
        if req.role == "scorer":
            if len(ctx.candidates) != len(req.images):
                raise MockMisuseError("scorer context must hold one route set per image")
            return scorer_reply([mock_score(c, inst, m) for c in ctx.candidates])
        if req.role == "initializer" or ctx.incumbent is None:
            rs = sweep_routes(inst, m)
            rate = b.hallucination_rate if b.initializer_hallucination_rate is None else b.initializer_hallucination_rate
        else:
            rs = repair(ctx.incumbent, inst, m)
            rs = best_two_opt(rs, inst) if b.improvement_mode == "best" else random_two_opt(rs, rng)
            rate = b.hallucination_rate
        if rate > 0 and rng.random() < rate:
            rs = drop_random_node(rs, rng)
        return format_routes(rs)


def mock_invoke(req, ctx: MockContext, behavior: MockBehavior):
    """One uncached mock call, returned as an :class:`AgentReply`."""
    from .core import Gateway

    return Gateway(MockBackend(behavior)).invoke(req, ctx)
