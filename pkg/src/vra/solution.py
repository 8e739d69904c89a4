"""Route sets, hallucination checks, tour lengths and gap percentages."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import DomainError
from .instance import Instance, distance

COLLINEAR_EPS = 1e-12


@dataclass(frozen=True)
class RouteSet:
    """``m`` depot-anchored node sequences, e.g. ``((0, 3, 1, 0), (0, 2, 0))``."""

    routes: tuple[tuple[int, ...], ...]
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(tuple(int(v) for v in r) for r in self.routes))

    @property
    def m(self) -> int:
        return len(self.routes)

    def key(self) -> tuple[tuple[int, ...], ...]:
        return self.routes

    def with_source(self, source: str) -> "RouteSet":
        return RouteSet(self.routes, source)

    def as_lists(self) -> list[list[int]]:
        return [list(r) for r in self.routes]


@dataclass
class ValidationReport:
    missing: set[int] = field(default_factory=set)
    duplicated: set[int] = field(default_factory=set)
    malformed_routes: list[int] = field(default_factory=list)
    wrong_route_count: bool = False
    # Unused salesmen are allowed for m >= 2; reported, not a defect.
    empty_routes: list[int] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not (self.missing or self.duplicated or self.malformed_routes or self.wrong_route_count)


def validate(rs: RouteSet, inst: Instance, m: int) -> ValidationReport:
    report = ValidationReport(wrong_route_count=rs.m != m)
    counts: Counter[int] = Counter()
    for idx, route in enumerate(rs.routes):
        anchored = len(route) >= 2 and route[0] == 0 and route[-1] == 0
        interior = route[1:-1] if anchored else route
        if not anchored or any(not 1 <= v < inst.n for v in interior):
            report.malformed_routes.append(idx)
        if anchored and not interior:
            report.empty_routes.append(idx)
        counts.update(v for v in interior if 1 <= v < inst.n)
    report.missing = {v for v in range(1, inst.n) if counts[v] == 0}
    report.duplicated = {v for v, c in counts.items() if c > 1}
    return report


def route_length(route, inst: Instance) -> float:
    nodes = inst.nodes
    return sum(distance(nodes[a], nodes[b]) for a, b in zip(route, route[1:]))


def total_distance(rs: RouteSet, inst: Instance, m: int | None = None) -> float | None:
    """Sum of route lengths, or ``None`` when the route set fails validation."""
    if not validate(rs, inst, rs.m if m is None else m).valid:
        return None
    return sum(route_length(r, inst) for r in rs.routes)


def gap_percent(candidate: float | None, reference: float) -> float | None:
    if not reference > 0:
        raise DomainError(f"reference distance must be positive, got {reference}")
    if candidate is None:
        return None
    return 100.0 * (candidate - reference) / reference


def _orient(ax, ay, bx, by, cx, cy) -> int:
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if abs(v) <= COLLINEAR_EPS:
        return 0
    return 1 if v > 0 else -1


def segments_cross(p1, p2, q1, q2) -> bool:
    """Proper intersection: interiors cross, touching or collinear overlap excluded."""
    o1 = _orient(*p1, *p2, *q1)
    o2 = _orient(*p1, *p2, *q2)
    o3 = _orient(*q1, *q2, *p1)
    o4 = _orient(*q1, *q2, *p2)
    return o1 * o2 < 0 and o3 * o4 < 0


def route_segments(rs: RouteSet, inst: Instance) -> list[tuple[int, int]]:
    segs = []
    for route in rs.routes:
        for a, b in zip(route, route[1:]):
            if a != b and 0 <= a < inst.n and 0 <= b < inst.n:
                segs.append((a, b))
    return segs


def crossing_count(rs: RouteSet, inst: Instance) -> int:
    nodes = inst.nodes
    segs = route_segments(rs, inst)
    coords = [((nodes[a].x, nodes[a].y), (nodes[b].x, nodes[b].y)) for a, b in segs]
    count = 0
    for i in range(len(segs)):
        a = segs[i]
        p1, p2 = coords[i]
        for j in range(i + 1, len(segs)):
            b = segs[j]
            if a[0] in b or a[1] in b:
                continue
            if segments_cross(p1, p2, *coords[j]):
                count += 1
    return count
