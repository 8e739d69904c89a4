import itertools
import random

import pytest
from hypothesis import given, strategies as st

from vra.errors import DomainError
from vra.instance import Instance, Point, distance, generate_instance
from vra.solution import RouteSet, crossing_count, gap_percent, total_distance, validate


def rs(*routes):
    return RouteSet(tuple(tuple(r) for r in routes))


def line_instance(n):
    return Instance("line", tuple(Point(float(i), 0.0) for i in range(n)))


def test_complete_tour_is_valid():
    assert validate(rs([0, 1, 2, 3, 0]), line_instance(4), 1).valid


def test_dropped_node():
    report = validate(rs([0, 1, 2, 0]), line_instance(4), 1)
    assert not report.valid
    assert report.missing == {3}


def test_duplicated_node():
    report = validate(rs([0, 1, 2, 0], [0, 2, 3, 4, 0]), line_instance(5), 2)
    assert not report.valid
    assert report.duplicated == {2}
    assert report.missing == set()


def test_malformed_and_route_count():
    inst = line_instance(4)
    report = validate(rs([1, 2, 3, 0]), inst, 1)
    assert report.malformed_routes == [0]
    assert not report.valid
    report = validate(rs([0, 1, 9, 2, 3, 0]), inst, 1)
    assert report.malformed_routes == [0]
    report = validate(rs([0, 1, 2, 3, 0]), inst, 2)
    assert report.wrong_route_count and not report.valid


def test_empty_salesman_allowed_and_flagged():
    report = validate(rs([0, 1, 2, 3, 0], [0, 0]), line_instance(4), 2)
    assert report.valid
    assert report.empty_routes == [1]


def test_unit_square_perimeter(unit_square):
    assert total_distance(rs([0, 1, 2, 3, 0]), unit_square) == 4.0


def test_invalid_distance_is_undefined(unit_square):
    assert total_distance(rs([0, 1, 2, 0]), unit_square) is None


def test_out_and_back():
    inst = generate_instance(3, 5)
    d1 = distance(inst.nodes[0], inst.nodes[1])
    d2 = distance(inst.nodes[0], inst.nodes[2])
    assert total_distance(rs([0, 1, 0], [0, 2, 0]), inst) == pytest.approx(2 * d1 + 2 * d2, abs=1e-12)


def test_gap_examples():
    assert gap_percent(10.0, 10.0) == 0.0
    assert gap_percent(11.0, 10.0) == pytest.approx(10.0)
    assert gap_percent(9.0, 10.0) == -10.0
    assert gap_percent(None, 10.0) is None
    with pytest.raises(DomainError):
        gap_percent(5.0, 0.0)


@given(st.floats(1e-6, 1e6))
def test_gap_of_equal_lengths_is_zero(x):
    assert gap_percent(x, x) == 0.0


def _random_tour(n, rnd):
    interior = list(range(1, n))
    rnd.shuffle(interior)
    return [0, *interior, 0]


@given(st.integers(3, 15), st.integers(0, 10**6))
def test_distance_invariant_under_reversal_and_rotation(n, seed):
    inst = generate_instance(n, seed)
    rnd = random.Random(seed)
    tour = _random_tour(n, rnd)
    base = total_distance(rs(tour), inst)
    assert total_distance(rs(tour[::-1]), inst) == pytest.approx(base, abs=1e-9)
    # same cycle, started at a different node then re-anchored at the depot
    cycle = tour[:-1]
    k = rnd.randrange(len(cycle))
    rotated = cycle[k:] + cycle[:k]
    z = rotated.index(0)
    rotated = rotated[z:] + rotated[:z] + [0]
    assert total_distance(rs(rotated), inst) == pytest.approx(base, abs=1e-9)


@given(st.integers(4, 12), st.integers(0, 10**6))
def test_validate_is_order_insensitive_across_routes(n, seed):
    inst = generate_instance(n, seed)
    rnd = random.Random(seed)
    nodes = list(range(1, n))
    rnd.shuffle(nodes)
    routes = [[0, *nodes[:2], 0], [0, *nodes[2:], 0]]
    if rnd.random() < 0.5:
        routes[1].pop(1)
    a = validate(rs(*routes), inst, 2)
    b = validate(rs(*routes[::-1]), inst, 2)
    assert (a.valid, a.missing, a.duplicated) == (b.valid, b.missing, b.duplicated)


def test_convex_tour_has_no_crossings(unit_square):
    assert crossing_count(rs([0, 1, 2, 3, 0]), unit_square) == 0


def test_bowtie_crossing(unit_square):
    assert crossing_count(rs([0, 2, 1, 3, 0]), unit_square) == 1


def _brute_crossings(routes, inst):
    # Independent check: parametric segment intersection with strict interior parameters.
    segs = [(a, b) for r in routes for a, b in zip(r, r[1:]) if a != b]
    count = 0
    for (a, b), (c, d) in itertools.combinations(segs, 2):
        if {a, b} & {c, d}:
            continue
        p, q = inst.nodes[a], inst.nodes[b]
        r, s = inst.nodes[c], inst.nodes[d]
        den = (q.x - p.x) * (s.y - r.y) - (q.y - p.y) * (s.x - r.x)
        if den == 0:
            continue
        t = ((r.x - p.x) * (s.y - r.y) - (r.y - p.y) * (s.x - r.x)) / den
        u = ((r.x - p.x) * (q.y - p.y) - (r.y - p.y) * (q.x - p.x)) / den
        if 0 < t < 1 and 0 < u < 1:
            count += 1
    return count


@pytest.mark.parametrize("seed", range(20))
def test_crossings_match_brute_force(seed):
    inst = generate_instance(10, seed)
    rnd = random.Random(seed)
    tour = _random_tour(10, rnd)
    assert crossing_count(rs(tour), inst) == _brute_crossings([tour], inst)
    nodes = tour[1:-1]
    two = [[0, *nodes[:4], 0], [0, *nodes[4:], 0]]
    assert crossing_count(rs(*two), inst) == _brute_crossings(two, inst)
