import itertools
import random

import pytest

from vra.errors import DomainError, InfeasibleError, InvalidSizeError
from vra.instance import Instance, Point, generate_instance
from vra.solution import RouteSet, total_distance, validate
from vra.solver import SolverConfig, guided_local_search, improve_gls, solve_exact, solve_savings


def brute_force_optimum(inst, m):
    """Label every customer with a salesman, then try every order within each route."""
    D = inst.matrix()
    customers = range(1, inst.n)
    best = float("inf")

    def route_cost(nodes):
        if not nodes:
            return 0.0
        out = float("inf")
        for perm in itertools.permutations(nodes):
            seq = (0, *perm, 0)
            out = min(out, sum(D[a, b] for a, b in zip(seq, seq[1:])))
        return out

    for labels in itertools.product(range(m), repeat=inst.n - 1):
        groups = [[v for v, lab in zip(customers, labels) if lab == s] for s in range(m)]
        best = min(best, sum(route_cost(g) for g in groups))
    return best


@pytest.mark.parametrize("n,m,seed", [(4, 1, 0), (5, 1, 1), (6, 1, 2), (5, 2, 3), (6, 2, 4), (6, 3, 5), (7, 2, 6)])
def test_exact_matches_brute_force(n, m, seed):
    inst = generate_instance(n, seed)
    rs = solve_exact(inst, m)
    assert validate(rs, inst, m).valid
    assert total_distance(rs, inst) == pytest.approx(brute_force_optimum(inst, m), abs=1e-9)


def test_exact_size_guard():
    with pytest.raises(InvalidSizeError):
        solve_exact(generate_instance(11, 0), 1)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_savings_builds_m_nonempty_routes(m):
    inst = generate_instance(20, 3)
    rs = solve_savings(inst, m)
    assert validate(rs, inst, m).valid
    assert rs.m == m and all(len(r) > 2 for r in rs.routes)


def test_savings_needs_more_customers_than_salesmen():
    with pytest.raises(InfeasibleError):
        solve_savings(generate_instance(3, 0), 3)


@pytest.mark.parametrize("seed", range(10))
def test_gls_between_exact_and_savings(seed):
    rnd = random.Random(seed)
    n, m = rnd.randint(5, 8), rnd.randint(1, 2)
    inst = generate_instance(n, seed)
    start = solve_savings(inst, m)
    res = guided_local_search(start, inst, SolverConfig(m=m, iteration_limit=50))
    assert validate(res.routes, inst, m).valid
    d = total_distance(res.routes, inst)
    assert d == pytest.approx(res.distance, abs=1e-9)
    assert total_distance(solve_exact(inst, m), inst) - 1e-9 <= d <= total_distance(start, inst) + 1e-9


def test_gls_iterations_deterministic():
    inst = generate_instance(25, 9)
    cfg = SolverConfig(m=3, iteration_limit=40)
    a = improve_gls(solve_savings(inst, 3), inst, cfg)
    b = improve_gls(solve_savings(inst, 3), inst, cfg)
    assert a == b


def test_gls_history_never_increases():
    inst = generate_instance(20, 2)
    res = guided_local_search(solve_savings(inst, 2), inst, SolverConfig(m=2, iteration_limit=30))
    assert all(b < a for a, b in zip(res.history, res.history[1:]))
    assert res.rounds == 30


def test_tiny_time_limit_still_valid():
    inst = generate_instance(35, 4)
    start = solve_savings(inst, 3)
    rs = improve_gls(start, inst, SolverConfig(m=3, time_limit=0.001))
    assert validate(rs, inst, 3).valid
    assert total_distance(rs, inst) <= total_distance(start, inst) + 1e-9


def test_two_node_instance():
    inst = Instance("two", (Point(0, 0), Point(3, 4)))
    rs = improve_gls(RouteSet(((0, 1, 0),)), inst, SolverConfig(m=1, iteration_limit=5))
    assert total_distance(rs, inst) == 10.0


def test_gls_rejects_invalid_start(unit_square):
    with pytest.raises(DomainError):
        guided_local_search(RouteSet(((0, 1, 2, 0),)), unit_square, SolverConfig(m=1, iteration_limit=1))


@pytest.mark.parametrize("kwargs", [dict(gls_lambda=0), dict(time_limit=0), dict(iteration_limit=-1), dict(neighborhoods=("three_opt",))])
def test_solver_config_validation(kwargs):
    with pytest.raises(DomainError):
        SolverConfig(**kwargs)
