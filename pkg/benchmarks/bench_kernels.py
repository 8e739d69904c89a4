"""Compiled vs pure-Python local-search kernels.

    python3 benchmarks/bench_kernels.py [--sizes 10,20,35] [--repeat 5]

Times one full-neighbourhood ``best_move`` scan and a 100-round guided local
search per size, for each available backend, and checks both pick the same
moves.
"""

import argparse
import random
import statistics
import time
from unittest import mock

import numpy as np

from vra import kernels
from vra.instance import generate_instance
from vra.kernels import _pykernels
from vra.solver import SolverConfig, guided_local_search, solve_savings

try:
    from vra.kernels import _ckernels
except ImportError:
    _ckernels = None


def giant_tour(n, m, rnd):
    nodes = list(range(1, n))
    rnd.shuffle(nodes)
    q = len(nodes) // m
    tour = [0]
    for s in range(m):
        tour += nodes[s * q:(s + 1) * q if s < m - 1 else None] + [0]
    return np.array(tour, dtype=np.int_)


def timeit(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def gls_with(module, inst, m, rounds):
    with mock.patch.object(kernels, "best_move", module.best_move), mock.patch.object(kernels, "tour_cost", module.tour_cost):
        return guided_local_search(solve_savings(inst, m), inst, SolverConfig(m=m, iteration_limit=rounds))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="10,20,35")
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--rounds", type=int, default=100)
    args = ap.parse_args()

    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled kernels not built; timing the Python fallback only")

    print(f"{'n':>4} {'backend':>8} {'best_move ms':>13} {'gls ms':>10} {'gls dist':>10}")
    for n in (int(v) for v in args.sizes.split(",")):
        inst = generate_instance(n, n)
        D = inst.matrix()
        tour = giant_tour(n, args.m, random.Random(n))
        moves, results, gls_time = {}, {}, {}
        for name, mod in backends.items():
            moves[name] = mod.best_move(tour, D, kernels.ALL_MOVES, 1e-10)
            scan = timeit(lambda: mod.best_move(tour, D, kernels.ALL_MOVES, 1e-10), args.repeat)
            t_gls = gls_time[name] = timeit(lambda: results.__setitem__(name, gls_with(mod, inst, args.m, args.rounds)), args.repeat)
            print(f"{n:>4} {name:>8} {scan * 1e3:>13.3f} {t_gls * 1e3:>10.1f} {results[name].distance:>10.4f}")
        if len(backends) == 2:
            assert moves["python"] == moves["cython"], "backends disagree on the best move"
            assert results["python"].routes == results["cython"].routes
            print(f"{'':>4} {'speedup':>8} {'':>13} {gls_time['python'] / gls_time['cython']:>9.1f}x")


if __name__ == "__main__":
    main()
