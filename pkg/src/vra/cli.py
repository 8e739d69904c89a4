"""Command line: ``vra generate|oracle|run|report``.

Failures exit non-zero after printing one JSON line on stderr, e.g.
``{"error": "ConfigError", "message": "..."}``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .errors import VRAError
from .orchestrator import RETURN_POLICIES, STRATEGIES
from .runner import DEFAULT_BATCH, RunConfig, cmd_generate, cmd_oracle, cmd_report, cmd_run


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vra", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"vra {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write uniform random instances")
    g.add_argument("run_dir")
    g.add_argument("--sizes", type=_ints, default=[10, 15, 20, 25, 30, 35])
    g.add_argument("--count", type=int, default=DEFAULT_BATCH)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--force", action="store_true", help="replace existing instances")

    o = sub.add_parser("oracle", help="savings + guided local search reference solutions")
    o.add_argument("run_dir")
    o.add_argument("--m", type=_ints, default=[1], help="salesman counts, e.g. 1,2,3")
    budget = o.add_mutually_exclusive_group()
    budget.add_argument("--time-limit", type=float, default=120.0, help="seconds per instance")
    budget.add_argument("--iterations", type=int, help="penalty rounds per instance (deterministic)")
    o.add_argument("--gls-lambda", type=float, default=0.1)
    o.add_argument("--jobs", type=int, default=1)

    r = sub.add_parser("run", help="run one strategy over every instance")
    r.add_argument("run_dir")
    r.add_argument("--strategy", choices=STRATEGIES, required=True)
    r.add_argument("--m", type=_ints, default=[1])
    r.add_argument("--config", help="key = value config file")
    r.add_argument("--backend", choices=("mock", "live"))
    r.add_argument("--model-id")
    r.add_argument("--base-url")
    r.add_argument("--max-tokens", type=int)
    r.add_argument("--max-in-flight", type=int)
    r.add_argument("--requests-per-minute", type=int)
    r.add_argument("--hallucination-rate", type=float)
    r.add_argument("--initializer-hallucination-rate", type=float)
    r.add_argument("--improvement-mode", choices=("best", "random"))
    r.add_argument("--mock-seed", type=int)
    r.add_argument("--max-iterations", type=int)
    r.add_argument("--ensemble-size", type=int)
    r.add_argument("--critic-temperature", type=float)
    r.add_argument("--initializer-temperature", type=float)
    r.add_argument("--return-policy", choices=RETURN_POLICIES)
    r.add_argument("--jobs", type=int)

    rp = sub.add_parser("report", help="gap tables, Wilcoxon tables and plots")
    rp.add_argument("run_dir")
    return p


RUN_KEYS = [
    "backend", "model_id", "base_url", "max_tokens", "max_in_flight", "requests_per_minute",
    "hallucination_rate", "initializer_hallucination_rate", "improvement_mode", "mock_seed",
    "max_iterations", "ensemble_size", "critic_temperature", "initializer_temperature", "return_policy", "jobs",
]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "generate":
            paths = cmd_generate(args.run_dir, args.sizes, args.count, args.seed, args.force)
            print(f"wrote {len(paths)} instances")
        elif args.command == "oracle":
            for m in args.m:
                iterations = args.iterations
                errors = cmd_oracle(args.run_dir, m, args.time_limit, iterations, args.gls_lambda, args.jobs)
                for iid, msg in sorted(errors.items()):
                    print(f"m={m} {iid}: {msg}", file=sys.stderr)
                print(f"m={m}: reference solutions written ({len(errors)} infeasible)")
        elif args.command == "run":
            config = RunConfig.resolve(args.config, **{k: getattr(args, k) for k in RUN_KEYS})
            for m in args.m:
                records = cmd_run(args.run_dir, args.strategy, m, config)
                failed = sum(1 for r in records if r.error)
                valid = sum(1 for r in records if r.final_distance is not None)
                print(f"{args.strategy} m={m}: {len(records)} records, {valid} valid, {failed} failed")
        elif args.command == "report":
            paths = cmd_report(args.run_dir)
            for path in paths:
                print(path)
    except VRAError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
