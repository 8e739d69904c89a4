"""Run-directory persistence and the four experiment commands.

Layout of ``runs/<run-id>/``::

    manifest.json
    instances/n10/n10_000.csv
    reference/m1/n10_000.routes
    transcripts/<strategy>/m1/n10_000.json
    images/n10_000/<content-hash>.png
    cache/<digest>.json
    reports/
"""

from __future__ import annotations

import configparser
import json
import logging
import os
import re
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, kernels
from .errors import ConfigError, InfeasibleError, InputError
from .evaluation import emit_report, paired_cells, summarize_gaps
from .gateway import Gateway, LiveBackend, MockBackend, MockBehavior, ReplyCache
from .gateway.live import DEFAULT_BASE_URL, DEFAULT_MAX_TOKENS, DEFAULT_MODEL
from .instance import DEFAULT_SIZES, batch_seed, generate_batch, read_instance, write_instance
from .orchestrator import ExperimentRecord, StrategyConfig, run_strategy
from .parsing import format_routes, parse_routes
from .prompts import TEMPLATE_VERSION, template_hashes
from .render import RenderStyle
from .solution import total_distance, validate
from .solver import SolverConfig, guided_local_search, solve_savings

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
DEFAULT_BATCH = 30


@dataclass
class RunConfig:
    """Every tunable of ``vra run``; resolved as flags > config file > defaults."""

    backend: str = "mock"
    model_id: str = DEFAULT_MODEL
    base_url: str = DEFAULT_BASE_URL
    max_tokens: int = DEFAULT_MAX_TOKENS
    max_in_flight: int = 4
    requests_per_minute: int = 0
    hallucination_rate: float = 0.0
    initializer_hallucination_rate: float = -1.0  # negative: same as hallucination_rate
    improvement_mode: str = "best"
    mock_seed: int = 0
    max_iterations: int = 10
    ensemble_size: int = 7
    critic_temperature: float = 0.7
    initializer_temperature: float = 0.0
    return_policy: str = "best_valid"
    jobs: int = 1

    @classmethod
    def resolve(cls, config_file=None, **overrides) -> "RunConfig":
        values = {}
        types = {f.name: f.type for f in fields(cls)}
        if config_file is not None:
            values.update(read_config_file(config_file))
        values.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(values) - set(types)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        conv = {"int": int, "float": float, "str": str}
        try:
            return cls(**{k: conv[types[k]](v) for k, v in values.items()})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def strategy_config(self, strategy: str, m: int) -> StrategyConfig:
        return StrategyConfig(
            strategy=strategy, m=m, max_iterations=self.max_iterations, ensemble_size=self.ensemble_size,
            critic_temperature=self.critic_temperature, initializer_temperature=self.initializer_temperature,
            return_policy=self.return_policy,
        )

    def mock_behavior(self) -> MockBehavior:
        ih = self.initializer_hallucination_rate
        return MockBehavior(self.hallucination_rate, self.improvement_mode, self.mock_seed, None if ih < 0 else ih)

    def make_backend(self):
        if self.backend == "mock":
            return MockBackend(self.mock_behavior())
        if self.backend == "live":
            return LiveBackend(self.base_url, self.model_id, max_tokens=self.max_tokens)
        raise ConfigError(f"unknown backend {self.backend!r}")


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` comments; no sections needed."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string("[vra]\n" + Path(path).read_text())
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return {k.replace("-", "_"): v for k, v in parser["vra"].items()}


# ---------------------------------------------------------------- files


def _atomic_write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    mode = "wb" if isinstance(data, bytes) else "w"
    with os.fdopen(fd, mode) as fh:
        fh.write(data)
    os.replace(tmp, path)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    run_id: str
    tool_version: str = __version__
    config: dict = field(default_factory=dict)
    # The only wall-clock data in a run directory.
    timestamps: dict = field(default_factory=dict)

    @classmethod
    def load(cls, run_dir: Path) -> "RunManifest":
        path = Path(run_dir) / MANIFEST
        if path.exists():
            return cls(**json.loads(path.read_text()))
        return cls(run_id=Path(run_dir).name)

    def save(self, run_dir: Path) -> None:
        _atomic_write(Path(run_dir) / MANIFEST, json.dumps(asdict(self), indent=1, sort_keys=True) + "\n")

    def record(self, run_dir: Path, section: str, payload) -> None:
        self.config[section] = payload
        self.timestamps[section] = _now()
        self.save(run_dir)


def instance_paths(run_dir: Path) -> list[Path]:
    return sorted((Path(run_dir) / "instances").glob("n*/*.csv"))


def load_instances(run_dir: Path):
    manifest = RunManifest.load(run_dir)
    seeds = manifest.config.get("generate", {}).get("seeds", {})
    return [read_instance(p, seed=seeds.get(p.stem)) for p in instance_paths(run_dir)]


def reference_path(run_dir: Path, m: int, instance_id: str) -> Path:
    return Path(run_dir) / "reference" / f"m{m}" / f"{instance_id}.routes"


def read_reference(run_dir: Path, m: int, inst) -> float | None:
    path = reference_path(run_dir, m, inst.id)
    if not path.exists():
        return None
    text = path.read_text()
    outcome = parse_routes(text, m, inst.n)
    match = re.search(r"^distance:\s*(\S+)\s*$", text, re.MULTILINE)
    if not outcome.ok or match is None:
        raise InputError(f"corrupt reference file {path}")
    return float(match.group(1))


def transcript_path(run_dir: Path, strategy: str, m: int, instance_id: str) -> Path:
    return Path(run_dir) / "transcripts" / strategy / f"m{m}" / f"{instance_id}.json"


def write_record(path: Path, rec: ExperimentRecord) -> None:
    _atomic_write(path, json.dumps(rec.to_dict(), indent=1, sort_keys=True) + "\n")


def load_records(run_dir: Path) -> list[ExperimentRecord]:
    out = []
    for path in sorted((Path(run_dir) / "transcripts").glob("*/m*/*.json")):
        out.append(ExperimentRecord.from_dict(json.loads(path.read_text())))
    return out


# ---------------------------------------------------------------- commands


def cmd_generate(run_dir, sizes=DEFAULT_SIZES, count: int = DEFAULT_BATCH, seed: int = 1, force: bool = False) -> list[Path]:
    run_dir = Path(run_dir)
    inst_dir = run_dir / "instances"
    if any(s < 2 for s in sizes):
        raise ConfigError("problem sizes must be >= 2")
    if count < 1:
        raise ConfigError("count must be >= 1")
    if inst_dir.exists() and any(inst_dir.iterdir()):
        if not force:
            raise ConfigError(f"{inst_dir} is not empty; pass --force to overwrite")
        shutil.rmtree(inst_dir)
    written = []
    for inst in generate_batch(sizes, count, seed):
        path = inst_dir / f"n{inst.n:02d}" / f"{inst.id}.csv"
        write_instance(inst, path)
        written.append(path)
    manifest = RunManifest.load(run_dir)
    manifest.record(run_dir, "generate", {
        "sizes": list(sizes), "count": count, "seed": seed, "extent": 5.0,
        "rng": "numpy PCG64, x then y per point, depot = first point",
        "seeds": {f"n{n:02d}_{i:03d}": batch_seed(seed, n, i) for n in sizes for i in range(count)},
    })
    return written


def _solve_reference(inst, m: int, cfg: SolverConfig):
    start = solve_savings(inst, m)
    return guided_local_search(start, inst, cfg)


def cmd_oracle(run_dir, m: int = 1, time_limit: float = 120.0, iterations: int | None = None,
               gls_lambda: float = 0.1, jobs: int = 1) -> dict[str, str]:
    """Savings + guided local search reference per instance.  Returns per-instance errors."""
    run_dir = Path(run_dir)
    instances = load_instances(run_dir)
    if not instances:
        raise InputError(f"no instances under {run_dir / 'instances'}")
    cfg = SolverConfig(m=m, time_limit=time_limit, iteration_limit=iterations, gls_lambda=gls_lambda)
    errors: dict[str, str] = {}

    def one(inst):
        try:
            res = _solve_reference(inst, m, cfg)
        except InfeasibleError as exc:
            errors[inst.id] = str(exc)
            return
        assert validate(res.routes, inst, m).valid
        dist = total_distance(res.routes, inst, m)
        _atomic_write(reference_path(run_dir, m, inst.id), format_routes(res.routes) + f"\ndistance: {dist!r}\n")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(one, instances))
    else:
        for inst in instances:
            one(inst)
    manifest = RunManifest.load(run_dir)
    manifest.record(run_dir, f"oracle/m{m}", {
        "m": m, "budget_mode": cfg.budget_mode, "time_limit": time_limit, "iterations": iterations,
        "gls_lambda": gls_lambda, "neighborhoods": list(cfg.neighborhoods), "kernel_backend": kernels.BACKEND,
        "errors": dict(sorted(errors.items())),
    })
    return errors


def _image_sink(run_dir: Path):
    def sink(instance_id: str, img) -> None:
        path = run_dir / "images" / instance_id / f"{img.content_hash[:16]}.{img.format}"
        if not path.exists():
            _atomic_write(path, img.bytes)
    return sink


def cmd_run(run_dir, strategy: str, m: int = 1, config: RunConfig | None = None,
            style: RenderStyle = RenderStyle()) -> list[ExperimentRecord]:
    """One record per instance; instances that already have a transcript are skipped."""
    run_dir = Path(run_dir)
    config = config or RunConfig()
    scfg = config.strategy_config(strategy, m)
    backend = config.make_backend()  # misconfiguration fails here, before any call
    instances = load_instances(run_dir)
    if not instances:
        raise InputError(f"no instances under {run_dir / 'instances'}")
    refs = {inst.id: read_reference(run_dir, m, inst) for inst in instances}
    if all(v is None for v in refs.values()):
        raise InputError(f"no reference solutions for m={m}; run `vra oracle` first")
    gw = Gateway(backend, ReplyCache(run_dir / "cache"), config.max_in_flight, config.requests_per_minute or None)
    sink = _image_sink(run_dir)

    def one(inst):
        path = transcript_path(run_dir, strategy, m, inst.id)
        if path.exists():
            return ExperimentRecord.from_dict(json.loads(path.read_text()))
        rec = run_strategy(inst, scfg, gw, refs[inst.id], style, sink)
        if rec.error:
            log.error("%s: %s", inst.id, rec.error)
        write_record(path, rec)
        return rec

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(one, instances))
    else:
        records = [one(inst) for inst in instances]

    manifest = RunManifest.load(run_dir)
    manifest.record(run_dir, f"run/{strategy}/m{m}", {
        "strategy_config": asdict(scfg),
        "run_config": asdict(config),
        "backend_model_id": backend.model_id,
        "render_style_hash": style.style_hash(),
        "render_style": asdict(style),
        "prompt_template_version": TEMPLATE_VERSION,
        "prompt_template_hashes": template_hashes(),
        "cache_entries": len(list((run_dir / "cache").glob("*.json"))),
    })
    return records


def comparisons(strategies) -> list[tuple[str, str]]:
    strategies = sorted(strategies)
    if "zero_shot" in strategies:
        return [("zero_shot", s) for s in strategies if s != "zero_shot"]
    return list(zip(strategies, strategies[1:]))


def _empty_route_counts(run_dir: Path, records) -> list[dict]:
    """Per (source, n, m): how many final or reference solutions leave a salesman unused."""
    counts: dict[tuple, list[int]] = {}
    for r in records:
        if r.m < 2:
            continue
        key = (r.strategy, r.n, r.m)
        tally = counts.setdefault(key, [0, 0])
        tally[1] += 1
        if r.final is not None and any(len(route) == 2 for route in r.final):
            tally[0] += 1
    for path in sorted((run_dir / "reference").glob("m*/*.routes")):
        mm, mn = re.fullmatch(r"m(\d+)", path.parent.name), re.match(r"n(\d+)_", path.stem)
        if mm is None or mn is None or int(mm.group(1)) < 2:
            continue
        m, n = int(mm.group(1)), int(mn.group(1))
        outcome = parse_routes(path.read_text(), m, n)
        key = ("reference", n, m)
        tally = counts.setdefault(key, [0, 0])
        tally[1] += 1
        if outcome.ok and any(len(route) == 2 for route in outcome.result.routes):
            tally[0] += 1
    return [{"source": s, "problem_size": n, "m": m, "with_empty_route": c, "total": t}
            for (s, n, m), (c, t) in sorted(counts.items())]


def cmd_report(run_dir) -> list[Path]:
    run_dir = Path(run_dir)
    records = load_records(run_dir)
    if not records:
        raise InputError(f"no transcripts under {run_dir / 'transcripts'}")
    out_dir = run_dir / "reports"
    summaries = summarize_gaps(records)
    tests = {}
    for base, other in comparisons({r.strategy for r in records}):
        tests[f"{other}_vs_{base}"] = paired_cells(records, base, other)
    written = emit_report(summaries, tests, out_dir, _empty_route_counts(run_dir, records))
    notice = out_dir / "NOTICE.txt"
    if not any(r.gap is not None for r in records):
        notice.write_text("empty report: no record has a valid final route with a reference distance\n")
        written.append(notice)
    elif notice.exists():
        notice.unlink()
    manifest = RunManifest.load(run_dir)
    manifest.record(run_dir, "report", {"files": sorted(p.name for p in written)})
    return written
