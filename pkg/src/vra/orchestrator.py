"""Zero-shot, Initializer/Critic/Scorer, and Initializer/Critic loops.

Each run returns an :class:`ExperimentRecord`: every prompt, image hash,
reply, parsed candidate, validity verdict and distance, plus the final pick.
"""

from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from .errors import ConfigError, VRAError
from .gateway import AgentRequest, Gateway, MockContext
from .instance import Instance
from .parsing import parse_routes, parse_scores
from .prompts import critic_prompt, initializer_prompt, scorer_prompt
from .render import RenderedImage, RenderStyle, render_instance, render_solution
from .solution import RouteSet, gap_percent, total_distance, validate

STRATEGIES = ("zero_shot", "multi_agent_1", "multi_agent_2")
RETURN_POLICIES = ("best_valid", "last_valid")


@dataclass
class StrategyConfig:
    strategy: str = "zero_shot"
    m: int = 1
    max_iterations: int = 10
    ensemble_size: int = 7
    critic_temperature: float = 0.7
    initializer_temperature: float = 0.0
    return_policy: str = "best_valid"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.return_policy not in RETURN_POLICIES:
            raise ConfigError(f"unknown return policy {self.return_policy!r}")
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.strategy == "multi_agent_1" and self.ensemble_size < 2:
            raise ConfigError("multi_agent_1 needs ensemble_size >= 2")


@dataclass
class AgentExchange:
    role: str
    prompt: str
    images: list[str]
    temperature: float
    sample_index: int
    reply: str
    from_cache: bool
    latency_ms: float
    parse_ok: bool
    defects: list[dict] = field(default_factory=list)
    scores: dict[str, float] | None = None
    best_id: int | None = None
    best_id_fallback: bool = False


@dataclass
class Candidate:
    routes: list[list[int]] | None
    valid: bool
    distance: float | None
    image: str | None = None
    missing: list[int] = field(default_factory=list)
    duplicated: list[int] = field(default_factory=list)
    empty_routes: list[int] = field(default_factory=list)

    @property
    def route_set(self) -> RouteSet | None:
        return None if self.routes is None else RouteSet(tuple(tuple(r) for r in self.routes))


@dataclass
class IterationRecord:
    index: int
    exchanges: list[AgentExchange] = field(default_factory=list)
    candidates: list[Candidate] = field(default_factory=list)
    # None only when no candidate of the iteration parsed; the incumbent is kept.
    selected: int | None = None
    selected_image: str | None = None
    degraded: bool = False
    note: str = ""


@dataclass
class ExperimentRecord:
    instance_id: str
    n: int
    strategy_config: StrategyConfig
    iterations: list[IterationRecord] = field(default_factory=list)
    final: list[list[int]] | None = None
    final_distance: float | None = None
    final_from: list[int] | None = None  # [iteration, candidate]
    reference_distance: float | None = None
    gap: float | None = None
    wall_time: float = 0.0
    error: str | None = None

    @property
    def strategy(self) -> str:
        return self.strategy_config.strategy

    @property
    def m(self) -> int:
        return self.strategy_config.m

    def exchange_count(self) -> int:
        return sum(len(it.exchanges) for it in self.iterations)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentRecord":
        data = dict(data)
        data["strategy_config"] = StrategyConfig(**data["strategy_config"])
        its = []
        for it in data.get("iterations", []):
            it = dict(it)
            it["exchanges"] = [AgentExchange(**ex) for ex in it["exchanges"]]
            it["candidates"] = [Candidate(**c) for c in it["candidates"]]
            its.append(IterationRecord(**it))
        data["iterations"] = its
        return cls(**data)


class _Runner:
    def __init__(self, inst: Instance, cfg: StrategyConfig, gw: Gateway, style: RenderStyle, image_sink):
        self.inst = inst
        self.cfg = cfg
        self.gw = gw
        self.style = style
        self.image_sink = image_sink
        self._draws: Counter = Counter()

    def image(self, rs: RouteSet | None) -> RenderedImage:
        img = render_instance(self.inst, self.style) if rs is None else render_solution(self.inst, rs, self.style)
        if self.image_sink is not None:
            self.image_sink(self.inst.id, img)
        return img

    def candidate(self, text: str) -> tuple[Candidate, list]:
        outcome = parse_routes(text, self.cfg.m, self.inst.n)
        if not outcome.ok:
            return Candidate(None, False, None), [d.to_dict() for d in outcome.defects]
        rs = outcome.result
        report = validate(rs, self.inst, self.cfg.m)
        cand = Candidate(
            rs.as_lists(),
            report.valid,
            total_distance(rs, self.inst, self.cfg.m),
            missing=sorted(report.missing),
            duplicated=sorted(report.duplicated),
            empty_routes=list(report.empty_routes),
        )
        return cand, []

    def call(self, role, prompt, images, temperature, sample_index, ctx):
        req = AgentRequest(role, prompt, tuple(images), temperature, sample_index, self.gw.model_id)
        reply = self.gw.invoke(req, ctx)
        return req, reply

    def route_exchange(self, req, reply) -> tuple[AgentExchange, Candidate]:
        cand, defects = self.candidate(reply.text)
        ex = AgentExchange(
            req.role, req.prompt.text, [im.content_hash for im in req.images], req.temperature,
            req.sample_index, reply.text, reply.from_cache, round(reply.latency_ms, 3), cand.routes is not None, defects,
        )
        if cand.routes is not None:
            cand.image = self.image(cand.route_set).content_hash
        return ex, cand

    def initialize(self) -> IterationRecord:
        img = self.image(None)
        ctx = MockContext(self.inst, self.cfg.m)
        req, reply = self.call("initializer", initializer_prompt(self.cfg.m), [img], self.cfg.initializer_temperature, 0, ctx)
        ex, cand = self.route_exchange(req, reply)
        return IterationRecord(0, [ex], [cand], 0, cand.image)

    def critic_round(self, index: int, incumbent: RouteSet | None, k: int) -> IterationRecord:
        img = self.image(incumbent)
        # Repeated identical inputs get fresh sample indices so cached draws are not recycled.
        base = self._draws[img.content_hash] * k
        self._draws[img.content_hash] += 1
        ctx = MockContext(self.inst, self.cfg.m, incumbent)
        prompt = critic_prompt(self.cfg.m)
        temp = self.cfg.critic_temperature

        def one(s):
            return self.call("critic", prompt, [img], temp, base + s, ctx)

        if k > 1 and self.gw.backend.kind == "live":
            with ThreadPoolExecutor(max_workers=min(k, self.gw.max_in_flight)) as pool:
                results = list(pool.map(one, range(k)))
        else:
            results = [one(s) for s in range(k)]
        record = IterationRecord(index)
        for req, reply in results:
            ex, cand = self.route_exchange(req, reply)
            record.exchanges.append(ex)
            record.candidates.append(cand)
        return record

    def score(self, record: IterationRecord) -> None:
        parsed = [i for i, c in enumerate(record.candidates) if c.routes is not None]
        if not parsed:
            record.note = "no candidate parsed; incumbent kept"
            return
        if len(parsed) == 1:
            record.selected = parsed[0]
            if self.cfg.strategy == "multi_agent_1":
                record.degraded = True
                record.note = "single parsed candidate; scorer skipped"
        else:
            cands = [record.candidates[i] for i in parsed]
            images = [self.image(c.route_set) for c in cands]
            ctx = MockContext(self.inst, self.cfg.m, candidates=tuple(c.route_set for c in cands))
            req, reply = self.call("scorer", scorer_prompt(len(parsed)), images, self.cfg.critic_temperature, 0, ctx)
            outcome = parse_scores(reply.text, len(parsed))
            ex = AgentExchange(
                "scorer", req.prompt.text, [im.content_hash for im in images], req.temperature, 0,
                reply.text, reply.from_cache, round(reply.latency_ms, 3), outcome.ok,
                [d.to_dict() for d in outcome.defects],
            )
            if outcome.ok:
                board = outcome.result
                ex.scores = {str(i): s for i, s in board.scores.items()}
                ex.best_id, ex.best_id_fallback = board.best_id, board.fallback
                record.selected = parsed[board.best_id - 1]
                if board.fallback:
                    record.note = "best route missing or out of range; highest score used"
            else:
                record.selected = parsed[0]
                record.note = "scorer reply unparseable; first parsed candidate used"
            record.exchanges.append(ex)
        record.selected_image = record.candidates[record.selected].image


def _finish(rec: ExperimentRecord, reference_distance: float | None, t0: float) -> ExperimentRecord:
    cfg = rec.strategy_config
    pool = []
    incumbents = []
    for it in rec.iterations:
        for ci, c in enumerate(it.candidates):
            if c.valid:
                pool.append((c.distance, it.index, ci, c))
        if it.selected is not None and it.candidates[it.selected].valid:
            incumbents.append((it.index, it.selected, it.candidates[it.selected]))
    chosen = None
    if cfg.return_policy == "best_valid" and pool:
        d, i, ci, c = min(pool, key=lambda p: (p[0], p[1], p[2]))
        chosen = (i, ci, c)
    elif cfg.return_policy == "last_valid" and incumbents:
        chosen = incumbents[-1]
    if chosen is not None:
        i, ci, c = chosen
        rec.final, rec.final_distance, rec.final_from = c.routes, c.distance, [i, ci]
    rec.reference_distance = reference_distance
    if reference_distance is not None and rec.final_distance is not None:
        rec.gap = gap_percent(rec.final_distance, reference_distance)
    rec.wall_time = time.perf_counter() - t0
    return rec


def _start(inst, cfg, expected):
    if cfg.strategy != expected:
        raise ConfigError(f"config strategy is {cfg.strategy!r}, expected {expected!r}")
    return ExperimentRecord(inst.id, inst.n, cfg), time.perf_counter()


def run_zero_shot(inst: Instance, cfg: StrategyConfig, gw: Gateway, reference_distance=None,
                  style: RenderStyle = RenderStyle(), image_sink=None) -> ExperimentRecord:
    rec, t0 = _start(inst, cfg, "zero_shot")
    runner = _Runner(inst, cfg, gw, style, image_sink)
    rec.iterations.append(runner.initialize())
    return _finish(rec, reference_distance, t0)


def run_multi_agent_1(inst: Instance, cfg: StrategyConfig, gw: Gateway, reference_distance=None,
                      style: RenderStyle = RenderStyle(), image_sink=None) -> ExperimentRecord:
    rec, t0 = _start(inst, cfg, "multi_agent_1")
    runner = _Runner(inst, cfg, gw, style, image_sink)
    first = runner.initialize()
    rec.iterations.append(first)
    incumbent = first.candidates[0].route_set
    for index in range(1, cfg.max_iterations + 1):
        it = runner.critic_round(index, incumbent, cfg.ensemble_size)
        runner.score(it)
        rec.iterations.append(it)
        if it.selected is not None:
            incumbent = it.candidates[it.selected].route_set
    return _finish(rec, reference_distance, t0)


def run_multi_agent_2(inst: Instance, cfg: StrategyConfig, gw: Gateway, reference_distance=None,
                      style: RenderStyle = RenderStyle(), image_sink=None) -> ExperimentRecord:
    rec, t0 = _start(inst, cfg, "multi_agent_2")
    runner = _Runner(inst, cfg, gw, style, image_sink)
    first = runner.initialize()
    rec.iterations.append(first)
    incumbent = first.candidates[0].route_set
    for index in range(1, cfg.max_iterations + 1):
        it = runner.critic_round(index, incumbent, 1)
        runner.score(it)
        rec.iterations.append(it)
        if it.selected is not None:
            incumbent = it.candidates[it.selected].route_set
    return _finish(rec, reference_distance, t0)


RUNNERS = {
    "zero_shot": run_zero_shot,
    "multi_agent_1": run_multi_agent_1,
    "multi_agent_2": run_multi_agent_2,
}


def run_strategy(inst: Instance, cfg: StrategyConfig, gw: Gateway, reference_distance=None,
                 style: RenderStyle = RenderStyle(), image_sink=None) -> ExperimentRecord:
    """Dispatch on ``cfg.strategy``; gateway failures come back as a failed record."""
    t0 = time.perf_counter()
    try:
        return RUNNERS[cfg.strategy](inst, cfg, gw, reference_distance, style, image_sink)
    except VRAError as exc:
        rec = ExperimentRecord(inst.id, inst.n, cfg, reference_distance=reference_distance)
        rec.error = f"{type(exc).__name__}: {exc}"
        rec.wall_time = time.perf_counter() - t0
        return rec
