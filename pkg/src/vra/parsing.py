"""Parsers for agent replies: ``<<start>>...<<end>>`` route blocks and scorer lines.

Parsing never raises on bad input.  Every problem becomes a :class:`Defect`
on the returned :class:`ParseOutcome`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .solution import RouteSet

START_RE = re.compile(r"<<\s*start\s*>>", re.IGNORECASE)
END_RE = re.compile(r"<<\s*end\s*>>", re.IGNORECASE)
SALESMAN_RE = re.compile(r"^salesman\s*(\d+)\s*:\s*(.*)$", re.IGNORECASE)
DEPOT_RE = re.compile(r"^(depot|node\s*0+|0+)$", re.IGNORECASE)
NODE_RE = re.compile(r"^(?:node\s*)?(\d+)$", re.IGNORECASE)
FENCE_RE = re.compile(r"^`{3,}\w*$")

BLOCK_RE = re.compile(r"<<(.*?)>>", re.DOTALL)
SCORE_ITEM_RE = re.compile(r"^image\s*(\d+)\s*:\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+))$", re.IGNORECASE)
BEST_RE = re.compile(r"^\s*the\s+best\s+route\s*:\s*(?:image\s*)?(\S+?)\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class Defect:
    kind: str
    position: int  # line number in the reply (1-based); 0 when not line-specific
    detail: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "position": self.position, "detail": self.detail}


@dataclass
class ScoreBoard:
    scores: dict[int, float]
    best_id: int
    fallback: bool = False  # best_id came from the argmax, not the reply

    @property
    def k(self) -> int:
        return len(self.scores)


@dataclass
class ParseOutcome:
    result: RouteSet | ScoreBoard | None
    defects: list[Defect] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.result is not None


def _fail(*defects: Defect) -> ParseOutcome:
    return ParseOutcome(None, list(defects))


def _line_of(text: str, offset: int) -> int:
    return text.count("\n", 0, offset) + 1


def parse_routes(text, m: int, n: int) -> ParseOutcome:
    if not isinstance(text, str):
        return _fail(Defect("not-text", 0, type(text).__name__))
    start = START_RE.search(text)
    if start is None:
        return _fail(Defect("missing-start", 0, "no <<start>> delimiter"))
    end = END_RE.search(text, start.end())
    if end is None:
        return _fail(Defect("unterminated-block", _line_of(text, start.start()), "no <<end>> after <<start>>"))

    first_line = _line_of(text, start.end())
    lines = []
    for offset, raw in enumerate(text[start.end():end.start()].split("\n")):
        line = raw.strip()
        if line and not FENCE_RE.match(line):
            lines.append((first_line + offset, line))

    defects: list[Defect] = []
    routes: list[tuple[int, ...]] = []
    for lineno, line in lines:
        mt = SALESMAN_RE.match(line)
        if mt is None:
            defects.append(Defect("unexpected-line", lineno, line[:80]))
            continue
        expected = len(routes) + 1
        if int(mt.group(1)) != expected:
            defects.append(Defect("salesman-order", lineno, f"expected Salesman{expected}, got Salesman{mt.group(1)}"))
        route = _parse_route(mt.group(2), n, lineno, defects)
        routes.append(route)
    if len(routes) != m:
        defects.append(Defect("salesman-count", 0, f"expected {m} routes, found {len(routes)}"))
    if defects:
        return _fail(*defects)
    return ParseOutcome(RouteSet(tuple(routes)))


def _parse_route(body: str, n: int, lineno: int, defects: list[Defect]) -> tuple[int, ...]:
    tokens = [tok.strip() for tok in body.split("-")]
    if len(tokens) < 2:
        defects.append(Defect("short-route", lineno, body[:80]))
        return ()
    route = [0]
    for pos, tok in enumerate(tokens):
        edge = pos == 0 or pos == len(tokens) - 1
        if edge:
            if not DEPOT_RE.match(tok):
                defects.append(Defect("not-depot-anchored", lineno, f"route must start and end at the depot, got {tok!r}"))
            continue
        mt = NODE_RE.match(tok)
        if mt is None:
            defects.append(Defect("bad-token", lineno, repr(tok)))
            continue
        j = int(mt.group(1))
        if not 1 <= j <= n - 1:
            defects.append(Defect("index-out-of-range", lineno, f"node {j} not in 1..{n - 1}"))
            continue
        route.append(j)
    route.append(0)
    return tuple(route)


def format_routes(rs: RouteSet) -> str:
    lines = ["<<start>>"]
    for i, route in enumerate(rs.routes, start=1):
        labels = ["Depot"] + [f"Node{v}" for v in route[1:-1]] + ["Depot"]
        lines.append(f"Salesman{i}: " + "-".join(labels))
    lines.append("<<end>>")
    return "\n".join(lines)


def parse_scores(text, k: int) -> ParseOutcome:
    """Read ``<<image1: s1, ..., imagek: sk>>`` and ``<<the best route: ID>>``.

    A missing or out-of-range best route falls back to the lowest image ID
    among the maximal scores, with ``ScoreBoard.fallback`` set.
    """
    if not isinstance(text, str):
        return _fail(Defect("not-text", 0, type(text).__name__))
    score_block = best_block = None
    for mt in BLOCK_RE.finditer(text):
        body = mt.group(1)
        if best_block is None and BEST_RE.match(body):
            best_block = (mt, body)
        elif score_block is None and re.search(r"image\s*\d+\s*:", body, re.IGNORECASE):
            score_block = (mt, body)
    if score_block is None:
        return _fail(Defect("missing-scores", 0, "no <<image1: score, ...>> block"))

    mt, body = score_block
    lineno = _line_of(text, mt.start())
    defects: list[Defect] = []
    scores: dict[int, float] = {}
    for item in body.split(","):
        item = " ".join(item.split())
        if not item:
            continue
        im = SCORE_ITEM_RE.match(item)
        if im is None:
            defects.append(Defect("non-numeric-score", lineno, item[:80]))
            continue
        idx, value = int(im.group(1)), float(im.group(2))
        if not 1 <= idx <= k:
            defects.append(Defect("image-id-out-of-range", lineno, f"image{idx} not in 1..{k}"))
        elif idx in scores:
            defects.append(Defect("duplicate-image-id", lineno, f"image{idx}"))
        else:
            scores[idx] = value
    missing = [i for i in range(1, k + 1) if i not in scores]
    if missing:
        defects.append(Defect("incomplete-scores", lineno, f"no score for images {missing}"))
    if defects:
        return _fail(*defects)

    top = max(scores.values())
    argmax = min(i for i, s in scores.items() if s == top)
    best_id, fallback = argmax, True
    if best_block is not None:
        raw = BEST_RE.match(best_block[1]).group(1)
        if raw.isdigit() and 1 <= int(raw) <= k:
            best_id, fallback = int(raw), False
    return ParseOutcome(ScoreBoard(dict(sorted(scores.items())), best_id, fallback))
