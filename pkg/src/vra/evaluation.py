"""Gap statistics, paired filtering and the Wilcoxon signed-rank test."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import InputError

EXACT_MAX_N = 20
ZERO_METHOD = "wilcox"  # zero differences are dropped before ranking
GAP_REFERENCE = "savings start + guided local search computed by `vra oracle` (not an external solver)"


@dataclass
class GapSummary:
    problem_size: int
    m: int
    strategy: str
    mean_gap: float | None
    std_gap: float | None
    valid_count: int
    total_count: int


@dataclass
class PairedTestResult:
    p_value: float | None
    n_pairs: int  # nonzero differences actually ranked
    statistic: float | None
    method: str  # "exact", "normal-approximation" or "degenerate"

    @property
    def degenerate(self) -> bool:
        return self.method == "degenerate"


@dataclass
class PairedDistances:
    ids: list[str] = field(default_factory=list)
    x: list[float] = field(default_factory=list)
    y: list[float] = field(default_factory=list)
    excluded: list[tuple[str, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.ids)


def pair_filter(a, b) -> PairedDistances:
    """Pair final distances by instance id, keeping instances valid under both strategies.

    ``a`` and ``b`` are iterables of experiment records (anything with
    ``instance_id`` and ``final_distance``) covering the same instance ids.
    """
    da = {r.instance_id: r.final_distance for r in a}
    db = {r.instance_id: r.final_distance for r in b}
    if set(da) != set(db):
        only = sorted(set(da) ^ set(db))
        raise InputError(f"record sets cover different instances: {only[:5]}")
    out = PairedDistances()
    for iid in sorted(da):
        xa, xb = da[iid], db[iid]
        if xa is None and xb is None:
            out.excluded.append((iid, "both-invalid"))
        elif xa is None:
            out.excluded.append((iid, "first-invalid"))
        elif xb is None:
            out.excluded.append((iid, "second-invalid"))
        else:
            out.ids.append(iid)
            out.x.append(xa)
            out.y.append(xb)
    return out


def summarize_gaps(records) -> list[GapSummary]:
    """Mean and sample std of defined gaps per (n, m, strategy)."""
    groups: dict[tuple, list] = defaultdict(list)
    for r in records:
        groups[(r.n, r.m, r.strategy)].append(r.gap)
    out = []
    for (n, m, strategy), gaps in sorted(groups.items()):
        vals = sorted(g for g in gaps if g is not None)
        mean = statistics.fmean(vals) if vals else None
        std = statistics.stdev(vals) if len(vals) > 1 else None
        out.append(GapSummary(n, m, strategy, mean, std, len(vals), len(gaps)))
    return out


def _midranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for t in range(i, j + 1):
            ranks[order[t]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_lower_tail(doubled: list[int], w2: int) -> float:
    # Number of sign assignments (out of 2^n) whose doubled positive-rank sum is <= w2.
    counts = [1] + [0] * sum(doubled)
    top = 0
    for r in doubled:
        top += r
        for s in range(top, r - 1, -1):
            counts[s] += counts[s - r]
    return sum(counts[: w2 + 1]) / float(2 ** len(doubled))


def wilcoxon_signed_rank(x, y, method: str = "auto") -> PairedTestResult:
    """Two-sided paired Wilcoxon signed-rank test on ``x - y``.

    Zero differences are dropped, ties get mid-ranks, and the statistic is
    ``min(W+, W-)``.  Up to 20 nonzero pairs the p-value is exact, counting
    all sign assignments; above that it is the tie-corrected normal
    approximation with continuity correction.  ``method`` may force
    ``"exact"`` or ``"approx"``.
    """
    if method not in ("auto", "exact", "approx"):
        raise InputError(f"unknown method {method!r}")
    if len(x) != len(y):
        raise InputError("x and y must have equal length")
    if len(x) < 1:
        raise InputError("need at least one pair")
    d = [float(a) - float(b) for a, b in zip(x, y)]
    d = [v for v in d if v != 0.0]
    n = len(d)
    if n == 0:
        return PairedTestResult(None, 0, None, "degenerate")
    ranks = _midranks([abs(v) for v in d])
    w_plus = sum(r for r, v in zip(ranks, d) if v > 0)
    w_minus = sum(r for r, v in zip(ranks, d) if v < 0)
    w = min(w_plus, w_minus)

    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N):
        # Mid-ranks are multiples of 1/2, so doubled ranks are integers.
        doubled = [int(round(2 * r)) for r in ranks]
        p = 2.0 * _exact_lower_tail(doubled, int(round(2 * w)))
        return PairedTestResult(min(1.0, p), n, w, "exact")

    mean = n * (n + 1) / 4.0
    tie_sizes: dict[float, int] = defaultdict(int)
    for r in ranks:
        tie_sizes[r] += 1
    var = n * (n + 1) * (2 * n + 1) / 24.0 - sum(t ** 3 - t for t in tie_sizes.values()) / 48.0
    if var <= 0:
        return PairedTestResult(1.0, n, w, "normal-approximation")
    z = (w - mean + 0.5) / math.sqrt(var)
    z = min(z, 0.0)
    p = math.erfc(-z / math.sqrt(2.0))  # 2 * Phi(z)
    return PairedTestResult(min(1.0, max(0.0, p)), n, w, "normal-approximation")


# ---------------------------------------------------------------- reporting

SKIP_MARKER = "skipped"


@dataclass
class PairedCell:
    """One (baseline, strategy, n, m) cell of a paired-test table."""

    baseline: str
    strategy: str
    problem_size: int
    m: int
    pairs: int
    total: int
    test: PairedTestResult | None
    excluded: dict[str, int] = field(default_factory=dict)


def paired_cells(records, baseline: str, strategy: str) -> list[PairedCell]:
    groups: dict[tuple, dict[str, list]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        if r.strategy in (baseline, strategy):
            groups[(r.n, r.m)][r.strategy].append(r)
    cells = []
    for (n, m), by in sorted(groups.items()):
        if not by[baseline] or not by[strategy]:
            continue
        pairs = pair_filter(by[baseline], by[strategy])
        excluded: dict[str, int] = defaultdict(int)
        for _, reason in pairs.excluded:
            excluded[reason] += 1
        test = wilcoxon_signed_rank(pairs.x, pairs.y) if len(pairs) else None
        cells.append(PairedCell(baseline, strategy, n, m, len(pairs), len(pairs) + len(pairs.excluded), test, dict(excluded)))
    return cells


def format_p(p: float | None) -> str:
    if p is None:
        return SKIP_MARKER
    if p < 0.0001:
        return "<0.0001"
    return f"{p:.4f}"


def _cell_status(cell: PairedCell) -> str:
    if cell.test is None:
        return f"{SKIP_MARKER}: no valid pairs"
    if cell.test.degenerate:
        return f"{SKIP_MARKER}: all differences zero"
    return ""


def paired_table_text(cells: list[PairedCell]) -> str:
    """Rows are problem sizes; per salesman count a p-value and a pair-count column."""
    ms = sorted({c.m for c in cells})
    sizes = sorted({c.problem_size for c in cells})
    by = {(c.problem_size, c.m): c for c in cells}
    header = ["problem size"] + [f"m={m} {col}" for m in ms for col in ("p-value", "number of pairs")]
    rows = [header]
    for n in sizes:
        row = [str(n)]
        for m in ms:
            c = by.get((n, m))
            if c is None:
                row += ["-", "-"]
            else:
                row += [format_p(c.test.p_value if c.test else None), str(c.pairs)]
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows]
    notes = [f"n={c.problem_size} m={c.m}: {_cell_status(c)}" for c in cells if _cell_status(c)]
    return "\n".join(lines + ([""] + notes if notes else [])) + "\n"


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _fmt(v) -> str:
    return "" if v is None else repr(v) if isinstance(v, float) else str(v)


def _plot_gaps(summaries: list[GapSummary], out_dir: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    for m in sorted({s.m for s in summaries}):
        fig, (ax_mean, ax_std) = plt.subplots(1, 2, figsize=(10, 4), dpi=100)
        for strategy in sorted({s.strategy for s in summaries if s.m == m}):
            rows = sorted((s for s in summaries if s.m == m and s.strategy == strategy), key=lambda s: s.problem_size)
            mean_pts = [(s.problem_size, s.mean_gap) for s in rows if s.mean_gap is not None]
            std_pts = [(s.problem_size, s.std_gap) for s in rows if s.std_gap is not None]
            if mean_pts:
                ax_mean.plot(*zip(*mean_pts), marker="o", label=strategy)
            if std_pts:
                ax_std.plot(*zip(*std_pts), marker="o", label=strategy)
        ax_mean.set(title=f"mean gap, m={m}", xlabel="problem size", ylabel="gap vs. local reference (%)")
        ax_std.set(title=f"gap std, m={m}", xlabel="problem size", ylabel="std (%)")
        for ax in (ax_mean, ax_std):
            ax.axhline(0.0, color="grey", linewidth=0.8)
            if ax.lines[1:]:
                ax.legend()
        fig.tight_layout()
        path = out_dir / f"gap_m{m}.png"
        fig.savefig(path, format="png", metadata={"Software": None})
        plt.close(fig)
        written.append(path)

    baseline = "zero_shot"
    others = sorted({s.strategy for s in summaries} - {baseline})
    ms = sorted({s.m for s in summaries})
    if baseline in {s.strategy for s in summaries} and others:
        means = {(s.strategy, s.problem_size, s.m): s.mean_gap for s in summaries}
        fig, axes = plt.subplots(1, len(ms), figsize=(5 * len(ms), 4), dpi=100, squeeze=False)
        sizes = sorted({s.problem_size for s in summaries})
        width = 0.8 / len(others)
        for ax, m in zip(axes[0], ms):
            for k, strategy in enumerate(others):
                xs, hs = [], []
                for pos, n in enumerate(sizes):
                    b, o = means.get((baseline, n, m)), means.get((strategy, n, m))
                    if b is not None and o is not None:
                        xs.append(pos + (k - (len(others) - 1) / 2) * width)
                        hs.append(b - o)
                ax.bar(xs, hs, width=width, label=strategy)
            ax.set_xticks(range(len(sizes)), [str(n) for n in sizes])
            ax.axhline(0.0, color="grey", linewidth=0.8)
            ax.set(title=f"mean gap reduction vs {baseline}, m={m}", xlabel="problem size", ylabel="reduction (pct. points)")
            ax.legend()
        fig.tight_layout()
        path = out_dir / "gap_reduction.png"
        fig.savefig(path, format="png", metadata={"Software": None})
        plt.close(fig)
        written.append(path)
    return written


def emit_report(summaries: list[GapSummary], tests: dict[str, list[PairedCell]], out_dir, empty_routes=None) -> list[Path]:
    """Write gap CSV, paired-test tables, plots and ``summary.json`` into ``out_dir``.

    ``tests`` maps a comparison label such as ``"multi_agent_2_vs_zero_shot"``
    to its cells.  ``empty_routes`` (optional) lists solutions that leave a
    salesman unused and is copied into ``summary.json``.  Returns the written
    paths.
    """
    if not summaries:
        raise InputError("nothing to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    rows = [["problem_size", "m", "strategy", "mean_gap", "std_gap", "valid_count", "total_count"]]
    for s in summaries:
        rows.append([s.problem_size, s.m, s.strategy, _fmt(s.mean_gap), _fmt(s.std_gap), s.valid_count, s.total_count])
    path = out_dir / "gap_summary.csv"
    path.write_text(_csv(rows))
    written.append(path)

    for label, cells in sorted(tests.items()):
        rows = [["problem_size", "m", "p_value", "pairs", "total", "n_nonzero", "statistic", "method", "status", "excluded"]]
        for c in cells:
            t = c.test
            rows.append([
                c.problem_size, c.m, _fmt(t.p_value if t else None), c.pairs, c.total,
                t.n_pairs if t else 0, _fmt(t.statistic if t else None), t.method if t else "",
                _cell_status(c) or "tested", ";".join(f"{k}={v}" for k, v in sorted(c.excluded.items())),
            ])
        path = out_dir / f"wilcoxon_{label}.csv"
        path.write_text(_csv(rows))
        written.append(path)
        path = out_dir / f"wilcoxon_{label}.txt"
        path.write_text(paired_table_text(cells))
        written.append(path)

    written += _plot_gaps(summaries, out_dir)

    summary = {
        "zero_difference_method": ZERO_METHOD,
        "gap_reference": GAP_REFERENCE,
        "empty_routes": empty_routes or [],
        "exact_max_n": EXACT_MAX_N,
        "gap_summaries": [asdict(s) for s in summaries],
        "paired_tests": {
            label: [
                {**{k: v for k, v in asdict(c).items() if k != "test"}, "test": asdict(c.test) if c.test else None, "status": _cell_status(c) or "tested"}
                for c in cells
            ]
            for label, cells in sorted(tests.items())
        },
    }
    path = out_dir / "summary.json"
    path.write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    written.append(path)
    return written
