import itertools
import json
import math
import random
from dataclasses import dataclass

import numpy as np
import pytest

from vra.errors import InputError
from vra.evaluation import (
    SKIP_MARKER,
    emit_report,
    format_p,
    pair_filter,
    paired_cells,
    paired_table_text,
    summarize_gaps,
    wilcoxon_signed_rank,
)


@dataclass
class Rec:
    instance_id: str
    final_distance: float | None
    n: int = 10
    strategy: str = "zero_shot"
    gap: float | None = None
    m: int = 1


def enumeration_p(d):
    """Two-sided p over all 2^n sign flips of the mid-ranks, measured as distance from the mean."""
    d = [v for v in d if v != 0]
    if not d:
        return None
    a = [abs(v) for v in d]
    ranks = [sum(1 for u in a if u < v) + (sum(1 for u in a if u == v) + 1) / 2 for v in a]
    obs = sum(r for r, v in zip(ranks, d) if v > 0)
    mean = sum(ranks) / 2
    hits = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        t = sum(r for r, s in zip(ranks, signs) if s)
        if abs(t - mean) >= abs(obs - mean) - 1e-9:
            hits += 1
    return hits / 2 ** len(d)


def test_pair_filter_counts():
    a = [Rec(f"i{k}", 10.0 + k) for k in range(30)]
    b = [Rec(f"i{k}", 9.0 + k) for k in range(30)]
    assert len(pair_filter(a, b)) == 30
    for k in (2, 9, 17):
        a[k].final_distance = None
    out = pair_filter(a, b)
    assert len(out) == 27 and {r for _, r in out.excluded} == {"first-invalid"}
    b[2].final_distance = None
    b[3].final_distance = None
    reasons = dict(pair_filter(a, b).excluded)
    assert reasons["i2"] == "both-invalid" and reasons["i3"] == "second-invalid"
    allbad = [Rec(f"i{k}", None) for k in range(30)]
    assert len(pair_filter(allbad, b)) == 0


def test_pair_filter_id_mismatch():
    with pytest.raises(InputError):
        pair_filter([Rec("a", 1.0)], [Rec("b", 1.0)])


def test_gap_summary_examples():
    recs = [Rec(f"i{k}", 1.0, gap=0.0) for k in range(3)]
    (s,) = summarize_gaps(recs)
    assert s.mean_gap == 0.0 and s.std_gap == 0.0
    (s,) = summarize_gaps([Rec("a", 1.0, gap=-10.0), Rec("b", 1.0, gap=10.0), Rec("c", None, gap=None)])
    assert s.mean_gap == 0.0 and s.std_gap == pytest.approx(14.142135623730951, abs=1e-12)
    assert (s.valid_count, s.total_count) == (2, 3)


def test_gap_summary_matches_numpy():
    rnd = random.Random(1)
    gaps = [rnd.uniform(-5, 40) for _ in range(10)]
    (s,) = summarize_gaps([Rec(str(i), 1.0, gap=g) for i, g in enumerate(gaps)])
    assert s.mean_gap == pytest.approx(np.mean(gaps), abs=1e-12)
    assert s.std_gap == pytest.approx(np.std(gaps, ddof=1), abs=1e-12)


def test_wilcoxon_small_example():
    res = wilcoxon_signed_rank([1, 2, 3, 4, 5], [0] * 5)
    assert res.p_value == 0.0625 and res.method == "exact" and res.statistic == 0


def test_wilcoxon_degenerate():
    res = wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])
    assert res.degenerate and res.p_value is None and res.n_pairs == 0


@pytest.mark.parametrize("seed", range(60))
def test_wilcoxon_exact_matches_enumeration(seed):
    rnd = random.Random(seed)
    n = rnd.randint(1, 10)
    x = [rnd.choice([0, 1, 2, 3, 4.5]) for _ in range(n)]  # lots of ties and zeros
    y = [rnd.choice([0, 1, 2, 3]) for _ in range(n)]
    res = wilcoxon_signed_rank(x, y)
    expect = enumeration_p([a - b for a, b in zip(x, y)])
    if expect is None:
        assert res.degenerate
    else:
        assert res.p_value == pytest.approx(expect, abs=1e-12)


def test_wilcoxon_symmetric():
    rnd = random.Random(5)
    x = [rnd.gauss(0, 1) for _ in range(25)]
    y = [rnd.gauss(0.3, 1) for _ in range(25)]
    assert wilcoxon_signed_rank(x, y).p_value == wilcoxon_signed_rank(y, x).p_value
    assert wilcoxon_signed_rank(x[:12], y[:12]).p_value == wilcoxon_signed_rank(y[:12], x[:12]).p_value


def test_normal_approximation_close_to_exact():
    rnd = random.Random(9)
    for _ in range(20):
        x = [rnd.gauss(0, 1) for _ in range(20)]
        y = [rnd.gauss(0.2, 1) for _ in range(20)]
        exact = wilcoxon_signed_rank(x, y, method="exact").p_value
        approx = wilcoxon_signed_rank(x, y, method="approx").p_value
        assert abs(exact - approx) < 0.01


def test_agrees_with_scipy():
    stats = pytest.importorskip("scipy.stats")
    rnd = random.Random(3)
    for n in (6, 15, 20):
        x = [rnd.gauss(0, 1) for _ in range(n)]
        y = [rnd.gauss(0.5, 1) for _ in range(n)]
        ref = stats.wilcoxon(x, y, method="exact").pvalue
        assert wilcoxon_signed_rank(x, y).p_value == pytest.approx(ref, abs=1e-12)
    for n in (30, 45):
        x = [round(rnd.gauss(0, 1), 1) for _ in range(n)]  # rounding creates ties
        y = [round(rnd.gauss(0.3, 1), 1) for _ in range(n)]
        ref = stats.wilcoxon(x, y, zero_method="wilcox", correction=True, method="approx").pvalue
        assert wilcoxon_signed_rank(x, y).p_value == pytest.approx(ref, abs=1e-9)


def test_bad_inputs():
    with pytest.raises(InputError):
        wilcoxon_signed_rank([1.0], [1.0, 2.0])
    with pytest.raises(InputError):
        wilcoxon_signed_rank([], [])
    with pytest.raises(InputError):
        wilcoxon_signed_rank([1.0], [2.0], method="bootstrap")


def test_format_p():
    assert format_p(0.00001) == "<0.0001"
    assert format_p(0.0625) == "0.0625"
    assert format_p(None) == SKIP_MARKER


def _records():
    rnd = random.Random(0)
    out = []
    for n in (10, 15):
        for m in (1, 2):
            for i in range(8):
                base = rnd.uniform(20, 30)
                for strategy, d in (("zero_shot", base * 1.2), ("multi_agent_2", base * rnd.uniform(1.0, 1.1))):
                    if strategy == "zero_shot" and i == 0:
                        d = None
                    gap = None if d is None else (d - base) / base * 100
                    out.append(Rec(f"n{n}_{i}", d, n, strategy, gap, m))
    return out


def test_paired_table_shape():
    cells = paired_cells(_records(), "zero_shot", "multi_agent_2")
    assert [(c.problem_size, c.m, c.pairs) for c in cells] == [(10, 1, 7), (10, 2, 7), (15, 1, 7), (15, 2, 7)]
    text = paired_table_text(cells)
    header = text.splitlines()[0].split("  ")
    header = [h.strip() for h in header if h.strip()]
    assert header == ["problem size", "m=1 p-value", "m=1 number of pairs", "m=2 p-value", "m=2 number of pairs"]
    assert cells[0].test.p_value == pytest.approx(2 / 2 ** 7)


def test_report_files_and_determinism(tmp_path):
    recs = _records()
    tests = {"multi_agent_2_vs_zero_shot": paired_cells(recs, "zero_shot", "multi_agent_2")}
    a = emit_report(summarize_gaps(recs), tests, tmp_path / "a")
    b = emit_report(summarize_gaps(recs), tests, tmp_path / "b")
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes(), pa.name
    names = {p.name for p in a}
    assert {"gap_summary.csv", "gap_m1.png", "gap_m2.png", "gap_reduction.png", "summary.json"} <= names
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["zero_difference_method"] == "wilcox"


def test_empty_cell_marked_skipped():
    recs = [Rec(f"i{k}", None, strategy=s, gap=None) for k in range(3) for s in ("zero_shot", "multi_agent_2")]
    cells = paired_cells(recs, "zero_shot", "multi_agent_2")
    text = paired_table_text(cells)
    assert cells[0].pairs == 0 and SKIP_MARKER in text
