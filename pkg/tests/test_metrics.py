import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kfsel.data import QARecord
from kfsel.metrics import build_report, min_gap, random_recall, recall_at_n, temporal_spread
from kfsel.qtype import QuestionType


def test_recall():
    assert recall_at_n([1, 2, 3, 4], [3, 4, 5, 6]) == 0.5
    with pytest.raises(ValueError):
        recall_at_n([], [1])


def test_gap_and_spread():
    assert min_gap([0, 10, 21, 31]) == 10
    assert min_gap([5, 6, 7, 8]) == 1
    assert min_gap([7]) == 0
    assert temporal_spread([0, 31], 32) == pytest.approx(0.5)
    assert temporal_spread([4], 32) == 0.0


def test_random_recall_is_hypergeometric_mean():
    # exact expectation over all draws on a small case
    T, N, G = 8, 3, 2
    truth = set(range(G))
    draws = [set(c) for c in itertools.combinations(range(T), N)]
    exact = np.mean([len(d & truth) / G for d in draws])
    assert random_recall(T, N, G) == pytest.approx(exact)
    assert random_recall(32, 4, 4) == 0.125


def test_random_recall_monte_carlo():
    rng = np.random.default_rng(0)
    truth = {3, 9, 17, 30}
    draws = [len(set(rng.choice(32, 4, replace=False)) & truth) / 4 for _ in range(20000)]
    assert np.mean(draws) == pytest.approx(random_recall(32, 4, 4), abs=0.005)


def _row(v, q, idx, qtype):
    return {"video_id": v, "question_id": q, "indices": idx, "objective": 0.0, "lambda": 0.0, "qtype": qtype}


def test_report_breakdown():
    rows = [
        _row("v", "a", [0, 1, 2, 3], "descriptive"),
        _row("v", "b", [0, 10, 21, 31], "temporal"),
        _row("v", "c", [4, 5, 6, 7], "causal"),
    ]
    truth = {("v", "a"): {"indices": [0, 1, 8, 9]}, ("v", "b"): {"indices": [0, 10, 21, 31]}}
    diag = {("v", "a"): {"greedy_objective": 0.9, "exact_objective": 1.0}}
    rep = build_report(rows, truth, None, diag, T=32)
    assert rep["counts"] == {"selections": 3, "scored": 2, "truth": 2}
    per = rep["per_qtype"]
    assert per["descriptive"]["recall_at_n"] == 0.5
    assert per["temporal"]["mean_min_gap"] == 10
    assert per["causal"]["count"] == 0
    assert per["average"]["recall_at_n"] == pytest.approx(0.75)
    assert per["descriptive"]["objective_ratio_greedy"] == pytest.approx(0.9)
    assert per["temporal"]["objective_ratio_greedy"] is None
    assert list(rep) == ["counts", "overall", "per_qtype"]


def test_report_prefers_qa_types():
    rows = [_row("v", "a", [0, 1], "descriptive")]
    qa = [QARecord("v", "a", "q", "", None, QuestionType.CAUSAL)]
    rep = build_report(rows, {("v", "a"): {"indices": [0, 1]}}, qa, T=8)
    assert rep["per_qtype"]["causal"]["count"] == 1


@given(st.sets(st.integers(0, 63), min_size=2, max_size=10))
def test_min_gap_property(I):
    idx = sorted(I)
    assert min_gap(I) == min(b - a for a, b in zip(idx, idx[1:]))
    assert 0 <= temporal_spread(I, 64) <= 0.5 + 1e-12
    assert math.isfinite(temporal_spread(I, 64))
