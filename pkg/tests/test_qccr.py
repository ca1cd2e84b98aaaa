import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from kfsel import qccr
from kfsel.core import top_n
from kfsel.errors import ConfigError, SolverError
from kfsel.qtype import QuestionType

K1 = qccr.CoverageKernel(1.0)


def naive_coverage(I, T, tau):
    return sum(max(math.exp(-((t - i) ** 2) / (2 * tau**2)) for i in I) for t in range(T)) / T


def test_coverage_hand_values():
    # a single frame at the end of four: (1 + e^-1/2 + e^-2 + e^-9/2) / 4
    want = (1 + math.exp(-0.5) + math.exp(-2) + math.exp(-4.5)) / 4
    assert qccr.coverage([0], 4, K1) == pytest.approx(want, abs=1e-12)
    assert qccr.coverage([0], 4, K1) == pytest.approx(0.438244, abs=1e-6)
    assert qccr.coverage([0, 3], 4, K1) == pytest.approx((2 + 2 * math.exp(-0.5)) / 4, abs=1e-12)


def test_objective_hand_value():
    s = [1.0, 0.0, 0.0, 2.0]
    assert qccr.objective(s, [0, 3], 1.0, K1) == pytest.approx(3.8033, abs=1e-4)
    assert qccr.objective(s, [0, 3], 0.0, K1) == 3.0
    assert qccr.objective(np.zeros(4), [0, 3], 2.0, K1) == pytest.approx(2 * qccr.coverage([0, 3], 4, K1))


def test_coverage_all_frames_is_one():
    assert qccr.coverage(range(9), 9, qccr.CoverageKernel(0.5)) == pytest.approx(1.0)


@pytest.mark.parametrize("I", [[], [0, 0], [-1], [4]])
def test_coverage_rejects_bad_sets(I):
    with pytest.raises(ValueError):
        qccr.coverage(I, 4, K1)


def test_kernel_validation_and_default():
    assert qccr.CoverageKernel.default(32).tau == 4.0
    with pytest.raises(ValueError):
        qccr.CoverageKernel(0.0)


def test_brute_small_exhaustive():
    rng = np.random.default_rng(8)
    s = rng.uniform(size=8)
    k = qccr.CoverageKernel(2.0)
    vals = {c: qccr.objective(s, c, 0.5, k) for c in itertools.combinations(range(8), 2)}
    best = max(vals.values())
    want = min(c for c, v in vals.items() if v >= best - 1e-9)
    assert qccr.select_brute(s, 2, 0.5, k).indices == want
    assert len(vals) == 28


def test_brute_refuses_huge():
    with pytest.raises(SolverError):
        qccr.select_brute(np.zeros(200), 8, 1.0, K1)


def test_uniform_scores_large_lambda_spreads():
    k = qccr.CoverageKernel(4.0)
    sel = qccr.select_dp(np.ones(32), 4, 100.0, k)
    assert sel.indices == (3, 10, 18, 27)
    # local search from the greedy answer finds nothing better
    best = qccr.coverage(sel.indices, 32, k)
    for pos in range(4):
        for j in range(32):
            trial = set(sel.indices) - {sel.indices[pos]} | {j}
            if len(trial) == 4:
                assert qccr.coverage(trial, 32, k) <= best + 1e-12
    # and on a short video it agrees with exhaustive coverage maximization
    small = qccr.CoverageKernel(1.5)
    covs = {c: qccr.coverage(c, 10, small) for c in itertools.combinations(range(10), 3)}
    top = max(covs.values())
    assert qccr.select_dp(np.ones(10), 3, 100.0, small).indices == min(c for c, v in covs.items() if v >= top - 1e-9)


def test_lazy_and_plain_greedy_agree():
    rng = np.random.default_rng(11)
    for _ in range(500):
        T = int(rng.integers(2, 30))
        N = int(rng.integers(1, min(6, T) + 1))
        s = rng.uniform(size=T)
        lam = float(rng.choice([0.0, 0.5, 2.0, 10.0]))
        k = qccr.CoverageKernel(float(rng.uniform(0.5, 5)))
        assert qccr.select_greedy(s, N, lam, k).indices == qccr.select_greedy(s, N, lam, k, lazy=False).indices


def test_submodularity_of_coverage():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        T = int(rng.integers(3, 25))
        k = qccr.CoverageKernel(float(rng.uniform(0.5, 6)))
        J = set(rng.choice(T, size=int(rng.integers(1, T)), replace=False).tolist())
        I = {i for i in J if rng.uniform() < 0.5} or {min(J)}
        rest = [j for j in range(T) if j not in J]
        if not rest:
            continue
        j = int(rng.choice(rest))
        gain_I = qccr.coverage(I | {j}, T, k) - qccr.coverage(I, T, k)
        gain_J = qccr.coverage(J | {j}, T, k) - qccr.coverage(J, T, k)
        assert gain_I >= gain_J - 1e-12


def test_shift_invariance_of_argmax():
    rng = np.random.default_rng(13)
    k = qccr.CoverageKernel(2.0)
    for _ in range(200):
        T = int(rng.integers(3, 12))
        N = int(rng.integers(1, min(4, T) + 1))
        s = rng.integers(0, 8, size=T) / 8.0
        c = float(rng.choice([-3.0, 0.5, 4.0]))
        for solver in (qccr.select_dp, qccr.select_brute):
            assert solver(s, N, 0.7, k).indices == solver(s + c, N, 0.7, k).indices


def test_ties_break_lexicographically():
    s = np.zeros(6)
    assert qccr.select_dp(s, 2, 0.0, K1).indices == (0, 1)
    # mirror-symmetric optima: the lexicographically smaller one wins
    sym = qccr.select_brute(np.ones(7), 2, 1.0, K1).indices
    assert qccr.select_dp(np.ones(7), 2, 1.0, K1).indices == sym
    assert qccr.select_greedy(np.ones(5), 1, 1.0, K1).indices == (2,)


def test_select_dispatch():
    s = [0.0, 1.0, 0.5]
    assert qccr.select(s, 1, 0.0, K1, "greedy").indices == (1,)
    with pytest.raises(ConfigError):
        qccr.select(s, 1, 0.0, K1, "anneal")


@pytest.mark.parametrize("bad", [[np.nan, 1.0], [[1.0, 2.0]]])
def test_scores_validation(bad):
    with pytest.raises(ValueError):
        qccr.select_dp(bad, 1, 0.0, K1)


def test_lambda_table():
    table = qccr.LambdaTable()
    assert qccr.lambda_for("temporal", table) == 0.8
    assert qccr.lambda_for(QuestionType.CAUSAL, table) == 0.5
    assert qccr.lambda_for("descriptive", {"descriptive": 0.0}) == 0.0
    with pytest.raises(ConfigError):
        qccr.lambda_for("causal", {"descriptive": 0.0})
    with pytest.raises(ValueError):
        qccr.lambda_for("counterfactual", table)
    with pytest.raises(ConfigError):
        qccr.LambdaTable.from_mapping({"descriptive": 1, "temporal": 1})
    with pytest.raises(ConfigError):
        qccr.LambdaTable.from_mapping({"descriptive": 1, "temporal": 1, "causal": 1, "counting": 1})
    with pytest.raises(ConfigError):
        qccr.LambdaTable(descriptive=-1.0)
    assert qccr.LambdaTable().scaled(2).temporal == 1.6
    assert qccr.LambdaTable.from_mapping(table.to_dict()) == table


def test_zero_lambda_entry_is_top_n():
    table = qccr.LambdaTable(descriptive=0.0)
    s = np.random.default_rng(1).uniform(size=32)
    lam = qccr.lambda_for("descriptive", table)
    assert qccr.select_dp(s, 4, lam, qccr.CoverageKernel(4.0)).indices == top_n(s, 4).indices


@settings(max_examples=150, deadline=None)
@given(
    hnp.arrays(np.float64, st.integers(2, 10), elements=st.floats(-2, 2)),
    st.integers(1, 4),
    st.sampled_from([0.0, 0.1, 1.0, 3.0, 20.0]),
    st.sampled_from([0.5, 1.0, 2.5]),
)
def test_dp_equals_brute_property(s, N, lam, tau):
    N = min(N, len(s))
    k = qccr.CoverageKernel(tau)
    dp, brute = qccr.select_dp(s, N, lam, k), qccr.select_brute(s, N, lam, k)
    assert dp.indices == brute.indices
    assert dp.objective_value == pytest.approx(brute.objective_value, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 15), st.data())
def test_coverage_matches_naive(T, data):
    I = data.draw(st.sets(st.integers(0, T - 1), min_size=1))
    tau = data.draw(st.floats(0.2, 8.0))
    assert qccr.coverage(I, T, qccr.CoverageKernel(tau)) == pytest.approx(naive_coverage(I, T, tau), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(np.float64, st.integers(2, 24), elements=st.floats(0, 1)), st.data())
def test_greedy_monotone_coverage_property(s, data):
    N = data.draw(st.integers(1, len(s)))
    sel = qccr.select_greedy(s, N, 1.0, qccr.CoverageKernel(2.0))
    assert len(sel.indices) == N
    assert sel.objective_value == pytest.approx(qccr.objective(s, sel.indices, 1.0, qccr.CoverageKernel(2.0)))
