"""q estimation, threshold schedule, and edge classification."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochmatch.decomposition import (
    CRUCIAL,
    IGNORED,
    NONCRUCIAL,
    classify,
    estimate_q,
    threshold_schedule,
)
from stochmatch.errors import ParameterOverflowError
from stochmatch.graph import StochasticGraph
from stochmatch.oracle import exact_crucial_split, exact_stats

from helpers import clique_graph, path2, small_corpus


def test_estimate_single_edge():
    g = StochasticGraph(2, [(0, 1, 0.7)])
    est = estimate_q(g, samples=10_000, seed=0)
    tol = 3 * math.sqrt(0.7 * 0.3 / 10_000)
    assert abs(est.q_hat[0] - 0.7) <= tol


def test_estimate_deterministic_graph():
    g = clique_graph(4, 1.0)
    est = estimate_q(g, samples=500, seed=1)
    assert set(np.unique(est.q_hat)) <= {0.0, 1.0}
    assert est.opt_hat == 2.0
    assert est.se_opt == 0.0


def test_estimate_path2_vs_oracle():
    g = path2()
    stats = exact_stats(g)
    est = estimate_q(g, samples=100_000, seed=7)
    for e in range(g.m):
        tol = 3 * math.sqrt(stats.q[e] * (1 - stats.q[e]) / est.samples)
        assert abs(est.q_hat[e] - stats.q[e]) <= tol


def test_sum_q_hat_equals_opt_hat_exactly():
    for g in small_corpus(count=5, seed=21):
        est = estimate_q(g, samples=4000, seed=3)
        assert int(est.counts.sum()) == est.sum_mu


def test_estimate_reproducible():
    g = path2()
    a = estimate_q(g, samples=5000, seed=11)
    b = estimate_q(g, samples=5000, seed=11)
    assert np.array_equal(a.counts, b.counts)


def test_schedule_explicit_levels_example():
    # All edges share q = 0.5; bucket (0.01, 0.3] is empty so j = 2.
    q = [0.5, 0.5, 0.5]
    res = threshold_schedule(q, opt=1.5, epsilon=0.2, levels=[0.6, 0.3, 0.01])
    assert res.j == 2
    assert res.tau_plus == 0.3
    assert res.tau_minus == 0.01
    cls = classify(StochasticGraph(4, [(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5)]), q,
                   res.tau_minus, res.tau_plus, 0.2)
    assert all(lab == CRUCIAL for lab in cls.labels)


def test_schedule_first_bucket_light():
    # Huge epsilon: even the first bucket qualifies.
    q = [0.05, 0.04]
    res = threshold_schedule(q, opt=0.09, epsilon=0.999, levels=[0.5, 0.2, 0.1])
    assert res.j == 1
    assert res.tau_plus == 0.5


def test_schedule_path2_worked_example():
    g = path2()
    stats = exact_stats(g)
    res = threshold_schedule(stats.q, stats.opt, epsilon=0.1,
                             levels=[0.6, 0.3, 0.1, 0.01])
    assert res.j == 3
    assert res.tau_plus == pytest.approx(0.1)
    assert res.tau_minus == pytest.approx(0.01)
    # Ignored mass is bounded by the chosen bucket's mass.
    ignored = stats.q[(stats.q > res.tau_minus) & (stats.q < res.tau_plus)].sum()
    assert ignored <= 0.1 * stats.opt + 1e-12


def test_schedule_termination_bound_on_corpus():
    for g in small_corpus(count=15, seed=31):
        stats = exact_stats(g)
        for eps in (0.15, 0.3, 0.5):
            res = threshold_schedule(stats.q, stats.opt, epsilon=eps)
            assert res.j <= math.ceil(1 / eps) + 1
            # Coverage: crucial + noncrucial mass >= (1 - eps) opt.
            covered = stats.q[(stats.q >= res.tau_plus) | (stats.q <= res.tau_minus)].sum()
            assert covered >= (1 - eps) * stats.opt - 1e-9


def test_schedule_paper_shape_underflow_guard():
    q = [0.3, 0.2]
    with pytest.raises(ParameterOverflowError, match="underflow"):
        threshold_schedule(q, opt=0.5, epsilon=0.1, p_min=0.5, f_shape="paper")


def test_schedule_rejects_bad_inputs():
    with pytest.raises(ValueError):
        threshold_schedule([0.5], opt=0.5, epsilon=1.5)
    with pytest.raises(ValueError):
        threshold_schedule([0.5], opt=0.5, epsilon=0.3, levels=[0.5])
    with pytest.raises(ValueError):
        threshold_schedule([0.5], opt=0.5, epsilon=0.3, levels=[0.2, 0.4])


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=1, max_size=40),
    st.floats(min_value=0.05, max_value=0.95),
)
def test_schedule_bound_property(qs, eps):
    opt = sum(qs)
    res = threshold_schedule(qs, opt, epsilon=eps)
    assert res.j <= math.ceil(1 / eps) + 1
    assert 0 < res.tau_minus < res.tau_plus


def test_classify_empty_crucial():
    g = path2()
    cls = classify(g, [0.01, 0.02], tau_minus=0.1, tau_plus=0.5, epsilon=0.3)
    assert cls.delta_C == 0
    assert np.all(cls.c_v == 0)
    assert cls.crucial_edges == ()


def test_classify_star_degree_bound():
    k = 4
    g = StochasticGraph(k + 1, [(0, i, 1.0) for i in range(1, k + 1)])
    stats = exact_stats(g)
    # Exactly one incident edge is ever matched, the canonical one.
    cls = classify(g, stats.q, tau_minus=0.001, tau_plus=0.5, epsilon=0.3)
    assert cls.delta_C <= 1 / 0.5


def test_classify_matches_oracle_split():
    g = path2()
    stats = exact_stats(g)
    cls = classify(g, stats.q, tau_minus=0.3, tau_plus=0.4, epsilon=0.3)
    split = exact_crucial_split(stats, 0.3, 0.4)
    assert cls.crucial_edges == split.crucial
    assert cls.noncrucial_edges == split.noncrucial
    assert np.allclose(cls.c_v, split.c_v)
    assert np.allclose(cls.n_v, split.n_v)


def test_classify_tie_conventions():
    g = path2()
    cls = classify(g, [0.4, 0.3], tau_minus=0.3, tau_plus=0.4, epsilon=0.3)
    # Closed conventions: q == tau_plus is crucial, q == tau_minus non-crucial.
    assert cls.labels == (CRUCIAL, NONCRUCIAL)


def test_classify_delta_c_times_tau_plus_below_one_with_exact_q():
    for g in small_corpus(count=10, seed=41):
        stats = exact_stats(g)
        res = threshold_schedule(stats.q, stats.opt, epsilon=0.3)
        cls = classify(g, stats.q, res.tau_minus, res.tau_plus, 0.3)
        if cls.delta_C:
            assert cls.delta_C * res.tau_plus <= 1.0 + 1e-9


def test_distances_and_lambda():
    g = StochasticGraph(6, [(0, 1, 0.9), (1, 2, 0.9), (2, 3, 0.9), (4, 5, 0.9)])
    cls = classify(g, [0.9, 0.9, 0.9, 0.9], tau_minus=0.05, tau_plus=0.5, epsilon=0.3)
    assert cls.d_C(0, 3) == 3
    assert cls.d_C(0, 4) == math.inf
    assert cls.lam == pytest.approx(2 * math.log2(cls.delta_C + 2))


def test_paper_lambda_guard():
    g = path2()
    with pytest.raises(ParameterOverflowError):
        classify(g, [0.5, 0.5], 0.1, 0.4, epsilon=0.1, lambda_mode="paper")
