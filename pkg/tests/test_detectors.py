import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cisprt.detectors import (CENSORED, CisprtState, cisprt_step, run_cisprt, run_isolated,
                              run_sprt, simulate, statistic_paths)
from cisprt.graph import Graph
from cisprt.model import GaussianShiftModel, Hypothesis, ObservationStream, substream
from cisprt.thresholds import ErrorSpec, ThresholdSet, cisprt_thresholds, wald_thresholds
from cisprt.weights import WeightMatrix, averaging_matrix, optimal_constant_weight

from conftest import random_connected

H1, H0 = Hypothesis.H1, Hypothesis.H0


def matrix_power_oracle(w, eta):
    """S(t) = sum_j W^{t+1-j} eta(j), by explicit powers."""
    t = len(eta)
    return sum(np.linalg.matrix_power(w, t + 1 - j) @ eta[j - 1] for j in range(1, t + 1))


def test_step_single_agent_is_running_sum():
    st_ = CisprtState.initial(1)
    eta = [0.3, -1.2, 2.0]
    for x in eta:
        st_ = cisprt_step(st_, WeightMatrix(np.ones((1, 1)), 0.0), [x])
    assert st_.s[0] == pytest.approx(sum(eta)) and st_.t == 3
    assert st_.p[0] == pytest.approx(sum(eta) / 3)


def test_step_dimension_mismatch():
    with pytest.raises(ValueError):
        cisprt_step(CisprtState.initial(3), WeightMatrix(averaging_matrix(3), 0.0), [1.0, 2.0])


def test_step_two_steps_against_oracle():
    g = Graph.path(4)
    wm = optimal_constant_weight(g)
    eta = np.random.default_rng(0).normal(size=(2, 4))
    st_ = CisprtState.initial(4)
    for e in eta:
        st_ = cisprt_step(st_, wm, e)
    np.testing.assert_allclose(st_.s, matrix_power_oracle(wm.w, eta), atol=1e-12)


def test_step_freezes_stopped_agents_but_keeps_mixing():
    wm = optimal_constant_weight(Graph.path(3))
    th = ThresholdSet(1.0, -1.0)
    # W rows for the path with delta 1/2: S(1) = (5, 5, 0)
    st_ = cisprt_step(CisprtState.initial(3), wm, [10.0, 0.0, 0.0], th)
    np.testing.assert_allclose(st_.s, [5, 5, 0])
    assert st_.stopped.tolist() == [True, True, False]
    before = st_.s.copy()
    st2 = cisprt_step(st_, wm, [-50.0, -50.0, -50.0], th)
    assert st2.stop_time.tolist() == [1, 1, 2]
    assert st2.decision.tolist() == [H1, H1, H0]
    assert not np.allclose(st2.s, before)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 12), t=st.integers(1, 50))
def test_recursion_matches_matrix_powers(seed, n, t):
    rng = np.random.default_rng(seed)
    wm = optimal_constant_weight(random_connected(n, 0.4, rng))
    model = GaussianShiftModel(1.0, 1.0, n)
    paths = statistic_paths(model, wm, H1, [seed], [t])
    eta = ObservationStream(model, H1, seed).take_llr(t)
    assert np.max(np.abs(paths[0, 0] - matrix_power_oracle(wm.w, eta))) < 1e-10


def test_averaging_matrix_reproduces_centralized_path():
    n = 6
    model = GaussianShiftModel(0.3, 1.0, n)
    th = ThresholdSet(np.inf, -np.inf)
    seeds = [substream(1, i) for i in range(5)]
    d = simulate(model, H1, seeds, th, 40, mixing=averaging_matrix(n), record=True)
    c = simulate(model, H1, seeds, th, 40, centralized=True, record=True)
    for i in range(n):
        np.testing.assert_allclose(d.trajectory[:, :, i], c.trajectory[:, :, 0], atol=1e-12)


def test_single_agent_cisprt_equals_sprt():
    model = GaussianShiftModel(0.5, 1.0, 1)
    th = wald_thresholds(ErrorSpec.symmetric(1e-3))
    w = WeightMatrix(np.ones((1, 1)), 0.0)
    for i in range(200):
        sd = substream(3, i)
        a = run_cisprt(model, w, th, H1, sd, 1000)
        b = run_sprt(model, th, H1, sd, 1000)
        c = run_isolated(model, H1, ErrorSpec.symmetric(1e-3), sd, 1000)
        assert a.stop_times[0] == b.stop_times[0] == c.stop_times[0]
        assert a.decisions[0] == b.decisions[0] == c.decisions[0]


def test_infinite_thresholds_censor_everything():
    model = GaussianShiftModel(1.0, 1.0, 4)
    out = run_cisprt(model, optimal_constant_weight(Graph.path(4)), ThresholdSet(np.inf, -np.inf), H1, 0, 25)
    assert out.censored.all() and np.all(out.decisions == CENSORED)


def test_zero_width_corridor_stops_at_one():
    model = GaussianShiftModel(1.0, 1.0, 5)
    wm = optimal_constant_weight(Graph.path(5))
    for i in range(20):
        out = run_cisprt(model, wm, ThresholdSet(0.0, 0.0), H1, i, 10)
        assert np.all(out.stop_times == 1)


def test_bad_arguments():
    model = GaussianShiftModel(1.0, 1.0, 1)
    with pytest.raises(ValueError):
        run_sprt(model, ThresholdSet(1.0, -1.0), H1, 0, 0)


def test_batching_does_not_change_trials():
    model = GaussianShiftModel(0.4, 1.0, 7)
    wm = optimal_constant_weight(Graph.path(7))
    th = cisprt_thresholds(ErrorSpec.symmetric(1e-3), model, wm.r)
    seeds = [substream(5, i) for i in range(30)]
    batch = simulate(model, H1, seeds, th, 500, mixing=wm.w)
    for i in (0, 13, 29):
        one = run_cisprt(model, wm, th, H1, seeds[i], 500)
        assert np.array_equal(one.stop_times, batch.stop_times[i])
        assert np.array_equal(one.decisions, batch.decisions[i])


def test_strong_signal_stops_at_one():
    # per-agent LLR ~ N(2*mu^2, 4*mu^2) with mu = 5 -> S_c(1) ~ N(50, 100/N) far above 1
    model = GaussianShiftModel(5.0, 1.0, 4)
    th = ThresholdSet(1.0, -1.0)
    out = simulate(model, H1, [substream(0, i) for i in range(2000)], th, 10, centralized=True)
    assert np.mean(out.stop_times[:, 0] == 1) > 0.99


def test_hypothesis_mirror():
    model = GaussianShiftModel(0.3, 1.0, 3)
    th = wald_thresholds(ErrorSpec.symmetric(0.05), 3)
    seeds = [substream(8, i) for i in range(2000)]
    a = simulate(model, H1, seeds, th, 2000, centralized=True)
    b = simulate(model, H0, seeds, th, 2000, centralized=True)
    # same noise, mirrored mean: paths are not exact mirrors, but decision laws are
    pa, pb = np.mean(a.decisions == 1), np.mean(b.decisions == 0)
    assert abs(pa - pb) < 4 * np.sqrt(pa * (1 - pa) / 2000 * 2) + 1e-3
    assert abs(a.stop_times.mean() - b.stop_times.mean()) < 4 * a.stop_times.std() / np.sqrt(1000)


def test_wald_false_alarm():
    n = 4
    model = GaussianShiftModel(0.5, 1.0, n)
    th = wald_thresholds(ErrorSpec.symmetric(0.01), n)
    out = simulate(model, H0, [substream(9, i) for i in range(10_000)], th, 10_000, centralized=True)
    assert not out.censored.any()
    assert np.mean(out.decisions == 1) <= 0.01


def test_isolated_agents_independent():
    model = GaussianShiftModel(0.3, 1.0, 5)
    th = wald_thresholds(ErrorSpec.symmetric(1e-3))
    out = simulate(model, H1, [substream(4, i) for i in range(5000)], th, 10_000)
    c = np.corrcoef(out.stop_times.T.astype(float))
    assert np.max(np.abs(c[~np.eye(5, dtype=bool)])) < 0.05


def exact_variance(w, t, m):
    w2 = w @ w
    acc, p = np.zeros_like(w), np.eye(len(w))
    for _ in range(t):
        p = p @ w2
        acc += p
    return 2 * m * np.diag(acc)


def test_exact_variance_oracle_below_bound(rgg30):
    from cisprt.analysis import variance_bound
    g, wm = rgg30
    for m in (0.5, 2.0):
        model = GaussianShiftModel.from_kl(m, n_agents=30)
        for t in (1, 2, 5, 20, 50, 200):
            v = exact_variance(wm.w, t, m)
            assert np.all(v <= variance_bound(model, wm.r, t) + 1e-12)


def test_statistic_moments_small():
    g = Graph.path(5)
    wm = optimal_constant_weight(g)
    model = GaussianShiftModel(1.0, 1.0, 5)
    n = 4000
    times = [1, 5, 20]
    paths = statistic_paths(model, wm, H1, [substream(6, i) for i in range(n)], times)
    for k, t in enumerate(times):
        var = exact_variance(wm.w, t, model.m)
        mean = paths[:, k].mean(axis=0)
        assert np.all(np.abs(mean - model.m * t) < 4 * np.sqrt(var / n))
        ev = paths[:, k].var(axis=0, ddof=1)
        assert np.all(np.abs(ev - var) < 4 * var * np.sqrt(2 / (n - 1)))


def test_decision_consensus(rgg30):
    g, wm = rgg30
    model = GaussianShiftModel(1.0, 1.0, 30)
    eps = 1e-2
    th = cisprt_thresholds(ErrorSpec.symmetric(eps), model, wm.r)
    out = simulate(model, H1, [substream(12, i) for i in range(2000)], th, 10_000, mixing=wm.w)
    disagree = np.mean(out.decisions.min(axis=1) != out.decisions.max(axis=1))
    assert disagree <= 30 * eps
