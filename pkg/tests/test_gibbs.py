import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbs_forecast.gibbs import (
    DiscreteModel, GaussianProposal, log_partition, partition_from_risks, prior_risks,
    sample_gibbs, sample_gibbs_many, soft_min, soft_min_curve, soft_min_from_risks,
)
from gibbs_forecast.predictors import ModelSpec, constraint_value, in_constraint_set
from gibbs_forecast.series_gen import InnovationSpec, ProcessSpec, TimeSeries, simulate

from gibbs_doubles import UNIT_SERIES, double_with_risks

LIN1 = ModelSpec("linear", 1, 1, 1.0, 1.0)


@pytest.fixture(scope="module")
def ar_series():
    return simulate(ProcessSpec.ar((0.5,), InnovationSpec.gaussian(0.5)), 200, seed=3)


def exact_weights(risks, lam):
    w = np.exp(-lam * (np.asarray(risks) - min(risks)))
    return w / w.sum()


def test_double_has_prescribed_risks():
    model = double_with_risks([0.0, 0.25, 0.75])
    np.testing.assert_array_equal(prior_risks(model, UNIT_SERIES), [0.0, 0.25, 0.75])


def test_log_partition_small_lambda(ar_series):
    est = log_partition(LIN1, ar_series, 1e-8, mc_samples=2000, seed=0)
    assert abs(est.log_z) <= 1e-6


def test_log_partition_constant_risk():
    model = DiscreteModel(ModelSpec("linear", 2), np.zeros((1, 3)))
    series = TimeSeries(np.full(12, 3.0))
    for lam in (0.5, 7.0, 300.0):
        est = log_partition(model, series, lam)
        assert est.log_z == -lam * 3.0
        assert soft_min(model, series, lam) == 3.0


def test_log_partition_two_point_exact():
    model = double_with_risks([0.25, 0.75])
    est = log_partition(model, UNIT_SERIES, 2.0)
    assert est.exact and est.se_log == 0.0
    assert est.log_z == pytest.approx(math.log(0.5 * (math.exp(-0.5) + math.exp(-1.5))),
                                      abs=1e-15)
    model = double_with_risks([0.2, 0.8])
    est = log_partition(model, UNIT_SERIES, 2.0)
    assert est.log_z == pytest.approx(math.log(0.5 * (math.exp(-0.4) + math.exp(-1.6))),
                                      abs=1e-14)


def test_log_partition_large_lambda_no_overflow(ar_series):
    est = log_partition(LIN1, ar_series, 1e6, mc_samples=500, seed=0)
    assert math.isfinite(est.log_z) and math.isfinite(est.se_log)
    assert est.log_z <= -1e6 * est.r_min + 1e-9


def test_soft_min_limits_against_direct_mean_and_min(ar_series):
    risks = prior_risks(LIN1, ar_series, 4000, seed=9)
    small = soft_min(LIN1, ar_series, 1e-6, 4000, seed=9)
    large = soft_min(LIN1, ar_series, 1e7, 4000, seed=9)
    assert small == pytest.approx(risks.mean(), rel=1e-5)
    assert large == pytest.approx(risks.min(), rel=1e-5)


def test_se_log_matches_delta_method():
    risks = np.array([0.1, 0.4, 0.2, 0.9, 0.3])
    est = partition_from_risks(risks, 3.0)
    w = np.exp(-3.0 * risks)
    assert est.se_log == pytest.approx(np.std(w, ddof=1) / (math.sqrt(5) * w.mean()),
                                       rel=1e-12)


risk_arrays = st.lists(st.floats(0, 50, allow_nan=False), min_size=2, max_size=200)


@given(risks=risk_arrays, lam=st.floats(1e-6, 1e5))
@settings(max_examples=200, deadline=None)
def test_soft_min_bracket(risks, lam):
    r = np.array(risks)
    est = partition_from_risks(r, lam)
    assert est.r_min == r.min()
    assert est.r_mean == pytest.approx(r.mean(), rel=1e-12, abs=1e-300)
    assert est.r_min <= est.soft_min <= est.r_mean


@given(risks=risk_arrays, lams=st.lists(st.floats(1e-6, 1e5), min_size=2, max_size=8))
@settings(max_examples=200, deadline=None)
def test_soft_min_monotone_in_lambda(risks, lams):
    r = np.array(risks)
    lams = sorted(lams)
    pointwise = [soft_min_from_risks(r, lam) for lam in lams]
    # pointwise evaluation is monotone up to rounding
    assert all(a >= b - 4 * np.spacing(b) for a, b in zip(pointwise, pointwise[1:]))
    curve = soft_min_curve(r, lams)
    assert all(a >= b for a, b in zip(curve, curve[1:]))
    np.testing.assert_allclose(curve, pointwise, rtol=1e-14, atol=0)


def test_soft_min_curve_keeps_input_order():
    r = np.array([0.1, 0.5, 0.9])
    lams = [8.0, 1.0, 4.0]
    curve = soft_min_curve(r, lams)
    assert curve[1] >= curve[2] >= curve[0]


def test_partition_is_deterministic(ar_series):
    a = log_partition(LIN1, ar_series, 10.0, 1000, seed=4)
    b = log_partition(LIN1, ar_series, 10.0, 1000, seed=4)
    assert a == b
    assert log_partition(LIN1, ar_series, 10.0, 1000, seed=5) != a


def test_lambda_zero_draws_follow_the_prior(ar_series):
    draws = sample_gibbs_many(LIN1, ar_series, 0.0, 20_000, seed=1)
    coords = np.array([d.theta.coords for d in draws])
    assert all(d.proposal_count == 1 for d in draws)
    sd = coords.std(axis=0)
    assert np.all(np.abs(coords.mean(axis=0)) <= 4 * sd / math.sqrt(len(coords)))
    frac = np.mean(np.abs(coords).sum(axis=1) <= 0.5)
    assert abs(frac - 0.25) <= 4 * math.sqrt(0.25 * 0.75 / len(coords))


def test_lambda_zero_returns_first_proposal(ar_series):
    d = sample_gibbs(LIN1, ar_series, 0.0, seed=2)
    assert d.proposal_count == 1 and d.accept_count == 1


N = 100_000


def test_two_point_acceptance_ratio():
    delta, lam = 0.5, 2.0
    model = double_with_risks([0.0, delta])
    draws = sample_gibbs_many(model, UNIT_SERIES, lam, N, seed=5)
    hits = np.array([d.risk == delta for d in draws])
    p1 = math.exp(-lam * delta) / (1 + math.exp(-lam * delta))
    assert abs(hits.mean() - p1) <= 3 * math.sqrt(p1 * (1 - p1) / N)
    ratio = hits.sum() / (N - hits.sum())
    assert ratio == pytest.approx(math.exp(-lam * delta), rel=0.03)


@pytest.mark.parametrize("lam", [0.0, 1.0, 10.0])
def test_finite_support_frequencies(lam):
    risks = [0.0, 0.125, 0.25, 0.5, 0.75]
    model = double_with_risks(risks)
    draws = sample_gibbs_many(model, UNIT_SERIES, lam, N, seed=6)
    counts = np.array([sum(1 for d in draws if d.risk == r) for r in risks])
    assert counts.sum() == N
    p = exact_weights(risks, lam)
    assert np.all(np.abs(counts / N - p) <= 4 * np.sqrt(p * (1 - p) / N))


def test_high_temperature_draw_lands_in_low_risk_tail(ar_series):
    model = ModelSpec("linear", 1, 1, 1.0, 1.0)
    prior = prior_risks(model, ar_series, 10_000, seed=8)
    q05 = np.quantile(prior, 0.05)
    for seed in range(5):
        d = sample_gibbs(model, ar_series, 1e3, seed=seed)
        assert d.risk <= q05


def test_gibbs_mean_risk_matches_importance_weights(ar_series):
    lam = 20.0
    model = ModelSpec("linear", 1, 1, 1.0, 1.0)
    prior = prior_risks(model, ar_series, 200_000, seed=10)
    w = np.exp(-lam * (prior - prior.min()))
    target = float(np.sum(w * prior) / np.sum(w))
    draws = sample_gibbs_many(model, ar_series, lam, 4000, seed=11)
    r = np.array([d.risk for d in draws])
    assert abs(r.mean() - target) <= 4 * r.std() / math.sqrt(len(r))


def test_draws_inside_constraint_set_and_deterministic(ar_series):
    model = ModelSpec("neural", 2, 2, 2.0, 1.0)
    a = sample_gibbs(model, ar_series, 50.0, seed=3, max_proposals=5000)
    b = sample_gibbs(model, ar_series, 50.0, seed=3, max_proposals=5000)
    assert in_constraint_set(model, a.theta.coords)
    assert a.theta.coords.tobytes() == b.theta.coords.tobytes()
    assert a.risk == b.risk and a.proposal_count == b.proposal_count


def test_budget_exhaustion_returns_best_proposal(ar_series):
    d = sample_gibbs(LIN1, ar_series, 1e4, seed=0, max_proposals=1, pilot_size=1)
    assert d.exhausted and d.accept_count == 0 and d.proposal_count == 1
    assert d.diagnostics()["exhausted"] is True


def test_pilot_larger_than_budget_is_a_config_error(ar_series):
    with pytest.raises(ValueError, match="pilot"):
        sample_gibbs(LIN1, ar_series, 1.0, seed=0, max_proposals=10, pilot_size=20)
    with pytest.raises(ValueError):
        sample_gibbs(LIN1, ar_series, -1.0, seed=0)


@pytest.mark.parametrize("center", [(0.0, 0.0), (0.3, -0.2)])
def test_gaussian_proposal_targets_the_prior_at_lambda_zero(ar_series, center):
    prop = GaussianProposal(center, 0.6)
    draws = sample_gibbs_many(LIN1, ar_series, 0.0, 20_000, seed=12, proposal=prop)
    coords = np.array([d.theta.coords for d in draws])
    n = len(coords)
    sd = coords.std(axis=0)
    assert np.all(np.abs(coords.mean(axis=0)) <= 4 * sd / math.sqrt(n))
    frac = np.mean(constraint_value(LIN1, coords) <= 0.5)
    assert abs(frac - 0.25) <= 4 * math.sqrt(0.25 * 0.75 / n)


def test_gaussian_proposal_agrees_with_prior_proposal(ar_series):
    lam = 20.0
    prop = GaussianProposal((0.0, 0.1), 0.8)
    a = np.array([d.risk for d in sample_gibbs_many(LIN1, ar_series, lam, 4000, seed=13)])
    b = np.array([d.risk for d in sample_gibbs_many(LIN1, ar_series, lam, 4000, seed=14,
                                                    proposal=prop)])
    se = math.hypot(a.std() / math.sqrt(len(a)), b.std() / math.sqrt(len(b)))
    assert abs(a.mean() - b.mean()) <= 4 * se


def test_gaussian_proposal_validation(ar_series):
    with pytest.raises(ValueError):
        GaussianProposal((0.0, 0.0), 0.0)
    with pytest.raises(ValueError, match="coordinates"):
        sample_gibbs(LIN1, ar_series, 1.0, seed=0, proposal=GaussianProposal((0.0,), 1.0))
