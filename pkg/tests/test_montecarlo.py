"""Simulation, KS and characteristic-function diagnostics, verdicts."""

import math

import numpy as np
import pytest
from scipy.special import ndtri

import cltlab as cl
from cltlab import DegenerateSigma, SidednessMismatch

from conftest import SIGMA2_TWO_STATE


def test_simulate_deterministic_and_worker_invariant(two_state, two_state_f):
    a = cl.simulate_birkhoff(two_state, two_state_f, 400, 300, seed=5)
    b = cl.simulate_birkhoff(two_state, two_state_f, 400, 300, seed=5)
    c = cl.simulate_birkhoff(two_state, two_state_f, 400, 300, seed=5, workers=3)
    assert a.shape == (300,) and a.dtype == np.float64
    assert np.array_equal(a, b)
    assert np.array_equal(a, c)
    d = cl.simulate_birkhoff(two_state, two_state_f, 400, 300, seed=6)
    assert not np.array_equal(a, d)


def test_simulate_bernoulli_moments(bernoulli):
    s = cl.simulate_birkhoff(bernoulli, cl.rademacher(2), 10_000, 4000, seed=42)
    # S_n/sqrt(n) for iid signs is an exact unit-variance, mean-zero sum
    assert abs(s.mean()) < 0.05
    assert abs(s.var(ddof=1) - 1.0) < 0.07


def test_orbit_average_matches_expectation(two_state, two_state_f):
    avg = cl.orbit_average(two_state, two_state_f, 100_000, seed=7)
    assert avg == cl.orbit_average(two_state, two_state_f, 100_000, seed=7)
    # 4 sigma band at the long-run variance 34/27
    assert abs(avg) < 4.0 * math.sqrt(SIGMA2_TWO_STATE / 100_000)


def test_ks_statistic_degenerate_samples():
    out = cl.ks_statistic(np.zeros(1000), 1.0)
    assert out["distance"] == 0.5
    assert abs(out["threshold_5pct"] - 1.358 / math.sqrt(1000)) < 1e-12


def test_ks_statistic_plug_in_grid():
    # quantile-spaced draws make the empirical CDF straddle the target
    # CDF exactly, leaving only the 1/(2m) discretization gap
    m = 1000
    s = ndtri((np.arange(m) + 0.5) / m)
    out = cl.ks_statistic(s, 1.0)
    assert abs(out["distance"] - 1.0 / (2 * m)) < 1e-12


def test_ks_statistic_wrong_scale():
    # N(0,4) quantiles against a unit target: the analytic sup distance is
    # max_x |Phi(x/2) - Phi(x)| ~ 0.1613, attained near x = 1.359
    m = 4000
    s = 2.0 * ndtri((np.arange(m) + 0.5) / m)
    out = cl.ks_statistic(s, 1.0)
    assert abs(out["distance"] - 0.16146227554883785) < 1e-12
    assert out["distance"] > out["threshold_5pct"]


def test_ks_statistic_input_guards():
    with pytest.raises(ValueError):
        cl.ks_statistic(np.zeros(499), 1.0)
    with pytest.raises(DegenerateSigma):
        cl.ks_statistic(np.random.default_rng(0).normal(size=600), 1e-9)


def test_cf_diagnostic_degenerate_samples():
    out = cl.cf_diagnostic(np.zeros(600), 1.0)
    grid = [t for t, _ in out]
    assert grid == [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0]
    dev = dict(out)
    # samples at zero leave the raw average at 1, so the deviation is the
    # gaussian compensator itself
    assert abs(dev[2.0] - (math.exp(2.0) - 1.0)) < 1e-12
    assert abs(dev[0.5] - (math.exp(0.125) - 1.0)) < 1e-12


def test_cf_diagnostic_normal_plug_in():
    m = 4000
    s = ndtri((np.arange(m) + 0.5) / m)
    out = cl.cf_diagnostic(s, 1.0)
    assert max(d for _, d in out) < 0.01


def test_moment_summary_alternating():
    m = 1000
    alt = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    out = cl.moment_summary(alt)
    assert out["mean"] == 0.0
    assert abs(out["variance"] - m / (m - 1)) < 1e-15
    assert abs(out["excess_kurtosis"] - (-2.0040120361083247)) < 1e-13
    with pytest.raises(ValueError):
        cl.moment_summary(np.ones(3))


def test_moment_summary_normal_plug_in():
    s = ndtri((np.arange(4000) + 0.5) / 4000)
    out = cl.moment_summary(s)
    assert abs(out["mean"]) < 1e-12
    assert abs(out["variance"] - 1.0) < 0.01
    assert abs(out["excess_kurtosis"]) < 0.02


def test_remainder_probability_two_state(two_state, two_state_f):
    dec = cl.decompose(two_state, two_state_f)
    probs = cl.remainder_probability(
        two_state, two_state_f, dec.g, [100, 1112, 7512], eps=0.1, m=1000, seed=42
    )
    # the leftover after the martingale part is U^n g - g plus boundary
    # terms, bounded by 10/3; once eps * sqrt(n) clears that bound the
    # exceedance probability is exactly zero
    assert probs[0] > 0.4
    assert probs[1] == 0.0
    assert probs[2] == 0.0


def test_remainder_probability_needs_one_sided(
    two_state_two_sided, two_state_f
):
    with pytest.raises(SidednessMismatch):
        cl.remainder_probability(
            two_state_two_sided, two_state_f, two_state_f, [10], 0.1, 600, 1
        )


def test_verdict_consistent_bernoulli(bernoulli):
    rep = cl.verdict(bernoulli, cl.rademacher(2), 1.0, 10_000, 4000, seed=42)
    assert rep.verdict == cl.CONSISTENT
    assert rep.ks_distance < rep.ks_threshold
    assert abs(rep.ks_distance - 0.0131954376) < 1e-9
    assert abs(rep.sample_variance - 1.0111268456) < 1e-9
    assert rep.remainder_prob is not None


def test_verdict_rejects_wrong_variance(bernoulli):
    rep = cl.verdict(bernoulli, cl.rademacher(2), 4.0, 10_000, 4000, seed=42)
    assert rep.verdict == cl.INCONSISTENT


def test_verdict_degenerate_coboundary(bernoulli, coboundary_f):
    rep = cl.verdict(bernoulli, coboundary_f, 0.0, 10_000, 2000, seed=42)
    assert rep.verdict == cl.DEGENERATE
    assert rep.ks_distance is None
    # witness bound: (sup|f| + 2 sup|g|) / sqrt(n) = 4/100
    assert abs(rep.degenerate_bound - 0.04) < 1e-12
    assert rep.degenerate_bound_ok is True
    samples = cl.simulate_birkhoff(bernoulli, coboundary_f, 10_000, 2000, seed=42)
    assert np.max(np.abs(samples)) <= 0.04


def test_verdict_tolerance_guard(bernoulli):
    with pytest.raises(ValueError, match="unknown tolerance"):
        cl.verdict(
            bernoulli, cl.rademacher(2), 1.0, 1000, 600, seed=1,
            tolerances={"bogus": 1.0},
        )


def test_verdict_report_dict_round_trip(bernoulli):
    rep = cl.verdict(bernoulli, cl.rademacher(2), 1.0, 2000, 600, seed=3)
    d = rep.as_dict()
    for key in (
        "n",
        "sigma2_theory",
        "sample_mean",
        "sample_variance",
        "excess_kurtosis",
        "ks_distance",
        "ks_threshold",
        "psi_deviation",
        "verdict",
    ):
        assert key in d
    # the scalar sample count, never the raw array
    assert d["samples"] == 600


def test_small_shift_leaves_verdict_stats_alone(bernoulli):
    # a perturbation of size 3/sqrt(n) must not move either criterion:
    # the limit law is insensitive to vanishing additive noise
    n, m = 10_000, 4000
    s = cl.simulate_birkhoff(bernoulli, cl.rademacher(2), n, m, seed=42)
    bump = (3.0 / math.sqrt(n)) * np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    before = cl.ks_statistic(s, 1.0)
    after = cl.ks_statistic(s + bump, 1.0)
    assert after["distance"] < after["threshold_5pct"]
    assert abs(after["distance"] - before["distance"]) < 0.005
    assert abs((s + bump).var(ddof=1) - 1.0) < 4.0 * math.sqrt(2.0 / m)
