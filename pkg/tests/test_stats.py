import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from aggwealth import stats
from aggwealth.stats import StatsError


# entropy ---------------------------------------------------------------------


def test_entropy_of_uniform_and_point_mass():
    assert stats.shannon_entropy(np.full(8, 1 / 8)) == pytest.approx(math.log(8))
    assert stats.shannon_entropy([1.0, 0.0, 0.0]) == 0.0


def test_entropy_rejects_unnormalised():
    with pytest.raises(StatsError):
        stats.shannon_entropy([0.5, 0.6])
    with pytest.raises(StatsError):
        stats.shannon_entropy([1.5, -0.5])


def test_entropy_of_identical_values_is_zero():
    assert stats.entropy_money(np.full(50, 123.0), 10.0) == 0.0
    assert stats.entropy_size(np.full(50, 7)) == 0.0


def test_entropy_money_bins_from_zero():
    # two values in distinct bins of width 10, equally often
    assert stats.entropy_money([1.0, 15.0, 2.0, 19.0], 10.0) == pytest.approx(math.log(2))


@given(st.lists(st.integers(0, 50), min_size=1, max_size=200))
def test_entropy_size_bounds(sizes):
    s = stats.entropy_size(sizes)
    assert 0.0 <= s <= math.log(len(set(sizes))) + 1e-12


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=200), st.floats(1.0, 1e4))
def test_entropy_money_matches_probabilities(values, width):
    h = stats.histogram(values, width)
    assert stats.entropy_money(values, width) == pytest.approx(stats.shannon_entropy(h.probabilities), abs=1e-9)


def test_histogram_rejects_values_below_origin():
    with pytest.raises(StatsError):
        stats.histogram([-1.0], 1.0)
    with pytest.raises(StatsError):
        stats.histogram([1.0], 0.0)


def test_relative_to_plateau():
    r = stats.relative_to_plateau(np.r_[np.linspace(0, 2, 80), np.full(20, 2.0)])
    assert r[-1] == pytest.approx(1.0)
    assert r[0] == 0.0


# CCDF transform and slope -------------------------------------------------------


def test_exponential_sample_slope_is_one():
    x = np.random.default_rng(0).exponential(1.0, 100_000)
    fit = stats.tail_exponent(x)
    assert fit.beta == pytest.approx(1.0, abs=0.02)
    assert fit.r2 > 0.99


def test_stretched_sample_slope():
    rng = np.random.default_rng(1)
    x = 3.0 * (-np.log(rng.random(100_000))) ** (1 / 0.5)  # CCDF exp(-(x/3)^0.5)
    fit = stats.tail_exponent(x)
    assert fit.beta == pytest.approx(0.5, abs=0.02)
    assert fit.x0 == pytest.approx(3.0, rel=0.1)


def test_analytic_exponential_ccdf_is_a_unit_line():
    x = np.linspace(0.01, 20, 500)
    lx, ly = stats.loglog_transform(x, np.exp(-x))
    assert np.allclose(ly, lx, atol=1e-12)
    fit = stats.fit_slope(lx, ly, (lx.min(), lx.max()))
    assert fit.beta == pytest.approx(1.0, abs=1e-12)


def test_transform_drops_endpoints():
    lx, ly = stats.loglog_transform([1.0, 2.0, 3.0], [1.0, 0.5, 0.0])
    assert lx.size == 1


def test_loglog_ccdf_guards():
    with pytest.raises(StatsError):
        stats.loglog_ccdf(np.arange(1, 5))
    with pytest.raises(StatsError):
        stats.loglog_ccdf(np.ones(20))
    with pytest.raises(StatsError):
        stats.loglog_ccdf(np.r_[0.0, np.arange(1, 20)])


def test_tail_exponent_drops_zeros():
    x = np.random.default_rng(2).exponential(1.0, 20_000)
    with_zeros = np.r_[np.zeros(500), x]
    assert stats.tail_exponent(with_zeros).beta == stats.tail_exponent(x).beta


def test_ties_share_their_highest_rank():
    lx, ly = stats.loglog_ccdf(np.r_[np.ones(5), np.arange(2, 12)])
    # ten distinct positive values below the maximum CCDF (=1 at nothing) -> 11 values, last has ccdf>0
    assert lx.size == 11
    # value 1 has highest rank 5 of n=15
    assert math.exp(-math.exp(ly[0])) == pytest.approx(1 - 5 / 16)


def test_fit_slope_needs_points():
    with pytest.raises(StatsError):
        stats.fit_slope(np.arange(4.0), np.arange(4.0))


@settings(max_examples=40)
@given(scale=st.floats(1e-3, 1e4), seed=st.integers(0, 1000))
def test_slope_scale_invariance(scale, seed):
    x = np.random.default_rng(seed).weibull(0.8, 2000)
    lx, ly = stats.loglog_ccdf(x)
    lxs, lys = stats.loglog_ccdf(scale * x)
    a = stats.fit_slope(lx, ly)
    b = stats.fit_slope(lxs, lys)
    assert b.beta == pytest.approx(a.beta, abs=1e-9)
    assert b.intercept == pytest.approx(a.intercept - a.beta * math.log(scale), abs=1e-7)


# stretched exponential ---------------------------------------------------------


@pytest.mark.parametrize("a,tau,xi", [(5.37, 400.0, 0.95), (3.9, 200.0, 0.7), (1.0, 15.0, 0.45), (2.0, 50.0, 2.5)])
def test_noiseless_recovery(a, tau, xi):
    t = np.linspace(0, 8 * tau, 400)
    fit = stats.fit_stretched_exponential(t, stats.stretched_exponential(t, a, tau, xi))
    assert fit.a == pytest.approx(a, rel=1e-3)
    assert fit.tau == pytest.approx(tau, rel=1e-3)
    assert fit.xi == pytest.approx(xi, rel=1e-3)
    assert fit.converged
    assert fit.r2 > 0.999999


def test_noisy_recovery_over_seeds():
    a, tau, xi = 4.0, 200.0, 0.8
    t = np.linspace(0, 4000, 400)
    clean = stats.stretched_exponential(t, a, tau, xi)
    for seed in range(20):
        noisy = clean + np.random.default_rng(seed).normal(0, 0.01 * a, t.size)
        fit = stats.fit_stretched_exponential(t, noisy)
        assert fit.tau == pytest.approx(tau, rel=0.05), seed


@settings(max_examples=25, deadline=None)
@given(tau=st.floats(5, 500), xi=st.floats(0.3, 3.0), a=st.floats(0.5, 10))
def test_fit_never_worse_than_grid(tau, xi, a):
    t = np.linspace(0, 10 * tau, 200)
    y = stats.stretched_exponential(t, a, tau, xi) + np.random.default_rng(0).normal(0, 0.02 * a, t.size)
    fit = stats.fit_stretched_exponential(t, y)
    assert fit.rss <= fit.grid_rss * (1 + 1e-12)
    assert 0.0 <= fit.r2 <= 1.0


def test_stretched_fit_is_callable():
    t = np.linspace(0, 100, 60)
    fit = stats.fit_stretched_exponential(t, stats.stretched_exponential(t, 2.0, 10.0, 1.0))
    assert fit(10.0) == pytest.approx(2.0 * (1 - math.exp(-1)), rel=1e-4)


def test_stretched_fit_needs_points():
    with pytest.raises(StatsError):
        stats.fit_stretched_exponential(np.arange(5), np.arange(5))


# goodness of fit ----------------------------------------------------------------


def test_ks_matches_scipy_for_continuous_reference():
    x = np.random.default_rng(3).normal(size=3000)
    assert stats.gof_distance(x, sps.norm.cdf, "ks") == pytest.approx(sps.kstest(x, "norm").statistic, abs=1e-12)


def test_ks_handles_atoms():
    # half the mass at zero, half exponential; a sample drawn from exactly that law
    rng = np.random.default_rng(4)
    x = np.where(rng.random(20_000) < 0.5, 0.0, rng.exponential(1.0, 20_000))

    def cdf(m):
        m = np.asarray(m, dtype=float)
        return np.where(m < 0, 0.0, 0.5 + 0.5 * (1 - np.exp(-np.maximum(m, 0))))

    assert stats.gof_distance(x, cdf, "ks") < 0.015
    # the continuous-CDF formula mistakes the atom for a discrepancy of its full size
    assert sps.kstest(x, cdf).statistic > 0.45


def test_total_variation_and_chi_square():
    pmf = np.array([0.25, 0.25, 0.5])
    assert stats.gof_distance([0, 1, 2, 2], pmf, "total_variation") == 0.0
    assert stats.gof_distance([0, 0, 0, 0], pmf, "total_variation") == pytest.approx(0.75)
    assert stats.gof_distance([0, 1, 2, 2], pmf, "chi_square") == pytest.approx(0.0)
    # chi-square by hand: (1-.25)^2/.25 + .25 + .5
    assert stats.gof_distance([0, 0, 0, 0], pmf, "chi_square") == pytest.approx(3.0)
    with pytest.raises(StatsError):
        stats.gof_distance([5], pmf, "chi_square")


def test_binned_total_variation():
    pmf = {0: 0.5, 1: 0.5}
    assert stats.gof_distance([0, 0], pmf, "total_variation", bin_width=2) == 0.0
    assert stats.gof_distance([0, 0], pmf, "total_variation") == pytest.approx(0.5)


def test_gof_argument_checks():
    with pytest.raises(StatsError):
        stats.gof_distance([1.0], [0.5, 0.5], "ks")
    with pytest.raises(StatsError):
        stats.gof_distance([1], sps.norm.cdf, "total_variation")
    with pytest.raises(StatsError):
        stats.gof_distance([0.5], [1.0], "total_variation")
    with pytest.raises(StatsError):
        stats.gof_distance([0], [1.0], "hellinger")


@given(st.lists(st.integers(0, 9), min_size=1, max_size=100))
def test_total_variation_is_a_bounded_distance(samples):
    pmf = np.full(10, 0.1)
    tv = stats.gof_distance(samples, pmf, "total_variation")
    assert 0.0 <= tv <= 1.0
    emp = np.bincount(samples, minlength=10) / len(samples)
    assert stats.gof_distance(samples, emp, "total_variation") == pytest.approx(0.0, abs=1e-12)


def test_block_means():
    assert np.allclose(stats.block_means(np.arange(7.0), 3), [1.0, 4.0])
