import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from globaladv.gev import GevFitError, GevParams, gev_cdf, gev_fit_mle, gev_loglik, gev_logpdf, gev_pdf, moment_init


def gumbel_samples(mu, sigma, n, seed):
    u = np.random.default_rng(seed).uniform(size=n)
    return mu - sigma * np.log(-np.log(u))


def quantile(mu, sigma, xi, u):
    if xi == 0:
        return mu - sigma * np.log(-np.log(u))
    return mu + sigma * ((-np.log(u)) ** (-xi) - 1) / xi


def gev_samples(mu, sigma, xi, n, seed):
    return quantile(mu, sigma, xi, np.random.default_rng(seed).uniform(size=n))


def support(p):
    lo = p.mu - p.sigma / p.xi if p.xi > 0 else -np.inf
    hi = p.mu - p.sigma / p.xi if p.xi < 0 else np.inf
    return lo, hi


def random_params(rng):
    xi = float(rng.choice([0.0, rng.uniform(-0.5, 0.5)]))
    return GevParams(float(rng.uniform(-3, 3)), float(rng.uniform(0.2, 3)), xi)


def test_gumbel_cdf_at_location():
    assert gev_cdf(GevParams(1.5, 2.0, 0.0), 1.5) == pytest.approx(0.367879, abs=1e-6)


def test_frechet_cdf_at_location():
    assert gev_cdf(GevParams(0.0, 1.0, 0.5), 0.0) == pytest.approx(math.exp(-1))


def test_reverse_weibull_beyond_endpoint():
    p = GevParams(0.0, 1.0, -0.5)  # upper endpoint 2
    assert gev_cdf(p, 2.5) == 1.0
    assert gev_pdf(p, 2.5) == 0.0
    assert gev_logpdf(p, 2.5) == -math.inf


def test_frechet_below_lower_endpoint():
    p = GevParams(0.0, 1.0, 0.5)  # lower endpoint -2
    assert gev_cdf(p, -3.0) == 0.0
    assert gev_pdf(p, -3.0) == 0.0


def test_gumbel_pdf_at_location():
    assert gev_pdf(GevParams(0.0, 1.0, 0.0), 0.0) == pytest.approx(math.exp(-1))


@pytest.mark.parametrize("seed", range(10))
def test_pdf_integrates_to_one(seed):
    p = random_params(np.random.default_rng(seed))
    # everything outside [Q(1e-10), Q(1 - 1e-6)] carries about 1e-6 of mass
    lo, hi = quantile(p.mu, p.sigma, p.xi, 1e-10), quantile(p.mu, p.sigma, p.xi, 1 - 1e-6)
    total, _ = integrate.quad(lambda l: gev_pdf(p, l), lo, hi, limit=500, points=[p.mu])
    assert total == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("seed", range(5))
def test_pdf_is_the_cdf_derivative(seed):
    rng = np.random.default_rng(100 + seed)
    p = random_params(rng)
    lo, hi = support(p)
    center, spread = p.mu, 3 * p.sigma
    pts = rng.uniform(max(lo + 0.05 * p.sigma, center - spread), min(hi - 0.05 * p.sigma, center + spread), 20)
    h = 1e-5
    fd = (gev_cdf(p, pts + h) - gev_cdf(p, pts - h)) / (2 * h)
    np.testing.assert_allclose(gev_pdf(p, pts), fd, atol=1e-6)


@settings(max_examples=50, deadline=None)
@given(mu=st.floats(-5, 5), sigma=st.floats(0.1, 5), xi=st.floats(-0.9, 0.9), l=st.floats(-20, 20))
def test_agrees_with_scipy_genextreme(mu, sigma, xi, l):
    p = GevParams(mu, sigma, xi)
    ref = stats.genextreme(-xi, loc=mu, scale=sigma)
    assert gev_cdf(p, l) == pytest.approx(ref.cdf(l), abs=1e-9)
    assert gev_pdf(p, l) == pytest.approx(ref.pdf(l), rel=1e-6, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(mu=st.floats(-5, 5), sigma=st.floats(0.1, 5), xi=st.floats(-1, 1),
       a=st.floats(-50, 50), b=st.floats(-50, 50))
def test_cdf_is_monotone(mu, sigma, xi, a, b):
    p = GevParams(mu, sigma, xi)
    lo, hi = min(a, b), max(a, b)
    assert gev_cdf(p, lo) <= gev_cdf(p, hi)
    assert gev_pdf(p, lo) >= 0


def test_cdf_limits():
    for xi in (-0.3, 0.0, 0.3):
        p = GevParams(0.0, 1.0, xi)
        assert gev_cdf(p, -1e6) == pytest.approx(0.0, abs=1e-12)
        assert gev_cdf(p, 1e6) == pytest.approx(1.0, abs=1e-6)


def test_params_are_validated():
    with pytest.raises(ValueError):
        GevParams(0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        GevParams(0.0, 1.0, math.nan)


def test_mle_recovers_gumbel():
    fit = gev_fit_mle(gumbel_samples(3.0, 2.0, 10_000, 0))
    assert 2.9 <= fit.params.mu <= 3.1
    assert 1.9 <= fit.params.sigma <= 2.1
    assert abs(fit.params.xi) < 0.05
    assert fit.converged


def test_mle_recovers_frechet_shape():
    fit = gev_fit_mle(gev_samples(1.0, 0.5, 0.3, 5000, 1))
    assert 0.2 <= fit.params.xi <= 0.4


def test_mle_matches_scipy_fit():
    x = gev_samples(0.0, 1.0, -0.2, 2000, 2)
    fit = gev_fit_mle(x)
    c, loc, scale = stats.genextreme.fit(x)
    # both are maximisers, so the log-likelihoods should agree closely
    ref = gev_loglik(GevParams(loc, scale, -c), x)
    assert fit.loglik >= ref - 1e-3


def test_location_equivariance():
    x = gumbel_samples(0.0, 1.0, 500, 3)
    a, b = gev_fit_mle(x), gev_fit_mle(x + 5.0)
    assert b.params.mu - a.params.mu == pytest.approx(5.0, abs=1e-6)
    assert b.params.sigma == pytest.approx(a.params.sigma, abs=1e-6)
    assert b.params.xi == pytest.approx(a.params.xi, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_fit_never_loses_to_the_moment_start(seed):
    x = gev_samples(2.0, 1.5, 0.2 * (seed - 2), 60, seed)
    fit = gev_fit_mle(x)
    assert fit.loglik >= gev_loglik(moment_init(x), x)
    assert fit.loglik == pytest.approx(gev_loglik(fit.params, x))


def test_infeasible_init_falls_back_to_moments():
    x = gumbel_samples(0.0, 1.0, 200, 4)
    fit = gev_fit_mle(x, init=GevParams(100.0, 1.0, 0.5))  # support starts at 98
    assert abs(fit.params.mu) < 0.3


def test_fit_is_deterministic():
    x = gumbel_samples(1.0, 1.0, 100, 5)
    assert gev_fit_mle(x) == gev_fit_mle(x)


def test_iteration_cap_is_flagged():
    fit = gev_fit_mle(gumbel_samples(1.0, 1.0, 100, 6), max_iter=3)
    assert not fit.converged and fit.n_iter == 3


@pytest.mark.parametrize("bad", [[1.0, 2.0, 3.0], [2.0] * 10, [1.0, 2.0, np.inf, 3.0, 4.0]])
def test_degenerate_samples(bad):
    with pytest.raises(GevFitError):
        gev_fit_mle(bad)


def test_moment_start():
    x = gumbel_samples(3.0, 2.0, 20_000, 7)
    p = moment_init(x)
    assert p.xi == 0.0
    assert p.sigma == pytest.approx(math.sqrt(6) * np.std(x, ddof=1) / math.pi)
    assert p.mu == pytest.approx(np.mean(x) - 0.5772156649 * p.sigma)
