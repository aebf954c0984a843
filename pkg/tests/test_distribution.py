import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from grl.distribution import (
    GrlParams,
    Sample,
    cdf,
    density_at_origin,
    hazard,
    log_pdf,
    mixture_components,
    mixture_weight,
    moments,
    order_stat_cdf,
    order_stat_pdf,
    pdf,
    quantile,
    raw_moment,
    sample_inverse,
    sample_mixture,
    survival,
    ttt_transform,
)

PARAMS = [GrlParams(2.0, 0.5), GrlParams(3.1, 0.7), GrlParams(4.0, 1.5), GrlParams(5.5, 10.0)]

lams = st.floats(min_value=2.0, max_value=50.0)
alphas = st.floats(min_value=0.2, max_value=10.0)


def test_params_validation():
    for lam, alpha in [(1.99, 1.0), (2.0, 0.0), (2.0, -1.0), (math.inf, 1.0), (math.nan, 1.0)]:
        with pytest.raises(ValueError):
            GrlParams(lam, alpha)


def test_sample_validation_and_immutability():
    with pytest.raises(ValueError):
        Sample([])
    with pytest.raises(ValueError):
        Sample([1.0, -2.0])
    with pytest.raises(ValueError):
        Sample([1.0, math.inf])
    s = Sample([3.0, 1.0, 2.0])
    assert list(s.sorted) == [1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        s.sorted[0] = 5.0


@pytest.mark.parametrize("p", PARAMS)
def test_pdf_integrates_to_one(p):
    total, _ = integrate.quad(lambda t: pdf(p, t), 0, np.inf, limit=400)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("p", PARAMS)
def test_cdf_is_integral_of_pdf(p):
    for t in (quantile(p, 0.1), quantile(p, 0.5), quantile(p, 0.9)):
        val, _ = integrate.quad(lambda s: pdf(p, s), 0, t, limit=400)
        assert cdf(p, t) == pytest.approx(val, abs=1e-9)


@pytest.mark.parametrize("p", PARAMS)
def test_mixture_matches_weibull_and_generalized_gamma(p):
    # independent oracle: scipy's Weibull and generalized gamma densities
    t = np.geomspace(0.05, 20.0, 50)
    scale = p.lam ** (1.0 / p.alpha)
    f1 = stats.weibull_min.pdf(t, p.alpha, scale=scale)
    f2 = stats.gengamma.pdf(t, 2.0, p.alpha, scale=scale)
    w = mixture_weight(p)
    np.testing.assert_allclose(pdf(p, t), w * f1 + (1 - w) * f2, rtol=1e-12, atol=1e-300)
    g1, g2 = mixture_components(p, t)
    np.testing.assert_allclose(g1, f1, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(g2, f2, rtol=1e-12, atol=1e-300)


def test_alpha_one_reduces_to_ramos_louzada():
    lam = 4.0
    t = np.linspace(0.1, 30.0, 40)
    rl = (lam - 2.0 + t / lam) * np.exp(-t / lam) / (lam * (lam - 1.0))
    np.testing.assert_allclose(pdf(GrlParams(lam, 1.0), t), rl, rtol=1e-13)


def test_density_at_origin_cases():
    assert density_at_origin(GrlParams(3.0, 0.5)) == math.inf
    assert density_at_origin(GrlParams(3.0, 2.0)) == 0.0
    assert density_at_origin(GrlParams(3.0, 1.0)) == pytest.approx(1.0 / 6.0)
    assert pdf(GrlParams(2.0, 1.0), 0.0) == 0.0
    assert pdf(GrlParams(3.0, 1.0), 1e-12) == pytest.approx(1.0 / 6.0, rel=1e-9)


def test_support_errors():
    p = GrlParams(3.0, 1.0)
    with pytest.raises(ValueError):
        pdf(p, -1.0)
    with pytest.raises(ValueError):
        hazard(p, 0.0)
    with pytest.raises(ValueError):
        log_pdf(p, 0.0)
    for q in (0.0, 1.0, -0.1, math.nan):
        with pytest.raises(ValueError):
            quantile(p, q)


def test_cdf_and_survival_at_zero():
    p = GrlParams(3.0, 2.0)
    assert cdf(p, 0.0) == 0.0
    assert survival(p, 0.0) == 1.0


def test_survival_stays_accurate_in_the_tail():
    p = GrlParams(3.0, 1.0)
    t = 2000.0
    z = t / 3.0
    expected = math.exp(math.log1p(z / 2.0) - z)
    assert survival(p, t) == pytest.approx(expected, rel=1e-12)
    assert survival(p, t) > 0.0


@settings(max_examples=1000, deadline=None)
@given(lams, alphas, st.floats(min_value=0.01, max_value=30.0))
def test_hazard_times_survival_is_pdf(lam, alpha, t):
    p = GrlParams(lam, alpha)
    h, s, f = hazard(p, t), survival(p, t), pdf(p, t)
    assert h * s == pytest.approx(f, rel=1e-10, abs=1e-300)


@settings(max_examples=1000, deadline=None)
@given(lams, alphas, st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_quantile_roundtrip(lam, alpha, prob):
    p = GrlParams(lam, alpha)
    assert cdf(p, quantile(p, prob)) == pytest.approx(prob, abs=1e-10)


def test_quantile_with_huge_lambda():
    p = GrlParams(3.7e6, 2.97)
    q = quantile(p, np.array([0.01, 0.5, 0.99]))
    assert np.all(np.isfinite(q)) and np.all(np.diff(q) > 0)
    np.testing.assert_allclose(cdf(p, q), [0.01, 0.5, 0.99], atol=1e-10)


def test_quantile_matches_gamma_at_boundary():
    # at lam=2, alpha=1 the survival is (1 + t/2) exp(-t/2): T/2 is Gamma(2)
    u = np.array([1e-6, 0.1, 0.5, 0.9, 1 - 1e-6])
    np.testing.assert_allclose(quantile(GrlParams(2.0, 1.0), u), 2.0 * stats.gamma.ppf(u, 2.0), rtol=1e-12)


def test_moments_exact_at_lam2_alpha_half():
    # (2, 0.5): mu_r = r lam^{2r} (lam + 2r - 1) Gamma(2r) / (alpha (lam - 1)) gives integers
    m = moments(GrlParams(2.0, 0.5))
    assert m.mean == pytest.approx(24.0, rel=1e-14)
    assert m.variance == pytest.approx(1344.0, rel=1e-13)
    assert raw_moment(GrlParams(2.0, 0.5), 4) == pytest.approx(92897280.0, rel=1e-13)


# quadrature of t^r f(t) at 40 digits
RAW_REFERENCE = {
    (3.1, 0.7): (10.707745775811367, 300.88242833001397, 14446.609520745861, 1014292.3993118191),
    (4.0, 10.0): (1.1292422331836147, 1.2922996469556094, 1.4963423225839513, 1.7507915032043625),
    (5.5, 3.5): (1.5573525657706587, 2.6587256864052296, 4.8644547584827232, 9.4063705256698222),
}


@pytest.mark.parametrize("key", RAW_REFERENCE)
def test_raw_moments_reference(key):
    p = GrlParams(*key)
    for r, ref in enumerate(RAW_REFERENCE[key], start=1):
        assert raw_moment(p, r) == pytest.approx(ref, rel=1e-12)


def test_raw_moment_errors():
    with pytest.raises(ValueError):
        raw_moment(GrlParams(3.0, 1.0), 0)
    with pytest.raises(OverflowError):
        raw_moment(GrlParams(3.0, 0.01), 4)


def test_moments_at_gamma_limit():
    # lam = 2, alpha = 1 is 2 * Gamma(2)
    m = moments(GrlParams(2.0, 1.0))
    assert m == pytest.approx((4.0, 8.0, math.sqrt(2.0), 6.0), rel=1e-12)


@pytest.mark.parametrize("r, n", [(1, 1), (1, 5), (3, 5), (5, 5), (7, 20)])
def test_order_stat_cdf_matches_binomial_tail(r, n):
    p = GrlParams(3.1, 0.7)
    x = np.array([0.3, 2.0, 8.0, 40.0])
    F = cdf(p, x)
    # P(X_(r) <= x) = P(Binomial(n, F) >= r)
    np.testing.assert_allclose(order_stat_cdf(p, r, n, x), stats.binom.sf(r - 1, n, F), rtol=1e-11, atol=1e-15)


@pytest.mark.parametrize("r, n", [(1, 4), (2, 4), (4, 4)])
def test_order_stat_pdf_integrates_to_cdf(r, n):
    p = GrlParams(2.0, 2.5)
    x = 1.4
    val, _ = integrate.quad(lambda t: order_stat_pdf(p, r, n, t), 0, x)
    assert val == pytest.approx(order_stat_cdf(p, r, n, x), abs=1e-10)
    total, _ = integrate.quad(lambda t: order_stat_pdf(p, r, n, t), 0, np.inf)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_order_stat_single_sample_is_parent():
    p = GrlParams(4.0, 1.5)
    x = np.array([0.5, 1.0, 3.0])
    np.testing.assert_allclose(order_stat_pdf(p, 1, 1, x), pdf(p, x), rtol=1e-13)
    np.testing.assert_allclose(order_stat_cdf(p, 1, 1, x), cdf(p, x), rtol=1e-13)


def test_order_stat_index_errors():
    p = GrlParams(3.0, 1.0)
    with pytest.raises(IndexError):
        order_stat_pdf(p, 0, 3, 1.0)
    with pytest.raises(IndexError):
        order_stat_cdf(p, 4, 3, 1.0)


def test_samplers_are_deterministic_and_positive():
    p = GrlParams(3.1, 0.7)
    a = sample_inverse(p, 500, 11)
    b = sample_inverse(p, 500, 11)
    np.testing.assert_array_equal(a.values, b.values)
    assert np.all(a.values > 0)
    c = sample_mixture(p, 500, np.random.SeedSequence(4))
    d = sample_mixture(p, 500, np.random.SeedSequence(4))
    np.testing.assert_array_equal(c.values, d.values)
    with pytest.raises(ValueError):
        sample_inverse(p, 0, 1)


def test_samplers_agree_in_distribution():
    p = GrlParams(4.0, 1.5)
    a = sample_inverse(p, 5000, 1).values
    b = sample_mixture(p, 5000, 2).values
    assert stats.ks_2samp(a, b).pvalue > 1e-3
    assert stats.kstest(a, lambda t: cdf(p, t)).pvalue > 1e-3


def test_ttt_small_example():
    pts = ttt_transform([3.0, 1.0, 2.0])
    # T(i/n) = (sum_{j<=i} x_(j) + (n-i) x_(i)) / sum x
    assert pts == pytest.approx([(1 / 3, 0.5), (2 / 3, 5 / 6), (1.0, 1.0)])


def test_ttt_exponential_sample_is_near_diagonal():
    x = stats.expon.rvs(size=4000, random_state=np.random.default_rng(3))
    pts = np.array(ttt_transform(x))
    assert np.max(np.abs(pts[:, 1] - pts[:, 0])) < 0.05
