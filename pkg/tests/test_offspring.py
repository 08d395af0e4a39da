import math

import mpmath
import numpy as np
import pytest
from scipy import integrate, special, stats

from lambda_asp.errors import ConfigurationError, DomainError
from lambda_asp.offspring import (
    AliasTable,
    CdfSampler,
    build_offspring_law,
    c_tilde,
    gen_fn_selective,
    gen_fn_tilde,
    gw_survival,
    limit_pk,
)


def _c_tilde_quad(N, alpha):
    # int (1 - (1-p)^(N-1)) / p  Lambda(dp),  Lambda = Beta(2-alpha, alpha)
    def f(p):
        if p <= 0:
            return N - 1.0
        if p >= 1:
            return 1.0
        return -math.expm1((N - 1) * math.log1p(-p)) / p

    val, _ = integrate.quad(f, 0, 1, weight="alg", wvar=(1 - alpha, alpha - 1), epsabs=0, epsrel=1e-12, limit=200)
    return val / math.exp(special.betaln(2 - alpha, alpha))


def test_c_tilde_two():
    assert c_tilde(2, 1.5) == pytest.approx(1.0, abs=1e-12)


def test_c_tilde_quadrature():
    assert c_tilde(100, 1.2) == pytest.approx(_c_tilde_quad(100, 1.2), rel=1e-8)
    assert c_tilde(37, 1.7) == pytest.approx(_c_tilde_quad(37, 1.7), rel=1e-8)


def test_c_tilde_growth():
    N, a = 10**4, 1.5
    ratio = c_tilde(N, a) / (N ** (a - 1) / ((a - 1) * math.gamma(a)))
    assert 0.95 < ratio < 1.05


def test_law_n_two():
    law = build_offspring_law(2, 1.5)
    assert law.prob(2) == pytest.approx(0.5, abs=1e-14)
    assert law.p0 == pytest.approx(0.5, abs=1e-14)
    assert law.prob(1) == 0.0


@pytest.mark.parametrize("N", [2, 3, 10, 1000, 10**5])
@pytest.mark.parametrize("alpha", [1.1, 1.5, 1.9])
def test_normalization_and_positivity(N, alpha):
    law = build_offspring_law(N, alpha)
    assert abs(law.p0 + math.fsum(law.pk) - 1) <= 1e-10
    assert np.all(law.pk > 0)
    assert abs(law.p0 - law.p0_closed_form) <= 1e-9


def test_pk_against_mpmath_integral():
    # p_k = binom(N, k) * int p^(k-2)(1-p)^(N-k) Lambda(dp) / (N c~)
    N, a = 40, 1.3
    law = build_offspring_law(N, a)
    for k in (2, 7, 40):
        integral = mpmath.beta(k - a, N - k + a) / mpmath.beta(2 - a, a)
        ref = mpmath.binomial(N, k) * integral / (N * mpmath.mpf(law.c_tilde))
        assert law.prob(k) == pytest.approx(float(ref), rel=1e-11)


def test_p0_approaches_inverse_alpha():
    devs = [abs(build_offspring_law(N, 1.5).p0 - 2 / 3) for N in (100, 1000, 10**4)]
    assert devs[0] > devs[1] > devs[2]


def test_pk_fixed_k_converges_to_limit():
    lim = limit_pk(3, 1.5)
    devs = [abs(build_offspring_law(N, 1.5).prob(3) - lim) for N in (100, 1000, 10**4)]
    assert devs[0] > devs[1] > devs[2]


def test_limit_law_sums_to_one_minus_p0():
    k = np.arange(2, 2_000_001)
    a = 1.5
    # tail beyond K behaves like c K^-alpha / alpha
    head = math.fsum(limit_pk(k, a))
    tail = (a - 1) / math.gamma(2 - a) * 2_000_000 ** (-a) / a
    assert head + tail == pytest.approx(1 - 1 / a, rel=1e-6)


def test_limit_tail_exponent():
    N, a = 10**4, 1.5
    k = np.arange(N // 10, N // 2 + 1)
    slope = np.polyfit(np.log(k), np.log(limit_pk(k, a)), 1)[0]
    assert slope == pytest.approx(-(1 + a), abs=0.05)


def test_finite_N_tail_has_boundary_factor():
    # p_k^(N) ~ limit_pk(k) (1 - k/N)^(alpha-1) over the regression window; dividing
    # out the factor restores the limiting exponent
    N, a = 10**4, 1.5
    law = build_offspring_law(N, a)
    k = np.arange(N // 10, N // 2 + 1)
    lp = law.log_pk[k - 2]
    raw = np.polyfit(np.log(k), lp, 1)[0]
    corrected = np.polyfit(np.log(k), lp - (a - 1) * np.log1p(-k / N), 1)[0]
    assert raw < -(1 + a) - 0.1
    assert corrected == pytest.approx(-(1 + a), abs=0.05)


def test_sampler_chi_square(rng):
    law = build_offspring_law(30, 1.5)
    draws = law.sample(rng, size=10**6)
    values = np.concatenate(([0], law.k))
    probs = np.concatenate(([law.p0], law.pk))
    counts = np.array([(draws == v).sum() for v in values])
    expected = probs * draws.size
    z = (counts - expected) / np.sqrt(expected * (1 - probs))
    assert np.max(np.abs(z)) < 4
    assert counts.sum() == draws.size
    assert stats.chisquare(counts, expected).pvalue > 1e-4


def test_alias_and_cdf_samplers_agree_in_law(rng):
    p = np.array([0.1, 0.0, 0.6, 0.3])
    vals = np.array([5, 6, 7, 8])
    for sampler in (AliasTable(p, vals), CdfSampler(p, vals)):
        d = sampler.sample(rng, size=200_000)
        freq = np.array([(d == v).mean() for v in vals])
        np.testing.assert_allclose(freq, p, atol=5e-3)
        assert not np.any(d == 6)


def test_build_rejects_bad_input():
    with pytest.raises(ConfigurationError):
        build_offspring_law(1, 1.5)
    with pytest.raises(ConfigurationError):
        build_offspring_law(10, 2.0)


def test_gen_fn_tilde():
    a = 1.5
    assert gen_fn_tilde(1.0, a) == 1.0
    assert gen_fn_tilde(0.0, a) == pytest.approx(1 / a)
    # one-sided quotients carry an h^(alpha-1)/alpha error from the (1-z)^alpha term,
    # so the step has to be far below 1e-6 to resolve the mean to 1e-4
    h = 1e-10
    deriv = (gen_fn_tilde(1.0, a) - gen_fn_tilde(1.0 - h, a)) / h
    assert deriv == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(DomainError):
        gen_fn_tilde(1.5, a)


def test_gen_fn_tilde_matches_limit_law_series():
    a, z = 1.4, 0.6
    k = np.arange(2, 20000)
    series = 1 / a + math.fsum(limit_pk(k, a) * z**k)
    assert gen_fn_tilde(z, a) == pytest.approx(series, rel=1e-12)


def test_gen_fn_selective():
    a = 1.5
    z = np.linspace(0, 1, 11)
    np.testing.assert_allclose(gen_fn_selective(z, a, 0.0), gen_fn_tilde(z, a))
    for s in (0.0, 0.01, 0.5):
        assert gen_fn_selective(1.0, a, s) == pytest.approx(1.0)
        h = 1e-10
        mean = (gen_fn_selective(1.0, a, s) - gen_fn_selective(1 - h, a, s)) / h
        assert mean == pytest.approx((2 * s + 1) / (1 + s), abs=1e-4)


def test_gw_survival_basic():
    assert gw_survival(1.5, 0.0) == 0.0
    vals = [gw_survival(1.5, s) for s in (1e-4, 1e-3, 1e-2, 0.1, 1.0)]
    assert all(0 < v < 1 for v in vals)
    assert vals == sorted(vals)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_gw_survival_is_fixed_point(alpha):
    for s in (1e-4, 1e-2, 0.3):
        u = gw_survival(alpha, s)
        q = 1 - u
        assert gen_fn_selective(q, alpha, s) == pytest.approx(q, abs=1e-14)
        # direct form with full relative precision in u
        assert s * u + u ** (alpha - 1) / alpha == pytest.approx(s, rel=1e-12)


def test_gw_survival_ratio_trend():
    a = 1.5
    r = [gw_survival(a, s) / (a * s) ** 2 for s in (1e-2, 1e-3, 1e-4)]
    devs = [abs(x - 1) for x in r]
    assert devs[0] > devs[1] > devs[2]
    assert devs[2] <= 0.03
