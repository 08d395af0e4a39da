import math

import numpy as np
import pytest

from lambda_asp.asp import ASPChain, stationary_distribution
from lambda_asp.errors import ConfigurationError, DomainError, SizeError
from lambda_asp.lyapunov import (
    apply_generator,
    apply_generator_all,
    default_betas,
    gen_beta_constants,
    generator_linear_closed_form,
    linear_down_drift,
    linear_down_drift_direct,
    lower_bound_check,
    lower_bound_coefficients,
    power_drift_scan,
    sandwich_report,
    upper_bound_check,
    upper_bound_maximizer,
)
from lambda_asp.model import ModelParams


@pytest.fixture(scope="module")
def chain2000():
    return ASPChain(ModelParams(N=2000, alpha=1.5, b=0.25))


def test_constants_annihilated(chain2000):
    vals = apply_generator_all(np.full(2000, 3.7), chain2000)
    assert np.max(np.abs(vals)) <= 1e-12


def test_identity_at_one(chain2000):
    p = chain2000.params
    assert apply_generator(lambda x: x, 1, chain2000) == pytest.approx(p.s_N * (1 - 1 / p.N), rel=1e-13)
    assert generator_linear_closed_form(1.0, 1, chain2000) == pytest.approx(p.s_N * (1 - 1 / p.N), rel=1e-13)


def test_first_moment_at_two():
    for alpha in (1.2, 1.5, 1.8):
        assert linear_down_drift(2, alpha) == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_linear_closed_form_random_states(alpha, rng):
    ch = ASPChain(ModelParams(N=2000, alpha=alpha, b=0.3 * (alpha - 1)))
    a = 3.3
    for x in rng.integers(1, 2001, size=100):
        x = int(x)
        direct = apply_generator(lambda z: a * z, x, ch)
        closed = generator_linear_closed_form(a, x, ch)
        scale = a * (ch.up[x] + ch.params.c_N * linear_down_drift(x, alpha)) + 1e-300
        assert abs(direct - closed) <= 1e-9 * scale
        assert linear_down_drift(x, alpha) == pytest.approx(linear_down_drift_direct(x, ch), rel=1e-9, abs=1e-300)


def test_apply_generator_validation(chain2000):
    with pytest.raises(DomainError):
        apply_generator(lambda z: z, 0, chain2000)
    with pytest.raises(DomainError):
        apply_generator(np.ones(10), 3, chain2000)


def test_power_drift_scan():
    ch = ASPChain(ModelParams(N=10**4, alpha=1.5, b=0.25))
    R = power_drift_scan(0.3, ch, 10**4)
    assert np.all(np.isfinite(R))
    top = R[R.size // 10 * 9 :]
    lower = R[R.size // 100 : R.size // 10]
    # bounded: no growth over the top decade
    assert top.max() <= 1.05 * lower.max()
    small = power_drift_scan(1e-6, ch, 200)
    assert small.max() <= 1e-4
    with pytest.raises(DomainError):
        power_drift_scan(1.2, ch, 10)


def test_gen_beta_constants_bounded():
    ch = ASPChain(ModelParams(N=3000, alpha=1.5, b=0.25))
    c1, c2 = gen_beta_constants(0.3, ch)
    assert math.isfinite(c1) and math.isfinite(c2)
    assert c1 >= 0 and c2 >= 0
    assert max(c1, c2) < 50


def test_upper_maximizer_location():
    ch = ASPChain(ModelParams(N=10**4, alpha=1.5, b=0.25))
    prof = upper_bound_check(ch)
    x0 = upper_bound_maximizer(ch)
    assert abs(prof.arg - x0) <= 0.1 * x0


def test_lower_bound_drift_factor_vanishes_at_d_N():
    ch = ASPChain(ModelParams(N=1000, alpha=1.5, b=0.25))
    b1, b2 = 0.2, 0.4
    a1, a2 = lower_bound_coefficients(ch, b1, b2)
    d = ch.derived.d_N
    assert a1 * b1 * d**b1 + a2 * b2 * d**b2 == pytest.approx(0.0, abs=1e-12 * a1 * d**b1)


def test_default_betas_valid():
    for alpha in (1.05, 1.5, 1.95):
        b1, b2 = default_betas(alpha)
        assert 0 < b1 < b2 < alpha - 1


def test_lower_bound_validation():
    ch = ASPChain(ModelParams(N=100, alpha=1.5, b=0.25))
    with pytest.raises(ConfigurationError):
        lower_bound_check(ch, 0.4, 0.2)
    with pytest.raises(SizeError):
        lower_bound_check(ch, 0.2, 0.4, max_N=50)
    neutral = ASPChain(ModelParams.with_s(100, 1.5, 0.0))
    with pytest.raises(ConfigurationError):
        upper_bound_check(neutral)


@pytest.mark.parametrize("N, alpha, b", [(50, 1.5, 0.25), (1000, 1.5, 0.25), (800, 1.2, 0.1), (800, 1.8, 0.5)])
def test_exact_sandwich(N, alpha, b):
    ch = ASPChain(ModelParams(N=N, alpha=alpha, b=b))
    rep = sandwich_report(ch, stationary_distribution(ch))
    assert rep["sandwich_ok"]
    assert rep["min_over_dN"] * rep["d_N"] <= rep["E_A_eq"] <= rep["max_over_dN"] * rep["d_N"]


def test_extremes_trend_toward_one():
    ups, lows = [], []
    for N in (1000, 4000, 16000):
        ch = ASPChain(ModelParams(N=N, alpha=1.5, b=0.25))
        ups.append(abs(upper_bound_check(ch).extreme_over_dN - 1))
        lows.append(abs(lower_bound_check(ch, 0.2, 0.4).extreme_over_dN - 1))
    assert ups[0] > ups[1] > ups[2]
    assert lows[0] > lows[1] > lows[2]
