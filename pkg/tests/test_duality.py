import math

import numpy as np
import pytest
from scipy import linalg

from lambda_asp.asp import ASPChain, stationary_distribution
from lambda_asp.duality import (
    duality_gap,
    duality_report,
    duality_sides,
    falling_factorial_ratio,
    transient_distribution,
)
from lambda_asp.errors import SizeError
from lambda_asp.model import ModelParams


def test_falling_factorial_ratio():
    assert falling_factorial_ratio(3, 0, 9) == 1.0
    assert falling_factorial_ratio(9, 4, 9) == 1.0
    assert falling_factorial_ratio(2, 3, 5) == 0.0
    assert falling_factorial_ratio(4, 2, 6) == pytest.approx(12 / 30)


def test_transient_t_zero():
    Q = np.array([[-1.0, 1.0], [2.0, -2.0]])
    np.testing.assert_array_equal(transient_distribution(Q, 1, 0.0), [0.0, 1.0])


@pytest.mark.parametrize("t", [0.05, 1.0, 7.5])
def test_transient_two_state_closed_form(t):
    a, b = 0.7, 1.9
    Q = np.array([[-a, a], [b, -b]])
    p = transient_distribution(Q, 0, t, tol=1e-13)
    p1 = a / (a + b) * (1 - math.exp(-(a + b) * t))
    np.testing.assert_allclose(p, [1 - p1, p1], atol=1e-10)


def test_transient_matches_expm():
    ch = ASPChain(ModelParams(N=15, alpha=1.4, s_override=0.3))
    Q = ch.generator_dense()
    p = transient_distribution(Q, 3, 2.5, tol=1e-13)
    ref = linalg.expm(Q * 2.5)[3]
    np.testing.assert_allclose(p, ref, atol=1e-10)


def test_transient_large_t_reaches_stationarity():
    p = ModelParams(N=30, alpha=1.5, s_override=0.3)
    ch = ASPChain(p)
    pi = stationary_distribution(ch).weights
    pt = transient_distribution(ch.generator_dense(), 0, 400.0, tol=1e-12)
    assert 0.5 * np.abs(pt - pi).sum() <= 1e-6


def test_duality_trivial_cases():
    p = ModelParams(N=8, alpha=1.5, s_override=0.2)
    assert duality_gap(p, 5, 2, 0.0) == 0.0
    lhs, rhs = duality_sides(p, 5, 2, 0.0)
    assert lhs == rhs == falling_factorial_ratio(5, 2, 8)
    assert duality_sides(p, 3, 0, 1.0) == (1.0, 1.0)


def test_duality_example():
    p = ModelParams(N=8, alpha=1.5, s_override=0.2)
    rep = duality_report(p, [7], [1, 2, 3], [0.1, 1.0, 10.0])
    assert rep.max_gap <= 1e-8
    assert len(rep.gap) == 9


@pytest.mark.parametrize("N", [4, 9, 12])
@pytest.mark.parametrize("alpha", [1.3, 1.7])
@pytest.mark.parametrize("s", [0.05, 0.2])
def test_duality_all_states(N, alpha, s):
    p = ModelParams(N=N, alpha=alpha, s_override=s)
    rep = duality_report(p, range(N + 1), [1, 2, 3], [0.1, 1.0, 10.0])
    assert rep.max_gap <= 1e-8


def test_neutral_duality():
    p = ModelParams.with_s(10, 1.6, 0.0)
    assert duality_report(p, [3, 9], [1, 2], [0.5, 5.0]).max_gap <= 1e-8


def test_long_time_limit_matches_stationary_expectation():
    p = ModelParams(N=10, alpha=1.5, s_override=0.3)
    pi = stationary_distribution(ASPChain(p)).weights
    expect = sum(w * falling_factorial_ratio(9, a, 10) for a, w in zip(range(1, 11), pi))
    _, rhs = duality_sides(p, 9, 1, 500.0, tol=1e-12)
    assert rhs == pytest.approx(expect, abs=1e-8)


def test_report_dict_and_guard():
    p = ModelParams(N=5, alpha=1.5, s_override=0.1)
    d = duality_report(p, [1], [1], [1.0]).to_dict()
    assert set(d) == {"N", "alpha", "s_N", "b", "max_gap", "points"}
    assert d["points"][0]["k"] == 1
    with pytest.raises(SizeError):
        duality_gap(ModelParams(N=31, alpha=1.5, s_override=0.1), 1, 1, 1.0)
