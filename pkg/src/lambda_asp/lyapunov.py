"""Drift (Lyapunov) analysis of the ancestral selection process.

For any test function g, stationarity gives pi L g = 0, hence

    min_x (L g(x) + x) <= E[A_eq] <= max_x (L g(x) + x).

A linear g gives the upper bound, a two-power g = a1 x^b1 + a2 x^b2 the
lower one; both extremes, divided by the drift balance point d_N, tend to 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .asp import ASPChain, StationaryDist
from .errors import ConfigurationError, DomainError, SizeError

__all__ = [
    "DriftProfile",
    "apply_generator",
    "apply_generator_all",
    "generator_linear_closed_form",
    "linear_down_drift",
    "linear_down_drift_direct",
    "power_drift_scan",
    "upper_bound_check",
    "upper_bound_maximizer",
    "lower_bound_coefficients",
    "lower_bound_check",
    "default_betas",
    "gen_beta_constants",
    "sandwich_report",
    "LOWER_BOUND_GUARD",
]

LOWER_BOUND_GUARD = 20_000


@dataclass(frozen=True)
class DriftProfile:
    tag: str  # "linear" or "power-pair"
    values: np.ndarray  # L g(x) + x for x = 1..N
    d_N: float
    extreme: float  # max (linear) or min (power-pair) of values
    arg: int
    coefficients: tuple

    @property
    def extreme_over_dN(self) -> float:
        return self.extreme / self.d_N


def _as_state_array(g, N: int) -> np.ndarray:
    """1-based array of g over {1..N} (index 0 unused)."""
    if callable(g):
        vals = np.asarray(g(np.arange(1, N + 1, dtype=float)), dtype=float)
    else:
        vals = np.asarray(g, dtype=float)
    if vals.shape != (N,):
        raise DomainError(f"g must provide N={N} values, got shape {vals.shape}")
    out = np.empty(N + 1)
    out[0] = np.nan
    out[1:] = vals
    return out


def _apply(gv: np.ndarray, x: int, chain: ASPChain) -> float:
    N = chain.N
    up = chain.up[x] * (gv[x + 1] - gv[x]) if x < N else 0.0
    if x == 1:
        return up
    down = float(np.dot(chain.down_row(x), gv[1:x] - gv[x]))
    return up + down


def apply_generator(g, x: int, chain: ASPChain) -> float:
    """(L g)(x) by direct summation over all down jumps.

    ``g`` is either a length-N array of values at states 1..N or a
    vectorised callable.
    """
    if not (1 <= x <= chain.N):
        raise DomainError(f"x must lie in 1..{chain.N}, got {x}")
    return _apply(_as_state_array(g, chain.N), x, chain)


def apply_generator_all(g, chain: ASPChain) -> np.ndarray:
    gv = _as_state_array(g, chain.N)
    return np.array([_apply(gv, x, chain) for x in range(1, chain.N + 1)])


def linear_down_drift(x, alpha: float):
    """sum_{y<x} (x-y) q(x, y) = x (Gamma(x+alpha)/Gamma(x+1) - Gamma(alpha+1)) / ((alpha-1) Gamma(alpha+1))."""
    x = np.asarray(x, dtype=float)
    ga1 = math.gamma(alpha + 1.0)
    ratio = np.exp(special.gammaln(x + alpha) - special.gammaln(x + 1.0))
    out = x * (ratio - ga1) / ((alpha - 1.0) * ga1)
    return float(out) if out.ndim == 0 else out


def linear_down_drift_direct(x: int, chain: ASPChain) -> float:
    """Same quantity by summing the row of q (unscaled by c_N)."""
    if x < 2:
        return 0.0
    y = np.arange(1, x)
    return float(math.fsum(chain.tables.q(x, y) * (x - y)))


def generator_linear_closed_form(a: float, x, chain: ASPChain):
    """(L g)(x) for g(x) = a x, in closed form."""
    p = chain.params
    x_arr = np.asarray(x, dtype=float)
    out = a * p.s_N * (1.0 - x_arr / p.N) * x_arr - a * p.c_N * np.asarray(linear_down_drift(x_arr, p.alpha))
    return float(out) if np.ndim(out) == 0 else out


def power_drift_scan(beta: float, chain: ASPChain, x_max: int) -> np.ndarray:
    """R(x) = |sum_y q(x,y)(y^beta - x^beta) + beta c_alpha x^beta Gamma(x+alpha)/Gamma(x+1)| / x^beta
    for x = 2..x_max (entry i <-> x = i + 2)."""
    if not (0.0 < beta < 1.0):
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    if x_max > chain.N:
        raise DomainError(f"x_max={x_max} exceeds N={chain.N}")
    alpha = chain.params.alpha
    c_alpha = chain.params.c_alpha
    out = np.empty(max(x_max - 1, 0))
    for x in range(2, x_max + 1):
        y = np.arange(1, x, dtype=float)
        xb = float(x) ** beta
        s = float(np.dot(chain.tables.row(x), y**beta - xb))
        lead = beta * c_alpha * xb * math.exp(special.gammaln(x + alpha) - special.gammaln(x + 1.0))
        out[x - 2] = abs(s + lead) / xb
    return out


def upper_bound_check(chain: ASPChain) -> DriftProfile:
    """max_x (L g(x) + x) for g(x) = x / ((alpha-1) s_N)."""
    p = chain.params
    if not p.s_N > 0:
        raise ConfigurationError("upper bound check needs s_N > 0")
    a = 1.0 / ((p.alpha - 1.0) * p.s_N)
    x = np.arange(1, p.N + 1, dtype=float)
    values = generator_linear_closed_form(a, x, chain) + x
    i = int(np.argmax(values))
    return DriftProfile("linear", values, chain.derived.d_N, float(values[i]), i + 1, (a,))


def upper_bound_maximizer(chain: ASPChain) -> float:
    """Maximiser ((a s_N + 1) / (a alpha c_alpha c_N))^(1/(alpha-1)) of the smooth majorant."""
    p = chain.params
    a = 1.0 / ((p.alpha - 1.0) * p.s_N)
    return ((a * p.s_N + 1.0) / (a * p.alpha * p.c_alpha * p.c_N)) ** (1.0 / (p.alpha - 1.0))


def default_betas(alpha: float) -> tuple[float, float]:
    return 0.4 * (alpha - 1.0), 0.8 * (alpha - 1.0)


def lower_bound_coefficients(chain: ASPChain, beta1: float, beta2: float) -> tuple[float, float]:
    d = chain.derived.d_N
    s = chain.params.s_N
    a1 = d / ((2.0**beta1 - 1.0) * s)
    a2 = -beta1 * a1 * d**beta1 / (beta2 * d**beta2)
    return a1, a2


def lower_bound_check(chain: ASPChain, beta1: float | None = None, beta2: float | None = None,
                      max_N: int = LOWER_BOUND_GUARD) -> DriftProfile:
    """min_x (L g(x) + x) for g(x) = a1 x^beta1 + a2 x^beta2, by direct summation."""
    p = chain.params
    if beta1 is None or beta2 is None:
        beta1, beta2 = default_betas(p.alpha)
    if not (0.0 < beta1 < beta2 < p.alpha - 1.0):
        raise ConfigurationError(f"need 0 < beta1 < beta2 < alpha - 1, got {beta1}, {beta2}")
    if not p.s_N > 0:
        raise ConfigurationError("lower bound check needs s_N > 0")
    if p.N > max_N:
        raise SizeError(f"N={p.N} exceeds the direct-summation guard {max_N}")
    a1, a2 = lower_bound_coefficients(chain, beta1, beta2)

    def g(x):
        return a1 * x**beta1 + a2 * x**beta2

    x = np.arange(1, p.N + 1, dtype=float)
    values = apply_generator_all(g, chain) + x
    i = int(np.argmin(values))
    return DriftProfile("power-pair", values, chain.derived.d_N, float(values[i]), i + 1,
                        (a1, beta1, a2, beta2))


def gen_beta_constants(beta: float, chain: ASPChain, a: float = 1.0) -> tuple[float, float]:
    """Smallest c1, c2 >= 0 with
    M(x) - c1 x^beta <= L(a x^beta)(x) <= M(x) + c2 x^beta on 1..N, where
    M(x) = a s_N (1-x/N) x ((x+1)^beta - x^beta) - a c_N c_alpha beta x^beta Gamma(x+alpha)/Gamma(x+1).
    Returned in units of a c_N.
    """
    p = chain.params
    x = np.arange(1, p.N + 1, dtype=float)
    lg = apply_generator_all(lambda z: a * z**beta, chain)
    ratio = np.exp(special.gammaln(x + p.alpha) - special.gammaln(x + 1.0))
    main = (a * p.s_N * (1.0 - x / p.N) * x * ((x + 1.0) ** beta - x**beta)
            - a * p.c_N * p.c_alpha * beta * x**beta * ratio)
    dev = (lg - main) / x**beta / (a * p.c_N)
    return max(float(np.max(-dev)), 0.0), max(float(np.max(dev)), 0.0)


def sandwich_report(chain: ASPChain, dist: StationaryDist, beta1: float | None = None,
                    beta2: float | None = None, rtol: float = 1e-9) -> dict:
    """Both drift bounds against the exact stationary mean."""
    up = upper_bound_check(chain)
    lo = lower_bound_check(chain, beta1, beta2)
    slack = rtol * max(abs(dist.mean), 1.0)
    ok = (lo.extreme <= dist.mean + slack) and (dist.mean <= up.extreme + slack)
    return {
        "d_N": chain.derived.d_N,
        "E_A_eq": dist.mean,
        "max_over_dN": up.extreme_over_dN,
        "argmax": up.arg,
        "min_over_dN": lo.extreme_over_dN,
        "argmin": lo.arg,
        "beta1": lo.coefficients[1],
        "beta2": lo.coefficients[3],
        "sandwich_ok": bool(ok),
    }
