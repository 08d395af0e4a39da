"""Model parameters, derived constants and closed-form predictions.

The neutral intensity prefactor is pinned to the exact value
``c_N = (alpha-1) Gamma(alpha) N^(1-alpha)`` and the selection strength to
``s_N = c_sel N^(-b)`` (or an explicit override), so that every finite-N
quantity in the package is reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigurationError, NoRootError

__all__ = [
    "ModelParams",
    "DerivedConstants",
    "derive_constants",
    "d_N_root",
    "d_N_asymptotic",
    "asymptotic_pi",
    "asymptotic_pi_from",
    "bs_heuristic_pi",
]

_BISECTION_MAX_ITER = 200


@dataclass(frozen=True)
class ModelParams:
    """Population size, Beta-coalescent index and selection strength.

    Either ``b`` (moderate-selection exponent, ``0 < b < alpha - 1``) or an
    explicit ``s_override >= 0`` must be given; the override wins when both
    are present and is how neutral (``s_N = 0``) cases are expressed.
    """

    N: int
    alpha: float
    b: Optional[float] = None
    c_sel: float = 1.0
    s_override: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 2:
            raise ConfigurationError(f"N must be an integer >= 2, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not (1.0 < self.alpha < 2.0):
            raise ConfigurationError(f"alpha must lie in (1, 2), got {self.alpha!r}")
        if not self.c_sel > 0:
            raise ConfigurationError(f"c_sel must be > 0, got {self.c_sel!r}")
        if self.s_override is not None:
            if not (self.s_override >= 0 and math.isfinite(self.s_override)):
                raise ConfigurationError(f"s_N override must be >= 0, got {self.s_override!r}")
        elif self.b is None:
            raise ConfigurationError("either b or an explicit s_N must be given")
        if self.b is not None and not (0.0 < self.b < self.alpha - 1.0):
            raise ConfigurationError(
                f"b must lie in (0, alpha - 1) = (0, {self.alpha - 1:g}), got {self.b!r}"
            )

    @classmethod
    def with_s(cls, N: int, alpha: float, s_N: float) -> "ModelParams":
        return cls(N=N, alpha=alpha, s_override=s_N)

    @property
    def s_N(self) -> float:
        if self.s_override is not None:
            return float(self.s_override)
        return self.c_sel * self.N ** (-self.b)

    @property
    def c_N(self) -> float:
        a = self.alpha
        return (a - 1.0) * math.gamma(a) * self.N ** (1.0 - a)

    @property
    def c_alpha(self) -> float:
        a = self.alpha
        return 1.0 / ((a - 1.0) * math.gamma(a + 1.0))


@dataclass(frozen=True)
class DerivedConstants:
    c_N: float
    s_N: float
    c_alpha: float
    d_N: float  # NaN when s_N == 0 (no balance point)


def derive_constants(params: ModelParams) -> DerivedConstants:
    d = d_N_root(params) if params.s_N > 0 else math.nan
    return DerivedConstants(c_N=params.c_N, s_N=params.s_N, c_alpha=params.c_alpha, d_N=d)


def _drift_balance(x: float, params: ModelParams) -> float:
    return params.s_N * (1.0 - x / params.N) - params.c_alpha * params.c_N * x ** (params.alpha - 1.0)


def d_N_root(params: ModelParams, rtol: float = 1e-12) -> float:
    """Root in (0, N) of s_N (1 - x/N) - c_alpha c_N x^(alpha-1).

    The left side is strictly decreasing, positive at 0+ and negative at N,
    so plain bisection converges unconditionally.
    """
    if not params.s_N > 0:
        raise NoRootError("drift balance point undefined for s_N = 0")
    lo, hi = 0.0, float(params.N)
    for _ in range(_BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if _drift_balance(mid, params) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


def d_N_asymptotic(params: ModelParams) -> float:
    """Leading-order balance point (s_N / (c_alpha c_N))^(1/(alpha-1))."""
    return (params.s_N / (params.c_alpha * params.c_N)) ** (1.0 / (params.alpha - 1.0))


def asymptotic_pi(params: ModelParams) -> float:
    """Leading-order fixation probability (alpha s_N)^(1/(alpha-1))."""
    return asymptotic_pi_from(params.alpha, params.s_N)


def asymptotic_pi_from(alpha: float, s_N: float) -> float:
    return (alpha * s_N) ** (1.0 / (alpha - 1.0))


def bs_heuristic_pi(N: int, b: float) -> float:
    """Heuristic fixation probability N^(s_N - 1), s_N = (log N)^(-b), in the
    Bolthausen-Sznitman (alpha = 1) case.

    This is a drift-balance heuristic, not a proven asymptotic.
    """
    if int(N) != N or N < 3:
        raise ConfigurationError(f"N must be an integer >= 3, got {N!r}")
    if not (0.0 < b < 1.0):
        raise ConfigurationError(f"b must lie in (0, 1), got {b!r}")
    log_n = math.log(N)
    s_N = log_n ** (-b)
    return math.exp((s_N - 1.0) * log_n)
