"""Gamma and Beta function machinery.

Every Gamma *ratio* is evaluated as the exponential of a log-Gamma
difference; raw Gamma values overflow double precision near 171 and the
rates of the ancestral process need arguments up to ~10^6.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "log_gamma",
    "gamma_ratio",
    "log_gamma_ratio",
    "log_beta",
    "gamma_frac_sum",
    "gamma_frac_sum_direct",
    "two_term_gamma_identity_residual",
    "LogGammaTable",
    "log_gamma_ratio_table",
]


def log_gamma(x):
    """Natural log of Gamma(x) for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    out = special.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def log_gamma_ratio(x, delta):
    """log(Gamma(x + delta) / Gamma(x)), vectorised."""
    x = np.asarray(x, dtype=float)
    xd = x + delta
    if np.any(~(x > 0)) or np.any(~(xd > 0)):
        raise DomainError(f"need x > 0 and x + delta > 0 (x={x!r}, delta={delta!r})")
    out = special.gammaln(xd) - special.gammaln(x)
    return float(out) if out.ndim == 0 else out


def gamma_ratio(x, delta):
    """Gamma(x + delta) / Gamma(x).

    For fixed ``delta > 0`` this is strictly increasing in ``x``.
    """
    out = np.exp(log_gamma_ratio(x, delta))
    return float(out) if np.ndim(out) == 0 else out


def log_beta(a, b):
    """log B(a, b) = log(Gamma(a) Gamma(b) / Gamma(a + b))."""
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.any(~(a_arr > 0)) or np.any(~(b_arr > 0)):
        raise DomainError(f"log_beta requires a, b > 0 (a={a!r}, b={b!r})")
    out = special.betaln(a_arr, b_arr)
    return float(out) if out.ndim == 0 else out


def _check_frac_sum_args(a, b, n):
    if not (a > -1 and b > -1):
        raise DomainError(f"gamma_frac_sum requires a, b > -1 (a={a}, b={b})")
    if int(n) != n or n < 1:
        raise DomainError(f"gamma_frac_sum requires an integer n >= 1, got {n}")


def gamma_frac_sum(a: float, b: float, n: int) -> float:
    """Closed form of sum_{j=1}^n Gamma(j + a) / Gamma(j + b).

    For ``b != a + 1`` the telescoping identity gives
    ``(Gamma(n+a+1)/Gamma(n+b) - [b != 0] Gamma(a+1)/Gamma(b)) / (a - b + 1)``;
    for ``b == a + 1`` the sum is harmonic, ``sum_j 1/(a + j)``.
    """
    _check_frac_sum_args(a, b, n)
    n = int(n)
    if b == a + 1:
        return float(math.fsum(1.0 / (a + j) for j in range(1, n + 1)))
    head = math.exp(special.gammaln(n + a + 1) - special.gammaln(n + b))
    # b in (-1, 0) makes Gamma(b) negative; rgamma carries the sign and is 0 at b = 0
    tail = 0.0 if b == 0 else math.exp(special.gammaln(a + 1)) * float(special.rgamma(b))
    return (head - tail) / (a - b + 1)


def gamma_frac_sum_direct(a: float, b: float, n: int) -> float:
    """Term-by-term evaluation of the same sum (reference implementation)."""
    _check_frac_sum_args(a, b, n)
    j = np.arange(1, int(n) + 1, dtype=float)
    return float(math.fsum(np.exp(special.gammaln(j + a) - special.gammaln(j + b))))


def two_term_gamma_identity_residual(x: int, alpha: float) -> float:
    """Relative residual of the two-factor Gamma convolution identity.

    LHS = sum_{y=1}^{x-1} Gamma(y+alpha-1)/Gamma(y) * Gamma(x-y-alpha+1)/Gamma(x-y+2)
    RHS = Gamma(2-alpha)/alpha * (x-1) Gamma(x+alpha-1)/Gamma(x+1)
    """
    if int(x) != x or x < 2:
        raise DomainError(f"x must be an integer >= 2, got {x}")
    x = int(x)
    y = np.arange(1, x, dtype=float)
    log_terms = (
        special.gammaln(y + alpha - 1) - special.gammaln(y)
        + special.gammaln(x - y - alpha + 1) - special.gammaln(x - y + 2)
    )
    lhs = math.fsum(np.exp(log_terms))
    log_rhs = (
        special.gammaln(2 - alpha) - math.log(alpha) + math.log(x - 1)
        + special.gammaln(x + alpha - 1) - special.gammaln(x + 1)
    )
    rhs = math.exp(log_rhs)
    return abs(lhs - rhs) / rhs


class LogGammaTable:
    """Values log Gamma(j + offset) for j = 1..length.

    Built from a single log-Gamma evaluation followed by the functional
    equation, so consecutive differences are exactly ``log(j + offset)``
    up to one rounding.
    """

    def __init__(self, offset: float, length: int):
        if 1 + offset <= 0:
            raise DomainError(f"offset must exceed -1, got {offset}")
        if length < 1:
            raise DomainError(f"length must be >= 1, got {length}")
        self.offset = float(offset)
        self.length = int(length)
        steps = np.log(np.arange(1, self.length, dtype=float) + self.offset)
        values = np.empty(self.length)
        values[0] = special.gammaln(1 + self.offset)
        np.cumsum(steps, out=values[1:])
        values[1:] += values[0]
        self.values = values
        self.values.setflags(write=False)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, j):
        """log Gamma(j + offset); ``j`` is 1-based (int or integer array)."""
        idx = np.asarray(j) - 1
        if np.any(idx < 0) or np.any(idx >= self.length):
            raise IndexError(f"index out of table range 1..{self.length}")
        out = self.values[idx]
        return float(out) if np.ndim(out) == 0 else out


def log_gamma_ratio_table(offset: float, delta: float, length: int) -> np.ndarray:
    """Array R with R[j] = log(Gamma(j + offset + delta) / Gamma(j + offset)).

    Index 0 is unused (NaN) so that ``R[j]`` is addressed by ``j = 1..length``.
    The recurrence accumulates ``log1p(delta / (j + offset))``, which keeps the
    table accurate where subtracting two large log-Gammas would not.
    """
    if 1 + offset <= 0 or 1 + offset + delta <= 0:
        raise DomainError(f"invalid offset/delta: {offset}, {delta}")
    out = np.empty(length + 1)
    out[0] = np.nan
    out[1] = special.gammaln(1 + offset + delta) - special.gammaln(1 + offset)
    if length > 1:
        j = np.arange(1, length, dtype=float)
        incr = np.log1p(delta / (j + offset))
        out[2:] = out[1] + np.cumsum(incr)
    return out
