"""Block-counting jump rates q(x, y) of the Beta(2-alpha, alpha)-coalescent.

q(x, y) is the rate at which x lineages merge down to y (an (x-y+1)-merger):

    q(x, y) = x / (Gamma(2-alpha) Gamma(alpha))
              * Gamma(y+alpha-1)/Gamma(y) * Gamma(x-y-alpha+1)/Gamma(x-y+2)

Both Gamma ratios are tabulated once, so a single rate costs O(1) and a
whole row q(x, .) is a vector expression.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError
from .special_functions import log_gamma_ratio_table

__all__ = ["QRateTables", "q_rate", "total_down_rate_unscaled"]


class QRateTables:
    """Precomputed log-Gamma ratios for q(x, y) with 1 <= y < x <= n_max."""

    def __init__(self, alpha: float, n_max: int):
        if not (1.0 < alpha < 2.0):
            raise DomainError(f"alpha must lie in (1, 2), got {alpha}")
        self.alpha = float(alpha)
        self.n_max = int(n_max)
        # lineage factor: log Gamma(y+alpha-1)/Gamma(y), y = 1..n_max
        self.log_lineage = log_gamma_ratio_table(0.0, alpha - 1.0, self.n_max)
        # merger-size factor: log Gamma(d+1-alpha)/Gamma(d+2), d = x - y = 1..n_max
        self.log_merger = -log_gamma_ratio_table(1.0 - alpha, 1.0 + alpha, self.n_max)
        self.log_norm = -(special.gammaln(2.0 - alpha) + special.gammaln(alpha))
        self.log_gamma_alpha_p1 = float(special.gammaln(alpha + 1.0))

    def _check(self, x):
        if np.any(np.asarray(x) > self.n_max):
            raise DomainError(f"x exceeds table size {self.n_max}")

    def log_q(self, x, y):
        self._check(x)
        x = np.asarray(x)
        y = np.asarray(y)
        return np.log(x) + self.log_norm + self.log_lineage[y] + self.log_merger[x - y]

    def q(self, x, y):
        out = np.exp(self.log_q(x, y))
        return float(out) if np.ndim(out) == 0 else out

    def row(self, x: int) -> np.ndarray:
        """Array of q(x, y) for y = 1..x-1 (empty for x = 1)."""
        self._check(x)
        y = np.arange(1, x)
        return np.exp(math.log(x) + self.log_norm + self.log_lineage[1:x] + self.log_merger[x - y])

    def column(self, y: int, x_max: int) -> np.ndarray:
        """Array of q(x, y) for x = y+1..x_max."""
        self._check(x_max)
        x = np.arange(y + 1, x_max + 1)
        return np.exp(np.log(x) + self.log_norm + self.log_lineage[y] + self.log_merger[1 : x_max - y + 1])

    def total(self, x):
        """sum_{y<x} q(x, y) in closed form: x(x-1) Gamma(x+alpha-1) / (Gamma(alpha+1) Gamma(x+1))."""
        self._check(x)
        x = np.asarray(x)
        with np.errstate(divide="ignore"):
            out = np.where(
                x >= 2,
                np.exp(np.log(np.maximum(x - 1, 1)) + self.log_lineage[np.maximum(x, 1)] - self.log_gamma_alpha_p1),
                0.0,
            )
        return float(out) if out.ndim == 0 else out


def q_rate(x: int, y: int, alpha: float) -> float:
    """Merger rate q(x, y), 1 <= y < x, evaluated through log-Gamma values."""
    if int(x) != x or int(y) != y or not (1 <= y < x):
        raise DomainError(f"q_rate needs integers 1 <= y < x, got x={x}, y={y}")
    if not (1.0 < alpha < 2.0):
        raise DomainError(f"alpha must lie in (1, 2), got {alpha}")
    log_val = (
        math.log(x)
        - special.gammaln(2.0 - alpha) - special.gammaln(alpha)
        + special.gammaln(y + alpha - 1.0) - special.gammaln(y)
        + special.gammaln(x - y - alpha + 1.0) - special.gammaln(x - y + 2.0)
    )
    return math.exp(log_val)


def total_down_rate_unscaled(x: int, alpha: float) -> float:
    """sum_{y=1}^{x-1} q(x, y) by the closed form (0 for x = 1)."""
    if x < 2:
        return 0.0
    return math.exp(
        math.log(x) + math.log(x - 1)
        + special.gammaln(x + alpha - 1.0) - special.gammaln(alpha + 1.0) - special.gammaln(x + 1.0)
    )
