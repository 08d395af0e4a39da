"""Numerical check of the hypergeometric sampling duality

    E[ (X_t)_n / (N)_n | X_0 = k ] = E[ (k)_{A_t} / (N)_{A_t} | A_0 = n ]

between the wildtype-count chain X and the ancestral selection process A,
where (m)_j is the falling factorial.  Transient laws of both chains are
computed by uniformization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import stats

from .asp import ASPChain
from .errors import DomainError, SizeError
from .forward import build_frequency_generator
from .model import ModelParams

__all__ = [
    "falling_factorial_ratio",
    "transient_distribution",
    "duality_sides",
    "duality_gap",
    "DualityReport",
    "duality_report",
    "DUALITY_GUARD",
]

DUALITY_GUARD = 30
DEFAULT_TOL = 1e-10


def falling_factorial_ratio(k: int, n: int, N: int) -> float:
    """k(k-1)...(k-n+1) / (N(N-1)...(N-n+1)); 1 for n = 0, 0 for k < n."""
    if not (0 <= k <= N and 0 <= n <= N):
        raise DomainError(f"need 0 <= k, n <= N, got k={k}, n={n}, N={N}")
    if n > k:
        return 0.0
    out = 1.0
    for i in range(n):
        out *= (k - i) / (N - i)
    return out


def transient_distribution(generator, initial_state: int, t: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Law at time t of the chain with rate matrix ``generator`` started in
    ``initial_state`` (a row index), by uniformization.

    The Poisson series is cut where its upper tail drops below ``tol``, so
    the result has total mass >= 1 - tol.
    """
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    Q = np.asarray(generator, dtype=float)
    n = Q.shape[0]
    v = np.zeros(n)
    v[initial_state] = 1.0
    rate = float(np.max(-np.diag(Q)))
    if t == 0 or rate == 0.0:
        return v
    P = np.eye(n) + Q / rate
    mu = rate * t
    k_max = int(stats.poisson.isf(tol, mu)) + 1
    weights = stats.poisson.pmf(np.arange(k_max + 1), mu)
    out = weights[0] * v
    for k in range(1, k_max + 1):
        v = v @ P
        out += weights[k] * v
    return out


def _ffr_vector(k_values, n: int, N: int) -> np.ndarray:
    return np.array([falling_factorial_ratio(int(k), n, N) for k in k_values])


class _DualPair:
    """Both generators for one parameter set, built once and reused."""

    def __init__(self, params: ModelParams, max_N: int = DUALITY_GUARD):
        if params.N > max_N:
            raise SizeError(f"N={params.N} exceeds the duality guard {max_N}")
        self.params = params
        self.forward = build_frequency_generator(params).generator
        self.asp = ASPChain(params).generator_dense()

    def sides(self, k: int, n: int, t: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
        N = self.params.N
        if not (0 <= k <= N and 0 <= n <= N):
            raise DomainError(f"need 0 <= k, n <= N, got k={k}, n={n}")
        if n == 0:
            return 1.0, 1.0
        px = transient_distribution(self.forward, k, t, tol)
        lhs = float(np.dot(px, _ffr_vector(range(N + 1), n, N)))
        pa = transient_distribution(self.asp, n - 1, t, tol)
        rhs = float(np.dot(pa, np.array([falling_factorial_ratio(k, a, N) for a in range(1, N + 1)])))
        return lhs, rhs


def duality_sides(params: ModelParams, k: int, n: int, t: float, tol: float = DEFAULT_TOL):
    """(LHS, RHS) of the duality relation."""
    return _DualPair(params).sides(k, n, t, tol)


def duality_gap(params: ModelParams, k: int, n: int, t: float, tol: float = DEFAULT_TOL) -> float:
    lhs, rhs = duality_sides(params, k, n, t, tol)
    return abs(lhs - rhs)


@dataclass
class DualityReport:
    N: int
    alpha: float
    s_N: float
    b: float | None
    triples: list = field(default_factory=list)  # (k, n, t)
    lhs: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    gap: list = field(default_factory=list)

    @property
    def max_gap(self) -> float:
        return max(self.gap) if self.gap else 0.0

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "alpha": self.alpha,
            "s_N": self.s_N,
            "b": self.b,
            "max_gap": self.max_gap,
            "points": [
                {"k": k, "n": n, "t": t, "lhs": l, "rhs": r, "gap": g}
                for (k, n, t), l, r, g in zip(self.triples, self.lhs, self.rhs, self.gap)
            ],
        }


def duality_report(params: ModelParams, ks, ns, ts, tol: float = DEFAULT_TOL) -> DualityReport:
    pair = _DualPair(params)
    rep = DualityReport(N=params.N, alpha=params.alpha, s_N=params.s_N, b=params.b)
    for k, n, t in product(ks, ns, ts):
        lhs, rhs = pair.sides(k, n, t, tol)
        rep.triples.append((int(k), int(n), float(t)))
        rep.lhs.append(lhs)
        rep.rhs.append(rhs)
        rep.gap.append(abs(lhs - rhs))
    return rep
