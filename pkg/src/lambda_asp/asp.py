"""The Lambda-ancestral selection process (block-counting level).

State n in {1..N} counts potential ancestors.  Moves:

* n -> n+1 at rate n s_N (1 - n/N)          (selective branching)
* n -> y   at rate c_N q(n, y), 1 <= y < n  (multiple merger)

The chain is skip-free upwards, so its stationary law follows from a
one-pass cut balance: the flux n -> n+1 equals the flux from {n+1..N}
into {1..n}.  Both rate families used here factor as
``r(m, y) = m * lineage[y] * kernel[m - y]``, which turns the inflow into
each level into a dot product and makes the solve O(N^2) time, O(N) memory.
"""
from __future__ import annotations

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, NumericalCheckError
from .model import DerivedConstants, ModelParams, derive_constants
from .rates import QRateTables, q_rate, total_down_rate_unscaled

__all__ = [
    "SkipFreeChain",
    "ASPChain",
    "BSVariantChain",
    "StationaryDist",
    "q_rate",
    "total_down_rate",
    "up_rate",
    "bs_variant_down_rate",
    "stationary_distribution",
    "pi_N_dual",
    "simulate_asp",
]

log = logging.getLogger(__name__)

BALANCE_TOL = 1e-8
_RESCALE_AT = 1e250


def up_rate(n: int, params: ModelParams) -> float:
    return _up(n, params.N, params.s_N)


def _up(n, N, s):
    if not (1 <= n <= N):
        raise DomainError(f"state {n} outside 1..{N}")
    return n * s * (1.0 - n / N)


def total_down_rate(x: int, params: ModelParams) -> float:
    """c_N * sum_{y<x} q(x, y), via the closed form."""
    if not (1 <= x <= params.N):
        raise DomainError(f"state {x} outside 1..{params.N}")
    return params.c_N * total_down_rate_unscaled(x, params.alpha)


def bs_variant_down_rate(n: int, j: int, N: int) -> float:
    """Down rate n -> j of the alpha = 1 (Bolthausen-Sznitman) variant."""
    if N <= 2:
        raise DomainError(f"N must exceed 2, got {N}")
    if not (1 <= j < n):
        raise DomainError(f"need 1 <= j < n, got n={n}, j={j}")
    return n / ((n - j + 1) * (n - j) * math.log(N))


class SkipFreeChain:
    """Skip-free-upward chain on {1..N} with factorised down rates.

    Subclasses fill ``up`` and ``down_total`` (indexed 1..N, index 0 unused),
    ``lineage`` (indexed by target y) and ``kernel`` (indexed by jump size
    d = m - y >= 1).
    """

    N: int
    up: np.ndarray
    down_total: np.ndarray
    lineage: np.ndarray
    kernel: np.ndarray

    def down_rate(self, m: int, y: int) -> float:
        if not (1 <= y < m <= self.N):
            raise DomainError(f"need 1 <= y < m <= N, got m={m}, y={y}")
        return m * self.lineage[y] * self.kernel[m - y]

    def down_row(self, m: int) -> np.ndarray:
        """Rates m -> y for y = 1..m-1."""
        y = np.arange(1, m)
        return m * self.lineage[1:m] * self.kernel[m - y]

    def exit_rate(self, n: int) -> float:
        return self.up[n] + self.down_total[n]

    def inflow_from_above(self, y: int, weights: np.ndarray) -> float:
        """sum_{m>y} weights[m] * r(m, y) for a 1-based weight array."""
        N = self.N
        if y >= N:
            return 0.0
        m = np.arange(y + 1, N + 1)
        return float(self.lineage[y] * np.dot(m * weights[y + 1 :], self.kernel[1 : N - y + 1]))

    def generator_dense(self) -> np.ndarray:
        """Dense N x N rate matrix (row/column i <-> state i+1); small N only."""
        N = self.N
        Q = np.zeros((N, N))
        for n in range(1, N + 1):
            if n < N:
                Q[n - 1, n] = self.up[n]
            if n > 1:
                Q[n - 1, : n - 1] = self.down_row(n)
            Q[n - 1, n - 1] = -Q[n - 1].sum()
        return Q


class ASPChain(SkipFreeChain):
    """Lambda-ASP for Lambda = Beta(2-alpha, alpha)."""

    def __init__(self, params: ModelParams):
        self.params = params
        self.derived: DerivedConstants = derive_constants(params)
        N = params.N
        self.N = N
        self.tables = QRateTables(params.alpha, N)
        c_N = params.c_N
        n = np.arange(N + 1, dtype=float)
        self.up = n * params.s_N * (1.0 - n / N)
        self.up[0] = 0.0
        self.up[N] = 0.0
        self.down_total = c_N * self.tables.total(np.arange(N + 1))
        self.lineage = np.empty(N + 1)
        self.lineage[0] = np.nan
        self.lineage[1:] = c_N * np.exp(self.tables.log_norm + self.tables.log_lineage[1:])
        self.kernel = np.empty(N + 1)
        self.kernel[0] = np.nan
        self.kernel[1:] = np.exp(self.tables.log_merger[1:])

    @property
    def degenerate(self) -> bool:
        return not self.params.s_N > 0

    def q(self, x: int, y: int) -> float:
        return self.tables.q(x, y)


class BSVariantChain(SkipFreeChain):
    """ASP analogue for the Bolthausen-Sznitman case: c_N = 1/log N,
    s_N = (log N)^(-b) unless given, down rates c_N n / ((n-j+1)(n-j)).
    """

    def __init__(self, N: int, b: float | None = None, s_N: float | None = None):
        if int(N) != N or N <= 2:
            raise ConfigurationError(f"N must be an integer > 2, got {N}")
        if s_N is None:
            if b is None or not (0.0 < b < 1.0):
                raise ConfigurationError(f"b must lie in (0, 1), got {b}")
            s_N = math.log(N) ** (-b)
        self.N = N = int(N)
        self.s_N = float(s_N)
        self.c_N = 1.0 / math.log(N)
        n = np.arange(N + 1, dtype=float)
        self.up = n * self.s_N * (1.0 - n / N)
        self.up[0] = 0.0
        self.up[N] = 0.0
        self.lineage = np.full(N + 1, self.c_N)
        self.lineage[0] = np.nan
        d = np.arange(N + 1, dtype=float)
        with np.errstate(divide="ignore"):
            self.kernel = 1.0 / ((d + 1.0) * d)
        self.kernel[0] = np.nan
        # sum_{d=1}^{n-1} 1/(d(d+1)) telescopes to 1 - 1/n
        self.down_total = self.c_N * n * (1.0 - 1.0 / np.maximum(n, 1.0))
        self.down_total[0] = 0.0

    @property
    def degenerate(self) -> bool:
        return not self.s_N > 0


@dataclass(frozen=True)
class StationaryDist:
    weights: np.ndarray  # weights[i] = pi_{i+1}
    balance_residual: float
    mean: float
    degenerate: bool = False

    @property
    def states(self) -> np.ndarray:
        return np.arange(1, self.weights.size + 1)


def _balance_residual(chain: SkipFreeChain, pi: np.ndarray) -> float:
    """max_n |(pi Q)_n| / max exit rate, for a 1-based probability vector."""
    N = chain.N
    max_rate = max(float(np.max(chain.up[1:] + chain.down_total[1:])), 1e-300)
    worst = 0.0
    for n in range(1, N + 1):
        inflow = chain.inflow_from_above(n, pi)
        if n > 1:
            inflow += pi[n - 1] * chain.up[n - 1]
        flux = inflow - pi[n] * (chain.up[n] + chain.down_total[n])
        worst = max(worst, abs(flux))
    return worst / max_rate


def stationary_distribution(chain: SkipFreeChain, check: bool = True) -> StationaryDist:
    """Stationary law by downward cut-balance recursion.

    With C(n) the probability flux from {n+1..N} into {1..n},
    pi_n * up(n) = C(n) and
    C(n-1) = C(n) - inflow_from_above(n) + pi_n * down_total(n).
    Unnormalised weights start at pi_N = 1 and are rescaled whenever they
    grow past 1e250, so no overflow occurs for any N.
    """
    N = chain.N
    if chain.degenerate:
        log.warning("s_N = 0: state 1 is absorbing, returning the point mass at 1")
        w = np.zeros(N)
        w[0] = 1.0
        return StationaryDist(weights=w, balance_residual=0.0, mean=1.0, degenerate=True)

    pi = np.zeros(N + 1)
    mpi = np.zeros(N + 1)  # m * pi_m, kept alongside for the inflow dot products
    pi[N] = 1.0
    mpi[N] = N
    kernel = chain.kernel
    lineage = chain.lineage
    cut = chain.down_total[N]  # C(N-1)
    for n in range(N - 1, 0, -1):
        p = cut / chain.up[n]
        pi[n] = p
        mpi[n] = n * p
        if n > 1:
            inflow = lineage[n] * np.dot(mpi[n + 1 :], kernel[1 : N - n + 1])
            cut = cut - inflow + p * chain.down_total[n]
            if cut < 0.0:
                # cancellation can only produce tiny negative values; flux is non-negative
                cut = 0.0
        if p > _RESCALE_AT:
            pi[n:] /= p
            mpi[n:] /= p
            cut /= p
    total = math.fsum(pi[1:])
    pi /= total
    mean = float(math.fsum(np.arange(1, N + 1) * pi[1:]))
    residual = _balance_residual(chain, pi) if check else math.nan
    if check and not residual <= BALANCE_TOL:
        raise NumericalCheckError(f"global balance residual {residual:.3e} exceeds {BALANCE_TOL:g}")
    return StationaryDist(weights=pi[1:].copy(), balance_residual=residual, mean=mean)


def pi_N_dual(chain: SkipFreeChain, dist: StationaryDist | None = None) -> float:
    """Fixation probability through the duality: E[A_eq] / N."""
    if dist is None:
        dist = stationary_distribution(chain)
    return dist.mean / chain.N


class _RowCache:
    """LRU cache of normalised cumulative down-jump rows."""

    def __init__(self, chain: SkipFreeChain, maxsize: int):
        self.chain = chain
        self.maxsize = maxsize
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()

    def get(self, n: int) -> np.ndarray:
        row = self._rows.get(n)
        if row is not None:
            self._rows.move_to_end(n)
            return row
        row = np.cumsum(self.chain.down_row(n))
        row /= row[-1]
        self._rows[n] = row
        if len(self._rows) > self.maxsize:
            self._rows.popitem(last=False)
        return row


def simulate_asp(
    chain: SkipFreeChain,
    horizon: float,
    burn_in: float,
    rng: np.random.Generator,
    start: int = 1,
    cache_size: int = 512,
) -> float:
    """Time average of the block count over [burn_in, horizon].

    Event-driven: holding time Exp(exit rate); a down jump picks its target
    by inverse CDF over the (cached) row of rates.
    """
    if not (horizon > burn_in >= 0):
        raise ConfigurationError(f"need horizon > burn_in >= 0, got {horizon}, {burn_in}")
    if not (1 <= start <= chain.N):
        raise ConfigurationError(f"start state {start} outside 1..{chain.N}")
    rows = _RowCache(chain, cache_size)
    t = 0.0
    n = start
    area = 0.0
    while True:
        up = chain.up[n]
        total = up + chain.down_total[n]
        if total <= 0.0:
            dt = math.inf
        else:
            dt = rng.exponential(1.0 / total)
        t_next = t + dt
        lo = max(t, burn_in)
        hi = min(t_next, horizon)
        if hi > lo:
            area += n * (hi - lo)
        if t_next >= horizon:
            break
        t = t_next
        if rng.random() * total < up:
            n += 1
        else:
            row = rows.get(n)
            y = int(np.searchsorted(row, rng.random(), side="right")) + 1
            n = min(y, n - 1)
    return area / (horizon - burn_in)
