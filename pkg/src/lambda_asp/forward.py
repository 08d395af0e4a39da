"""Forward-in-time two-type population model.

X_t counts wildtype individuals among N.  Neutral events: at rate
c_N p^-2 Lambda(dp) every individual joins with probability p, one
participant (uniform) becomes the parent of all the others.  Selective
events: each beneficial individual reproduces at rate s_N, its child
replacing a uniformly chosen individual.

Two routes to the fixation probability of the beneficial type are
provided: an exact linear solve on the aggregated frequency chain (small
N) and an event-driven individual-based simulator at the count level.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import linalg, special

from .errors import SizeError
from .model import ModelParams
from .offspring import AliasTable
from .rates import QRateTables

__all__ = [
    "FrequencyChain",
    "McEstimate",
    "Absorbed",
    "DENSE_GUARD",
    "neutral_config_rate",
    "build_frequency_generator",
    "fixation_prob_exact",
    "simulate_forward",
    "fixation_prob_mc",
    "mix_seed",
]

DENSE_GUARD = 400


def _log_event_kernel(k, N, alpha):
    """log of int p^(k-2) (1-p)^(N-k) Lambda(dp) for Lambda = Beta(2-alpha, alpha)."""
    return (
        special.gammaln(k - alpha) + special.gammaln(N - k + alpha) - special.gammaln(N)
        - special.gammaln(2.0 - alpha) - special.gammaln(alpha)
    )


def _log_binom(n, k):
    return special.gammaln(n + 1.0) - special.gammaln(k + 1.0) - special.gammaln(n - k + 1.0)


def neutral_config_rate(x: int, i: int, j: int, params: ModelParams) -> float:
    """Rate of a neutral event with exactly i wildtype and j beneficial participants.

    Given such an event the parent is wildtype with probability i/(i+j)
    (new state x + j), otherwise beneficial (new state x - i).  Events with
    fewer than two participants change nothing and have rate 0 here.
    """
    N = params.N
    if not (0 <= x <= N and 0 <= i <= x and 0 <= j <= N - x):
        raise ValueError(f"invalid configuration x={x}, i={i}, j={j} for N={N}")
    k = i + j
    if k < 2:
        return 0.0
    return params.c_N * math.exp(
        _log_binom(x, i) + _log_binom(N - x, j) + _log_event_kernel(k, N, params.alpha)
    )


@dataclass(frozen=True)
class FrequencyChain:
    params: ModelParams
    generator: np.ndarray  # (N+1) x (N+1), row/col index = wildtype count

    @property
    def N(self) -> int:
        return self.params.N


def build_frequency_generator(
    params: ModelParams,
    max_N: int = DENSE_GUARD,
    include_neutral: bool = True,
    include_selection: bool = True,
) -> FrequencyChain:
    """Aggregate all neutral configurations and selective replacements into
    the generator of X on {0..N}; 0 and N are absorbing.
    """
    N = params.N
    if N > max_N:
        raise SizeError(
            f"N={N} exceeds the exact-generator guard {max_N}; use fixation_prob_mc instead"
        )
    Q = np.zeros((N + 1, N + 1))
    if include_neutral:
        log_kernel = np.full(N + 1, -np.inf)
        kk = np.arange(2, N + 1, dtype=float)
        log_kernel[2:] = _log_event_kernel(kk, N, params.alpha)
        for x in range(1, N):
            i = np.arange(x + 1, dtype=float)[:, None]
            j = np.arange(N - x + 1, dtype=float)[None, :]
            k = (i + j).astype(int)
            with np.errstate(invalid="ignore"):
                rate = params.c_N * np.exp(
                    _log_binom(x, i) + _log_binom(N - x, j) + log_kernel[k]
                )
            rate[k < 2] = 0.0
            kf = np.where(k >= 2, k, 1).astype(float)
            w_parent = rate * (i / kf)  # -> x + j
            b_parent = rate * (j / kf)  # -> x - i
            to_up = np.bincount(np.broadcast_to(x + j, k.shape).ravel().astype(int),
                                weights=w_parent.ravel(), minlength=N + 1)
            to_down = np.bincount(np.broadcast_to(x - i, k.shape).ravel().astype(int),
                                  weights=b_parent.ravel(), minlength=N + 1)
            row = to_up + to_down
            row[x] = 0.0
            Q[x] += row
    if include_selection and params.s_N > 0:
        x = np.arange(1, N)
        Q[x, x - 1] += params.s_N * x * (N - x) / N
    np.fill_diagonal(Q, 0.0)
    Q[np.diag_indices(N + 1)] = -Q.sum(axis=1)
    return FrequencyChain(params=params, generator=Q)


def fixation_prob_exact(chain: FrequencyChain, x0: int) -> float:
    """P(X hits 0 before N | X_0 = x0): the beneficial type fixes."""
    N = chain.N
    if not (0 <= x0 <= N):
        raise ValueError(f"x0 must lie in 0..{N}, got {x0}")
    if x0 == 0:
        return 1.0
    if x0 == N:
        return 0.0
    Q = chain.generator
    transient = slice(1, N)
    h = linalg.solve(Q[transient, transient], -Q[transient, 0])
    return float(h[x0 - 1])


def absorption_probabilities(chain: FrequencyChain) -> np.ndarray:
    """Vector over x = 0..N of P(beneficial fixation | X_0 = x)."""
    N = chain.N
    Q = chain.generator
    out = np.empty(N + 1)
    out[0], out[N] = 1.0, 0.0
    out[1:N] = linalg.solve(Q[1:N, 1:N], -Q[1:N, 0])
    return out


class Absorbed(enum.Enum):
    BENEFICIAL_FIXED = 1
    WILDTYPE_FIXED = 0


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo fixation frequency.

    ``std_error`` is the binomial sqrt(p(1-p)/R); with R = 1 it is 0.
    """

    point: float
    std_error: float
    replicates: int
    seed: int


_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, index: int) -> int:
    """Seed of replicate ``index``: splitmix64(splitmix64(master) ^ index) mod 2^32."""
    return _splitmix64(_splitmix64(master_seed & _MASK64) ^ (index & _MASK64)) & 0xFFFFFFFF


@numba.njit(cache=True)
def _run_replicates(seeds, N, x0, s, neutral_rate, fam_prob, fam_alias, fam_values):
    out = np.empty(seeds.size, dtype=np.int8)
    n_fam = fam_prob.size
    for r in range(seeds.size):
        np.random.seed(seeds[r])
        x = x0
        while 0 < x < N:
            total = neutral_rate + s * (N - x)
            if np.random.random() * total < neutral_rate:
                parent_wild = 1 if np.random.random() * N < x else 0
                col = np.random.randint(0, n_fam)
                if np.random.random() < fam_prob[col]:
                    k = fam_values[col]
                else:
                    k = fam_values[fam_alias[col]]
                good = x - parent_wild
                bad = N - 1 - good
                if good == 0:
                    hit = 0
                elif bad == 0:
                    hit = k - 1
                else:
                    hit = np.random.hypergeometric(good, bad, k - 1)
                x = x - hit + parent_wild * (k - 1)
            else:
                # beneficial parent; victim uniform over all N (itself included)
                if np.random.random() * N < x:
                    x -= 1
        out[r] = 1 if x == 0 else 0
    return out


class _ForwardKernelInputs:
    """Rates and family-size alias table shared by all replicates."""

    def __init__(self, params: ModelParams):
        N = params.N
        tables = QRateTables(params.alpha, N)
        # per-individual parent-of-k rate (c_N/N) q(N, N-k+1); summed over k and
        # individuals this is c_N * sum_y q(N, y)
        k = np.arange(2, N + 1)
        fam = np.atleast_1d(tables.q(N, N - k + 1))
        self.neutral_rate = params.c_N * float(tables.total(N))
        table = AliasTable(fam, k)
        self.fam_prob = table.prob.astype(np.float64)
        self.fam_alias = table.alias.astype(np.int64)
        self.fam_values = table.values.astype(np.int64)


def _seed_array(master_seed: int, replicates: int) -> np.ndarray:
    return np.array([mix_seed(master_seed, i) for i in range(replicates)], dtype=np.uint32)


def _simulate(params: ModelParams, x0: int, seeds: np.ndarray) -> np.ndarray:
    N = params.N
    if not (0 <= x0 <= N):
        raise ValueError(f"x0 must lie in 0..{N}, got {x0}")
    inp = _ForwardKernelInputs(params)
    return _run_replicates(
        seeds.astype(np.int64), N, int(x0), float(params.s_N), inp.neutral_rate,
        inp.fam_prob, inp.fam_alias, inp.fam_values,
    )


def simulate_forward(params: ModelParams, x0: int, seed: int) -> Absorbed:
    """One run of the count-level individual-based model until absorption."""
    res = _simulate(params, x0, np.array([seed & 0xFFFFFFFF], dtype=np.uint32))
    return Absorbed.BENEFICIAL_FIXED if res[0] == 1 else Absorbed.WILDTYPE_FIXED


def fixation_prob_mc(params: ModelParams, x0: int, replicates: int, master_seed: int) -> McEstimate:
    """Fraction of ``replicates`` runs in which the beneficial type fixes.

    Replicate i is seeded with ``mix_seed(master_seed, i)``.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    res = _simulate(params, x0, _seed_array(master_seed, replicates))
    p = float(res.mean())
    se = math.sqrt(p * (1.0 - p) / replicates)
    return McEstimate(point=p, std_error=se, replicates=replicates, seed=master_seed)
