"""Offspring laws of the neutral reproduction events and the Galton-Watson
approximation of an early beneficial lineage.

A focal individual, given that it takes part in a non-trivial neutral
event, either is the parent of the event's k participants (k = 2..N) or is
among the replaced ones (0 offspring).  Its weights are

    p_k^(N) = q(N, N-k+1) / (N c~_N),     p_0^(N) = 1 - sum_k p_k^(N),

with c~_N the per-individual participation rate.  As N grows these tend to
the law with generating function (1-z)^alpha / alpha + z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConfigurationError, DomainError, NumericalCheckError
from .rates import QRateTables

__all__ = [
    "AliasTable",
    "CdfSampler",
    "OffspringLaw",
    "c_tilde",
    "build_offspring_law",
    "limit_pk",
    "gen_fn_tilde",
    "gen_fn_selective",
    "gw_survival",
]

ALIAS_MAX_SUPPORT = 100_000
_P0_CROSSCHECK_TOL = 1e-9


class AliasTable:
    """Walker/Vose alias table for O(1) draws from a finite law."""

    def __init__(self, probs, values=None):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0):
            raise DomainError("probabilities must be a non-empty, non-negative vector")
        n = p.size
        scaled = p * (n / p.sum())
        prob = np.ones(n)
        alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers are 1 up to rounding
        self.prob = prob
        self.alias = alias
        self.values = np.arange(n) if values is None else np.asarray(values)

    def sample(self, rng: np.random.Generator, size=None):
        n = self.prob.size
        col = rng.integers(0, n, size=size)
        u = rng.random(size=size)
        idx = np.where(u < self.prob[col], col, self.alias[col])
        return self.values[idx]


class CdfSampler:
    """Inverse-CDF sampling by binary search on the cumulative weights."""

    def __init__(self, probs, values=None):
        p = np.asarray(probs, dtype=float)
        self.cdf = np.cumsum(p)
        self.cdf /= self.cdf[-1]
        self.values = np.arange(p.size) if values is None else np.asarray(values)

    def sample(self, rng: np.random.Generator, size=None):
        u = rng.random(size=size)
        idx = np.minimum(np.searchsorted(self.cdf, u, side="right"), self.cdf.size - 1)
        return self.values[idx]


def _make_sampler(probs, values):
    if len(probs) <= ALIAS_MAX_SUPPORT:
        return AliasTable(probs, values)
    return CdfSampler(probs, values)


def c_tilde(N: int, alpha: float) -> float:
    """Exact per-individual rate of taking part in a non-trivial neutral event
    (time unit of the unscaled Poisson construction).
    """
    if int(N) != N or N < 2:
        raise DomainError(f"N must be an integer >= 2, got {N}")
    ga1 = math.gamma(alpha + 1.0)
    r1 = math.exp(special.gammaln(N + alpha) - special.gammaln(N + 1.0))
    r2 = math.exp(special.gammaln(N + alpha - 1.0) - special.gammaln(N))
    r3 = math.exp(special.gammaln(N + alpha - 1.0) - special.gammaln(N + 1.0))
    return r1 / ((alpha - 1.0) * ga1) - 1.0 / (alpha - 1.0) + (r2 - r3) / ga1


def _p0_closed_form(N: int, alpha: float, ct: float) -> float:
    r1 = math.exp(special.gammaln(N + alpha) - special.gammaln(N + 1.0))
    return (r1 / ((alpha - 1.0) * math.gamma(alpha + 1.0)) - 1.0 / (alpha - 1.0)) / ct


def limit_pk(k, alpha: float):
    """Limiting weights (alpha-1)/Gamma(2-alpha) * Gamma(k-alpha)/Gamma(k+1), k >= 2."""
    k = np.asarray(k, dtype=float)
    out = np.exp(
        math.log(alpha - 1.0) - special.gammaln(2.0 - alpha)
        + special.gammaln(k - alpha) - special.gammaln(k + 1.0)
    )
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class OffspringLaw:
    N: int
    alpha: float
    c_tilde: float
    p0: float
    p0_closed_form: float
    pk: np.ndarray  # index i <-> k = i + 2
    log_pk: np.ndarray
    sampler: object = field(repr=False)
    family_sampler: object = field(repr=False)

    @property
    def k(self) -> np.ndarray:
        return np.arange(2, self.N + 1)

    @property
    def family_size_probs(self) -> np.ndarray:
        """Law of the family size k given that the focal individual is the parent."""
        return self.pk / self.pk.sum()

    def prob(self, k: int) -> float:
        if k == 0:
            return self.p0
        if k == 1 or k > self.N or k < 0:
            return 0.0
        return float(self.pk[k - 2])

    def sample(self, rng: np.random.Generator, size=None):
        """Draw offspring numbers (values in {0, 2, ..., N})."""
        return self.sampler.sample(rng, size)

    def sample_family_size(self, rng: np.random.Generator, size=None):
        return self.family_sampler.sample(rng, size)


def build_offspring_law(N: int, alpha: float) -> OffspringLaw:
    if int(N) != N or N < 2:
        raise ConfigurationError(f"N must be an integer >= 2, got {N}")
    if not (1.0 < alpha < 2.0):
        raise ConfigurationError(f"alpha must lie in (1, 2), got {alpha}")
    N = int(N)
    ct = c_tilde(N, alpha)
    tables = QRateTables(alpha, N)
    k = np.arange(2, N + 1)
    log_pk = tables.log_q(N, N - k + 1) - math.log(N) - math.log(ct)
    pk = np.exp(log_pk)
    p0 = 1.0 - math.fsum(pk)
    p0_cf = _p0_closed_form(N, alpha, ct)
    if abs(p0 - p0_cf) > _P0_CROSSCHECK_TOL:
        raise NumericalCheckError(
            f"p0 routes disagree for N={N}, alpha={alpha}: {p0!r} vs {p0_cf!r}"
        )
    values = np.concatenate(([0], k))
    probs = np.concatenate(([max(p0, 0.0)], pk))
    pk.setflags(write=False)
    log_pk.setflags(write=False)
    return OffspringLaw(
        N=N,
        alpha=float(alpha),
        c_tilde=ct,
        p0=p0,
        p0_closed_form=p0_cf,
        pk=pk,
        log_pk=log_pk,
        sampler=_make_sampler(probs, values),
        family_sampler=_make_sampler(pk, k),
    )


def gen_fn_tilde(z, alpha: float):
    """(1-z)^alpha / alpha + z, the limiting offspring generating function."""
    z = np.asarray(z, dtype=float)
    if np.any((z < 0) | (z > 1)):
        raise DomainError("z must lie in [0, 1]")
    out = (1.0 - z) ** alpha / alpha + z
    return float(out) if out.ndim == 0 else out


def gen_fn_selective(z, alpha: float, s: float):
    """Slightly supercritical mixture s/(1+s) z^2 + 1/(1+s) f~(z)."""
    if s < 0:
        raise DomainError(f"s must be >= 0, got {s}")
    z_arr = np.asarray(z, dtype=float)
    out = (s * z_arr**2 + np.asarray(gen_fn_tilde(z_arr, alpha))) / (1.0 + s)
    return float(out) if np.ndim(out) == 0 else out


def gw_survival(alpha: float, s: float, tol: float = 1e-15) -> float:
    """Survival probability 1 - q of the Galton-Watson process with offspring
    generating function ``gen_fn_selective``.

    With u = 1 - q the fixed-point equation q = f(q) reduces to
    s = s u + u^(alpha-1) / alpha, whose left-minus-right side is monotone in
    u; bisecting in u keeps full relative precision even when q is within
    1e-8 of 1.
    """
    if s < 0:
        raise DomainError(f"s must be >= 0, got {s}")
    if s == 0:
        return 0.0

    def h(u):
        return s * u + u ** (alpha - 1.0) / alpha - s

    lo, hi = 0.0, 1.0
    # h(0) = -s < 0 and h(1) = 1/alpha > 0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
        # absolute tol alone is coarse when u ~ 1e-8; also demand relative accuracy
        if hi - lo <= min(tol, 1e-14 * hi):
            break
    return 0.5 * (lo + hi)
