"""Distributions of the number of interfering multipath components.

Counts are taken at cluster granularity: once the chip duration lands in
cluster k (0-based), every path of clusters k..L-1 counts as interfering
and each of those clusters holds at least one path (its leading tap).
Under the single-Poisson ray model the per-cluster count above the leading
tap is geometric, which makes all the laws below negative-binomial-like.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaln

from .cluster_stats import prob_chip_cluster_index
from .params import LOS, NLOS, ChannelParams

# pmf enumeration stops at this residual mass or at this support size
TAIL_TOL = 1e-8
N_MAX = 5000


@dataclass(frozen=True)
class DiscretePmf:
    """Probability mass function over integers n_min, n_min+1, ...

    ``tail_mass`` is whatever probability the enumeration did not cover;
    entries and tail always add to one.  Builders document what ends up in
    the tail (truncation residue, and for NLOS path counts also the
    chip-before-first-cluster mass, whose path count the model leaves
    unresolved).
    """

    probs: np.ndarray
    n_min: int = 0
    tail_mass: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-D array")
        if np.any(probs < -1e-12):
            raise ValueError("probabilities must be non-negative")
        total = float(probs.sum()) + self.tail_mass
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"pmf mass {total} is not 1 within 1e-9")

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_min + self.probs.size)

    def prob(self, n: int) -> float:
        i = n - self.n_min
        if 0 <= i < self.probs.size:
            return float(self.probs[i])
        return 0.0

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot((self.support - m) ** 2, self.probs))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    @classmethod
    def from_samples(cls, samples, n_min: int = 0) -> "DiscretePmf":
        samples = np.asarray(samples, dtype=int)
        counts = np.bincount(samples - n_min)
        return cls(counts / samples.size, n_min=n_min)


def _log_q(params: ChannelParams) -> tuple[float, float]:
    """log(q) and log(1-q) for q = lambda / (lambda + Lambda)."""
    lam, big = params.ray_rate_fitted, params.cluster_rate
    return math.log(lam) - math.log(lam + big), math.log(big) - math.log(lam + big)


def prob_paths_in_cluster(n: int, params: ChannelParams) -> float:
    """P(n paths above the leading tap in one cluster)
    = lambda**n * Lambda / (lambda + Lambda)**(n+1), a geometric law."""
    if n < 0:
        raise ValueError("n must be non-negative")
    lq, l1q = _log_q(params)
    return math.exp(n * lq + l1q)


def prob_paths_over_clusters(r: int, n: int, params: ChannelParams) -> float:
    """P(n paths in total over r+1 clusters): the (r+1)-fold convolution of
    the single-cluster law, in negative-binomial closed form.  Factorials
    go through log-gamma so large n+r cannot overflow."""
    if r < 0 or n < 0:
        raise ValueError("r and n must be non-negative")
    lq, l1q = _log_q(params)
    return math.exp(n * lq + (r + 1) * l1q
                    + gammaln(n + r + 1) - gammaln(n + 1) - gammaln(r + 1))


def prob_paths_given_k_L(n: int, k: int, L: int, params: ChannelParams) -> float:
    """P(n interfering paths | chip in cluster k of L): sum of L-k
    at-least-one-path cluster counts; zero off the support n >= L-k."""
    if L < 1:
        raise ValueError("L must be positive")
    if not 0 <= k <= L - 1:
        raise ValueError("k must lie in [0, L-1]")
    if n < 0:
        raise ValueError("n must be non-negative")
    m = L - k
    if n < m:
        return 0.0
    lq, l1q = _log_q(params)
    return math.exp((n - m) * lq + m * l1q
                    + gammaln(n) - gammaln(n - m + 1) - gammaln(m))


def _chip_index_probs(L: int, tc: float, env: str, params: ChannelParams) -> np.ndarray:
    return np.array([prob_chip_cluster_index(k, tc, params, env) for k in range(L)])


def prob_paths_given_L(n: int, L: int, tc: float,
                       params: ChannelParams, env: str | None = None) -> float:
    """P(n interfering paths | L clusters), mixing prob_paths_given_k_L over
    the chip-index law (not renormalized over k <= L-1).  n = 0 is the
    beyond-the-last-cluster event and routes to prob_zero_paths."""
    if L < 1:
        raise ValueError("L must be positive")
    if n < 0:
        raise ValueError("n must be non-negative")
    env = params.env_class if env is None else env
    if n == 0:
        return prob_zero_paths(L, tc, params, env)
    pk = _chip_index_probs(L, tc, env, params)
    return float(sum(pk[k] * prob_paths_given_k_L(n, k, L, params) for k in range(L)))


def prob_zero_paths(L: int, tc: float, params: ChannelParams,
                    env: str | None = None) -> float:
    """P(chip beyond the last cluster | L clusters) = sum_{k >= L} P(k),
    evaluated as the exact complement of the Poisson head."""
    if L < 1:
        raise ValueError("L must be positive")
    env = params.env_class if env is None else env
    if env not in (LOS, NLOS):
        raise ValueError(f"env must be {LOS!r} or {NLOS!r}")
    mu = params.cluster_rate * tc
    shape = L if env == LOS else L + 1
    # sum_{j >= shape} Poisson(j; mu) = P(Erlang(shape) <= mu)
    return float(gammainc(shape, mu))


def path_count_pmf(L: int, tc: float, params: ChannelParams,
                   env: str | None = None,
                   tail_tol: float = TAIL_TOL, n_max: int = N_MAX) -> DiscretePmf:
    """Full interfering-path-count pmf given L clusters, n = 0, 1, ...

    Enumeration stops once the achievable mass is covered to ``tail_tol``
    or at ``n_max``.  For NLOS environments the chip-before-first-cluster
    probability exp(-Lambda*tc) is not an integer count event; it stays in
    ``tail_mass`` on top of the truncation residue.
    """
    if L < 1:
        raise ValueError("L must be positive")
    env = params.env_class if env is None else env
    pk = _chip_index_probs(L, tc, env, params)
    deficit = 0.0 if env == LOS else math.exp(-params.cluster_rate * tc)
    target = 1.0 - deficit - tail_tol

    lq, l1q = _log_q(params)
    probs = [prob_zero_paths(L, tc, params, env)]
    total = probs[0]
    n = 0
    while total < target and n < n_max:
        n += 1
        acc = 0.0
        for k in range(L):
            m = L - k
            if n < m:
                continue
            acc += pk[k] * math.exp((n - m) * lq + m * l1q
                                    + gammaln(n) - gammaln(n - m + 1) - gammaln(m))
        probs.append(acc)
        total += acc
    return DiscretePmf(np.asarray(probs), n_min=0, tail_mass=max(0.0, 1.0 - total))
