"""Closed-form statistics of cluster arrival times against the chip duration.

The cluster process starts at T0 ~ Exp(lambda0) and continues with
inter-arrival gaps ~ Exp(cluster_rate); the chip duration T_c "falls into
the ell-th cluster" when T_{ell-1} <= T_c < T_ell (1-based ell, with T_0
denoting the first cluster edge).  Everything here is a pure function of
immutable inputs.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln

from .params import LOS, NLOS, ChannelParams

# relative rate gap below which the closed forms (which divide by powers of
# cluster_rate - lambda0) dispatch to the exact Erlang/Poisson limit
DEGENERATE_RATE_TOL = 1e-9

# a series term this small relative to the accumulated value ends summation
_TERM_STOP = 1e-30


def _kahan_add(total: float, comp: float, term: float) -> tuple[float, float]:
    y = term - comp
    t = total + y
    comp = (t - total) - y
    return t, comp


def _partial_exp_sum(u: float, ell: int) -> float:
    """sum_{i=0}^{ell} u**i / i!"""
    total, comp = 0.0, 0.0
    term = 1.0
    for i in range(ell + 1):
        total, comp = _kahan_add(total, comp, term)
        term *= u / (i + 1)
    return total


def taylor_remainder(ell: int, u: float) -> float:
    """Remainder of the degree-``ell`` Taylor expansion of exp(u):
    exp(u) - sum_{i=0}^{ell} u**i / i!.

    Direct subtraction cancels catastrophically once the partial sum is
    close to exp(u) (|u| small against ell), so the tail series is used
    there.  For u < 0 the tail itself alternates with growing terms, so it
    is summed in the transformed all-positive form
    exp(u) * u**(ell+1)/(ell+1)! * sum_j (ell+1)/(ell+1+j) * (-u)**j / j!,
    which is stable for every u below the overflow range.  Direct
    evaluation is kept for |u| > ell + 30, where the subtraction is exact
    to working precision.
    """
    if ell < 0:
        raise ValueError("ell must be non-negative")
    if u == 0.0:
        return 0.0
    if abs(u) > ell + 30.0 or u < -690.0:
        return math.exp(u) - _partial_exp_sum(u, ell)
    if u > 0.0:
        # tail series, all terms positive
        log_term = (ell + 1) * math.log(u) - gammaln(ell + 2)
        if log_term > 700.0:
            return math.inf
        total, comp = 0.0, 0.0
        term = math.exp(log_term)
        i = ell + 1
        while True:
            total, comp = _kahan_add(total, comp, term)
            term *= u / (i + 1)
            i += 1
            if term == 0.0 or term < _TERM_STOP * total:
                return total
    # u < 0: all-positive transformed series
    v = -u
    total, comp = 0.0, 0.0
    term = 1.0  # j = 0
    j = 0
    while True:
        total, comp = _kahan_add(total, comp, (ell + 1) / (ell + 1 + j) * term)
        j += 1
        term *= v / j
        if (ell + 1) / (ell + 1 + j) * term < _TERM_STOP * total:
            break
    sign = -1.0 if (ell % 2 == 0) else 1.0  # sign of u**(ell+1) for u < 0
    log_mag = u + (ell + 1) * math.log(v) - gammaln(ell + 2) + math.log(total)
    return sign * math.exp(log_mag)


def _tail_scaled(k: int, b: float, x: float) -> float:
    """R_k(b*x) / b**(k+1) = sum_{i >= k+1} b**(i-k-1) * x**i / i!.

    The closed forms below multiply the remainder by 1/b**(k+1); evaluating
    the combination as a single series keeps it finite and positive as
    b -> 0 (the prefactor alone overflows long before the product does).
    """
    if x == 0.0:
        return 0.0
    u = b * x
    log_t0 = (k + 1) * math.log(x) - gammaln(k + 2)
    if u >= 0.0:
        if u > k + 31.0:
            # exp(u) dominates the remainder; no cancellation in log space
            log_ratio = log_t0 + gammaln(k + 2) - (k + 1) * math.log(u)
            log_main = u + log_ratio
            if log_main > 700.0:
                return math.inf
            return math.exp(log_main) - _partial_exp_sum(u, k) * math.exp(log_ratio)
        if log_t0 + u > 700.0:
            return math.inf
        total, comp = 0.0, 0.0
        term = 1.0  # series in u with unit leading term
        j = 0
        while True:
            total, comp = _kahan_add(total, comp, term)
            j += 1
            term *= u / (k + 1 + j)
            if term == 0.0 or term < _TERM_STOP * total:
                break
        return math.exp(log_t0) * total
    if -u > k + 31.0 or u < -690.0:
        # partial-sum route is exact here; guard u**(k+1) against overflow
        rem = math.exp(u) - _partial_exp_sum(u, k)
        return rem * math.copysign(math.exp(log_t0 + gammaln(k + 2)
                                            - (k + 1) * math.log(-u)),
                                   (-1.0) ** (k + 1))
    # transformed all-positive series (see taylor_remainder)
    v = -u
    total, comp = 0.0, 0.0
    term = 1.0
    j = 0
    while True:
        total, comp = _kahan_add(total, comp, (k + 1) / (k + 1 + j) * term)
        j += 1
        term *= v / j
        if (k + 1) / (k + 1 + j) * term < _TERM_STOP * total:
            break
    return math.exp(u + log_t0) * total


def _is_degenerate(params: ChannelParams) -> bool:
    return (abs(params.cluster_rate - params.lambda0)
            < DEGENERATE_RATE_TOL * params.cluster_rate)


def cluster_arrival_pdf(ell: int, x, params: ChannelParams):
    """Density of the ell-th cluster edge T_ell = T0 + (ell gaps) at delay x.

    ``ell = 0`` is the first edge T0 itself.  Equal rates make T_ell an
    Erlang(ell+1, cluster_rate) variable; that exact limit is dispatched to
    automatically when the rates are within DEGENERATE_RATE_TOL.
    """
    if ell < 0:
        raise ValueError("ell must be non-negative")
    lam0, lam = params.lambda0, params.cluster_rate
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("delay must be non-negative")
    out = np.empty_like(x)
    if _is_degenerate(params):
        log_pdf = ((ell + 1) * math.log(lam)
                   + ell * np.log(np.where(x > 0, x, 1.0)) - lam * x - gammaln(ell + 1))
        out = np.where(x > 0, np.exp(log_pdf), lam if ell == 0 else 0.0)
    elif ell == 0:
        out = lam0 * np.exp(-lam0 * x)
    else:
        b = lam - lam0
        pref = lam0 * lam ** ell
        for i, xi in enumerate(x):
            if xi == 0.0:
                out[i] = 0.0
            else:
                out[i] = pref * math.exp(-lam * xi) * _tail_scaled(ell - 1, b, xi)
    return float(out[0]) if scalar else out


def prob_chip_in_cluster(ell: int, tc: float, params: ChannelParams) -> float:
    """P(T_{ell-1} <= T_c < T_ell), the chip falling inside the ell-th
    cluster (1-based; the first cluster spans [T0, T1)).

    Closed form lambda0 * Lambda**(ell-1) / (Lambda-lambda0)**ell
    * exp(-Lambda*T_c) * R_{ell-1}((Lambda-lambda0)*T_c); equal rates
    dispatch to the exact Poisson limit (Lambda*T_c)**ell
    * exp(-Lambda*T_c) / ell!.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    if tc < 0:
        raise ValueError("chip time must be non-negative")
    lam0, lam = params.lambda0, params.cluster_rate
    if tc == 0.0:
        return 0.0
    if _is_degenerate(params):
        return math.exp(ell * math.log(lam * tc) - lam * tc - gammaln(ell + 1))
    b = lam - lam0
    return lam0 * lam ** (ell - 1) * math.exp(-lam * tc) * _tail_scaled(ell - 1, b, tc)


def prob_chip_before_first_cluster(tc: float, params: ChannelParams) -> float:
    """P(T_c < T0) = exp(-lambda0 * T_c): the chip ends before the first
    cluster and every received path interferes."""
    if tc < 0:
        raise ValueError("chip time must be non-negative")
    return math.exp(-params.lambda0 * tc)


def prob_chip_cluster_index(k: int, tc: float, params: ChannelParams,
                            env: str | None = None) -> float:
    """P(chip in cluster index k), 0-based, under the simplified per-class
    laws: LOS (T0 = 0) gives the Poisson mass at k; NLOS gives the Poisson
    mass at k+1 (the first edge itself is an arrival of the same process).
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if tc < 0:
        raise ValueError("chip time must be non-negative")
    env = params.env_class if env is None else env
    if env not in (LOS, NLOS):
        raise ValueError(f"env must be {LOS!r} or {NLOS!r}")
    mu = params.cluster_rate * tc
    j = k if env == LOS else k + 1
    if mu == 0.0:
        return 1.0 if j == 0 else 0.0
    return math.exp(j * math.log(mu) - mu - gammaln(j + 1))


def j_integral(m: int, rate: float, tc: float) -> float:
    """Upper exponential moment J = integral_{tc}^inf x**m exp(-rate*x) dx
    = exp(-rate*tc)/rate**(m+1) * sum_{p=0}^m m! (rate*tc)**p / p!."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if rate <= 0:
        raise ValueError("rate must be strictly positive")
    if tc < 0:
        raise ValueError("tc must be non-negative")
    return math.exp(gammaln(m + 1) - (m + 1) * math.log(rate)) * gammaincc(m + 1, rate * tc)


def j_bar_integral(m: int, rate: float, tc: float) -> float:
    """Lower counterpart, integral_0^{tc} x**m exp(-rate*x) dx
    = m!/rate**(m+1) - J."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if rate <= 0:
        raise ValueError("rate must be strictly positive")
    if tc < 0:
        raise ValueError("tc must be non-negative")
    return math.exp(gammaln(m + 1) - (m + 1) * math.log(rate)) * gammainc(m + 1, rate * tc)


def chip_cluster_probabilities(tc: float, params: ChannelParams,
                               tail_tol: float = 1e-9, ell_max: int = 500):
    """Head probabilities P(T_c in C_ell) for ell = 1.., truncated when the
    running total (including the pre-first-cluster mass) exceeds
    1 - tail_tol or at ell_max.  Returns (probs array, before_first, tail).
    """
    before = prob_chip_before_first_cluster(tc, params)
    probs = []
    total = before
    for ell in range(1, ell_max + 1):
        p = prob_chip_in_cluster(ell, tc, params)
        probs.append(p)
        total += p
        if total >= 1.0 - tail_tol:
            break
    return np.asarray(probs), before, max(0.0, 1.0 - total)
