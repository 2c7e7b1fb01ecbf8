"""Power-delay-profile approximation and interference-power distribution.

The chain: a single-exponential PDP exp(-t/Gamma) stands in for the
clustered profile; its average over [T_c, T_L) gives the per-path mean
power of the interfering components; squared-Nakagami fading with m = 2
makes each path power Gamma(2, .)-distributed, so the total over n paths
is Gamma(2n, .); mixing over the path-count and cluster-count laws yields
the full interference-power distribution, a point mass at zero plus (for
NLOS) a full-power leg plus a continuous Gamma mixture.

Power scale: the Monte-Carlo oracle normalizes every realization to unit
energy, so the assembly layer rescales raw PDP powers by the closed-form
expected channel energy given L clusters (see ``unit_energy_scale``).
``mean_pdp`` itself stays on the raw exp(-t/Gamma) scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import gammainc, gammaincc, gammaln

from .errors import NumericalError
from .params import LOS, NLOS, ChannelParams
from .path_counts import DiscretePmf, path_count_pmf

# Poisson cluster-count enumeration stops at this residual mass
CLUSTER_TAIL_TOL = 1e-8


def pdp_sampled(tc: float, t_last: float, n_samples: int, params: ChannelParams) -> float:
    """Mean of n uniformly spaced PDP samples over [tc, t_last):
    (1/n) (g_L - g_0) / ((g_L/g_0)**(1/n) - 1), with g_0 = exp(-tc/Gamma)
    and g_L = exp(-t_last/Gamma).  At t_last == tc this is exp(-tc/Gamma).

    Left-endpoint sampling of a decreasing profile: the value decreases
    with n toward :func:`pdp_approx`.
    """
    if tc < 0:
        raise ValueError("chip time must be non-negative")
    if t_last < tc:
        raise ValueError("t_last must not precede tc")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    g = params.intra_decay
    g0 = math.exp(-tc / g)
    if t_last == tc:
        return g0
    x = (t_last - tc) / g
    return g0 * math.expm1(-x) / (n_samples * math.expm1(-x / n_samples))


def pdp_approx(tc: float, t_last: float, params: ChannelParams) -> float:
    """Large-n limit of :func:`pdp_sampled`: the integral mean of the PDP
    over [tc, t_last], Gamma*(exp(-tc/G) - exp(-t_last/G))/(t_last - tc),
    extended continuously to exp(-tc/Gamma) at t_last == tc."""
    if tc < 0:
        raise ValueError("chip time must be non-negative")
    if t_last < tc:
        raise ValueError("t_last must not precede tc")
    g = params.intra_decay
    g0 = math.exp(-tc / g)
    if t_last == tc:
        return g0
    x = (t_last - tc) / g
    return g0 * (-math.expm1(-x)) / x


def _log_tail_weight(L: int, rate: float, tc: float) -> float:
    """log of J_{L-1,rate}(tc) = integral_{tc}^inf t**(L-1) exp(-rate t) dt."""
    return (gammaln(L) - L * math.log(rate)
            + math.log(gammaincc(L, rate * tc)))


def last_cluster_delay_pdf(L: int, t, tc: float, params: ChannelParams):
    """Density of the last-cluster upper delay T_L (an Erlang(L) edge)
    conditioned on T_L >= tc: t**(L-1) exp(-Lambda t) / J_{L-1}(tc) above
    tc, zero below."""
    if L < 1:
        raise ValueError("L must be positive")
    if tc < 0:
        raise ValueError("chip time must be non-negative")
    lam = params.cluster_rate
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    log_j = _log_tail_weight(L, lam, tc)
    safe = np.where(t > 0, t, 1.0)
    log_pdf = (L - 1) * np.log(safe) - lam * t - log_j
    out = np.where(t >= tc, np.exp(log_pdf), 0.0)
    return float(out[0]) if scalar else out


def mean_pdp(L: int, tc: float, params: ChannelParams, rel_tol: float = 1e-8) -> float:
    """Mean PDP of the interfering components given L clusters, on the raw
    exp(-t/Gamma) scale:

        Gamma * E[ (exp(-tc/G) - exp(-X/G)) / (X - tc) ],
        X ~ (last-cluster delay | X >= tc).

    The integrand's removable singularity at X = tc is evaluated by a
    2-term Taylor expansion within 1e-6*Gamma of the edge.  The
    semi-infinite integral is truncated where an analytic envelope bounds
    the discarded tail below 1e-10 of the head, then adaptive quadrature
    runs at ``rel_tol``; failure to reach tolerance raises
    ``NumericalError`` with the achieved estimate.
    """
    if L < 1:
        raise ValueError("L must be positive")
    if tc < 0:
        raise ValueError("chip time must be non-negative")
    lam = params.cluster_rate
    g = params.intra_decay
    g0 = math.exp(-tc / g)
    log_j = _log_tail_weight(L, lam, tc)

    def profile_mean(x: float) -> float:
        d = x - tc
        if d < 1e-6 * g:
            return (g0 / g) * (1.0 - d / (2.0 * g))
        return g0 * (-math.expm1(-d / g)) / d

    def integrand(x: float) -> float:
        if x <= 0.0:
            return profile_mean(x) * math.exp(-log_j) if L == 1 else 0.0
        return profile_mean(x) * math.exp((L - 1) * math.log(x) - lam * x - log_j)

    upper = tc + (40.0 + (L - 1) + 12.0 * math.sqrt(L)) / lam
    value = abserr = math.nan
    for _ in range(60):
        value, abserr = quad(integrand, tc, upper, epsabs=1e-13, epsrel=rel_tol, limit=200)
        # envelope: profile_mean(x) <= g0/(x - tc) for x >= upper
        tail_bound = (g0 / (upper - tc)) * math.exp(_log_tail_weight(L, lam, upper) - log_j)
        if tail_bound <= 1e-10 * max(value, 1e-300):
            break
        upper *= 1.5
    else:
        raise NumericalError("mean PDP tail bound never met",
                             state={"L": L, "tc": tc, "upper": upper})
    if abserr > 10.0 * rel_tol * max(abs(value), 1e-300):
        raise NumericalError("mean PDP quadrature did not reach tolerance",
                             state={"L": L, "tc": tc, "estimate": g * value,
                                    "abserr": g * abserr, "upper": upper})
    return g * value


def path_power_pdf(x, omega: float, m: float):
    """Squared-Nakagami (Gamma) density of a single path power:
    (m/omega)**m x**(m-1) exp(-m x / omega) / Gamma(m)."""
    if omega <= 0:
        raise ValueError("omega must be strictly positive")
    if m < 0.5:
        raise ValueError("m must be at least 0.5")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("power must be non-negative")
    safe = np.where(x > 0, x, 1.0)
    log_pdf = (m * math.log(m / omega) + (m - 1.0) * np.log(safe)
               - m * x / omega - gammaln(m))
    out = np.exp(log_pdf)
    if m > 1.0:
        edge = 0.0
    elif m == 1.0:
        edge = 1.0 / omega
    else:
        edge = math.inf
    out = np.where(x > 0, out, edge)
    return float(out[0]) if scalar else out


def interference_pdf_given_n_L(x, n: int, omega0: float):
    """Density of the sum of n independent m=2 path powers with common
    mean ``omega0``: Gamma(2n, omega0/2), i.e.
    (2/omega0)**(2n) x**(2n-1) exp(-2x/omega0) / (2n-1)!.
    Evaluated in the log domain throughout."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if omega0 <= 0:
        raise ValueError("omega0 must be strictly positive")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("power must be non-negative")
    safe = np.where(x > 0, x, 1.0)
    log_pdf = (2 * n * math.log(2.0 / omega0) + (2 * n - 1) * np.log(safe)
               - 2.0 * x / omega0 - gammaln(2 * n))
    out = np.where(x > 0, np.exp(log_pdf), 0.0)
    return float(out[0]) if scalar else out


def unit_energy_scale(L: int, params: ChannelParams, env: str | None = None) -> float:
    """Reciprocal of the expected raw channel energy given L clusters.

    Under the simplified generator a cluster starting at T_l contributes a
    leading tap of mean power exp(-T_l/Gamma) plus rate-lambda rays up to
    the next edge; with phi = E[exp(-gap/Gamma)] = Lambda*Gamma /
    (1 + Lambda*Gamma) the expected total is

        E(L) = (1 + lambda*Gamma*(1-phi)) * (1 - phi**L) / (1 - phi)

    times an extra phi for NLOS (the first edge sits one gap out).  This
    is the bridge between the raw exp(-t/Gamma) power scale and the
    oracle's unit-energy realizations.
    """
    if L < 1:
        raise ValueError("L must be positive")
    env = params.env_class if env is None else env
    lam_ray = params.ray_rate_fitted
    g = params.intra_decay
    big = params.cluster_rate
    phi = big * g / (1.0 + big * g)
    energy = (1.0 + lam_ray * g * (1.0 - phi)) * (1.0 - phi ** L) / (1.0 - phi)
    if env == NLOS:
        energy *= phi
    return 1.0 / energy


@dataclass
class _GammaMixture:
    """Weighted Gamma(2n, omega/2) components for one cluster count."""

    ns: np.ndarray
    weights: np.ndarray
    omega: float

    def log_norms(self) -> np.ndarray:
        return (2 * self.ns * math.log(2.0 / self.omega)
                - gammaln(2 * self.ns))

    def pdf(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        pos = x > 0
        if pos.any() and self.ns.size:
            xp = x[pos]
            log_pdf = (self.log_norms()[:, None]
                       + (2 * self.ns - 1)[:, None] * np.log(xp)[None, :]
                       - (2.0 / self.omega) * xp[None, :])
            out[pos] = self.weights @ np.exp(log_pdf)
        return out

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return self.weights @ gammainc(2 * self.ns[:, None], (2.0 / self.omega) * x[None, :])

    def moment1(self) -> float:
        return self.omega * float(np.dot(self.weights, self.ns))

    def moment2(self) -> float:
        return self.omega ** 2 * float(np.dot(self.weights, self.ns ** 2 + self.ns / 2.0))

    def upper_support(self) -> float:
        if self.ns.size == 0:
            return 0.0
        sig = [n for n, w in zip(self.ns, self.weights) if w > 1e-12]
        n_hi = max(sig) if sig else float(self.ns[-1])
        a = 2.0 * n_hi
        return (self.omega / 2.0) * (a + 10.0 * math.sqrt(a) + 25.0)


def _mixture_for_L(L: int, tc: float, params: ChannelParams, env: str,
                   normalized: bool) -> tuple[_GammaMixture, DiscretePmf, float]:
    pmf = path_count_pmf(L, tc, params, env)
    omega = mean_pdp(L, tc, params)
    if normalized:
        omega *= unit_energy_scale(L, params, env)
    ns = pmf.support[1:]  # n >= 1
    weights = pmf.probs[1:]
    return _GammaMixture(ns=ns.astype(float), weights=weights, omega=omega), pmf, omega


def interference_pdf_given_L(x, L: int, tc: float, params: ChannelParams,
                             env: str | None = None, normalized: bool = True):
    """Continuous interference-power density conditioned on L clusters:
    the path-count mixture of Gamma(2n, omega/2) components.  Integrates
    to 1 minus the zero mass (and minus the NLOS full-power leg).

    ``normalized`` selects the unit-energy power scale (matching the MC
    oracle); pass False for the raw exp(-t/Gamma) scale.
    """
    env = params.env_class if env is None else env
    mixture, _, _ = _mixture_for_L(L, tc, params, env, normalized)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    out = mixture.pdf(np.atleast_1d(x))
    return float(out[0]) if scalar else out


@dataclass
class MixedDistribution:
    """Interference-power law: P(X = 0), P(X = 1) (full power), and a
    continuous density in between (which may spill past 1; the analytic
    chain does not know the unit-energy ceiling)."""

    mass_at_zero: float
    full_power_mass: float
    grid: np.ndarray
    density_values: np.ndarray
    mean: float
    variance: float
    diagnostics: dict = field(default_factory=dict)
    _weights: np.ndarray | None = None
    _mixtures: list | None = None

    def density(self, x) -> np.ndarray:
        """Continuous part of the density at arbitrary points."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        for w, mix in zip(self._weights, self._mixtures):
            out += w * mix.pdf(x)
        return float(out[0]) if scalar else out

    def cdf(self, x) -> np.ndarray:
        """P(X <= x) including both point masses."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.full_like(x, self.mass_at_zero)
        for w, mix in zip(self._weights, self._mixtures):
            out += w * mix.cdf(x)
        out += np.where(x >= 1.0 - 1e-12, self.full_power_mass, 0.0)
        return float(out[0]) if scalar else out


def resolve_grid(grid_spec, upper_hint: float) -> np.ndarray:
    """Accepts an array of abscissae, an (lo, hi, points) tuple, or None
    for an automatic [0, hi] grid covering the continuous support."""
    if grid_spec is None:
        return np.linspace(0.0, max(1.0, upper_hint), 8001)
    if isinstance(grid_spec, tuple):
        lo, hi, n = grid_spec
        if not (0 <= lo < hi and n >= 2):
            raise ValueError("grid must satisfy 0 <= lo < hi with at least 2 points")
        return np.linspace(float(lo), float(hi), int(n))
    grid = np.asarray(grid_spec, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ValueError("grid must be a strictly increasing 1-D array of non-negative points")
    return grid


def cluster_count_weights(params: ChannelParams,
                          tail_tol: float = CLUSTER_TAIL_TOL) -> np.ndarray:
    """Poisson(mean_clusters) weights conditioned on L >= 1, enumerated
    from L = 1 until the residual mass drops below ``tail_tol``."""
    lbar = params.mean_clusters
    norm = -math.expm1(-lbar)  # 1 - exp(-Lbar)
    weights = []
    total = 0.0
    L = 0
    log_p = -lbar  # log Poisson(0)
    while total < 1.0 - tail_tol and L < 400:
        L += 1
        log_p += math.log(lbar) - math.log(L)
        w = math.exp(log_p) / norm
        weights.append(w)
        total += w
    return np.asarray(weights)


def interference_distribution(tc: float, params: ChannelParams, grid_spec=None,
                              env: str | None = None,
                              cluster_tail_tol: float = CLUSTER_TAIL_TOL) -> MixedDistribution:
    """Assemble the full interference-power law on the unit-energy scale:
    mixture over the (L >= 1)-conditioned Poisson cluster count of the
    per-L Gamma mixtures, plus the discrete masses.

    Moments come from the component moments in closed form.  Per-L
    truncation diagnostics (path-count tail, omega, scale) are recorded in
    ``diagnostics``.
    """
    if tc < 0:
        raise ValueError("chip time must be non-negative")
    env = params.env_class if env is None else env
    weights = cluster_count_weights(params, cluster_tail_tol)
    full_power_mass = 0.0 if env == LOS else math.exp(-params.cluster_rate * tc)

    mixtures = []
    per_l = []
    mass_at_zero = 0.0
    mean_cont = 0.0
    m2_cont = 0.0
    for L, w in enumerate(weights, start=1):
        mixture, pmf, omega = _mixture_for_L(L, tc, params, env, normalized=True)
        mixtures.append(mixture)
        mass_at_zero += w * pmf.prob(0)
        mean_cont += w * mixture.moment1()
        m2_cont += w * mixture.moment2()
        per_l.append({
            "L": L,
            "weight": float(w),
            "omega": float(omega),
            "path_count_support": int(pmf.probs.size - 1),
            "path_count_tail": float(pmf.tail_mass),
        })

    mean = mean_cont + full_power_mass
    m2 = m2_cont + full_power_mass
    variance = m2 - mean * mean
    upper_hint = max((m.upper_support() for m in mixtures), default=1.0)
    grid = resolve_grid(grid_spec, upper_hint)

    dist = MixedDistribution(
        mass_at_zero=mass_at_zero,
        full_power_mass=full_power_mass,
        grid=grid,
        density_values=np.zeros_like(grid),
        mean=mean,
        variance=variance,
        diagnostics={
            "env": env,
            "tc": tc,
            "cluster_count_max": int(weights.size),
            "cluster_count_tail": float(max(0.0, 1.0 - weights.sum())),
            "per_cluster_count": per_l,
        },
        _weights=weights,
        _mixtures=mixtures,
    )
    dist.density_values = dist.density(grid)
    return dist
