"""Clustered-multipath channel generator and Monte-Carlo estimators.

Two fidelity levels share one arrival skeleton (Poisson cluster count
conditioned >= 1, exponential cluster gaps, a leading tap at every cluster
start):

* simplified - single ray rate (the fitted single-Poisson equivalent),
  single exp(-t/Gamma) profile over absolute delay, rays confined to their
  cluster span.  This is the regime the closed-form chain models.
* full - two-component ray-gap mixture, per-cluster decay
  gamma_l = gamma0 + kgamma*T_l, cluster energies exp(-T_l/cluster_decay)
  with optional lognormal shadowing, rays continued until the in-cluster
  profile falls below 1e-5 of its peak.

Amplitudes are squared-root Gamma draws (exact squared-Nakagami law) with
the m-factor drawn lognormal per ray; every realization is normalized to
unit energy, with the raw energy kept for raw-scale statistics.

Reproducibility: realization i of a run is generated from an independent
generator keyed by (seed, stream-tag, i), so results do not depend on
execution order or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, ParameterValidationError
from .params import LOS, ChannelParams
from .path_counts import DiscretePmf

# stream tags keep estimator families statistically independent at one seed
_TAG_INTERFERENCE = 0
_TAG_CONDITIONAL = 1

_PROFILE_FLOOR = 1e-5  # full mode: stop rays once exp(-tau/gamma_l) < this
_TWO_PI = 2.0 * math.pi


def rng_for(seed: int, tag: int, index: int) -> np.random.Generator:
    """Independent deterministic stream for one realization."""
    return np.random.default_rng((seed, tag, index))


@dataclass
class ChannelRealization:
    """One sampled impulse response, normalized to unit energy.

    ``cluster_times`` are the cluster start delays; ``upper_bound`` closes
    the last cluster's span.  Ray delays are relative to their cluster
    start with the leading tap at 0.  ``raw_energy`` is the pre-
    normalization energy, so raw tap powers are gain**2 * raw_energy.
    """

    cluster_times: np.ndarray
    upper_bound: float
    ray_delays: list
    tap_gains: list
    phases: list
    raw_energy: float

    def __post_init__(self):
        if np.any(np.diff(self.cluster_times) <= 0):
            raise ValueError("cluster times must be strictly increasing")
        for taus in self.ray_delays:
            if taus[0] != 0.0 or np.any(np.diff(taus) <= 0):
                raise ValueError("ray delays must start at 0 and increase")
        energy = sum(float(np.dot(g, g)) for g in self.tap_gains)
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"normalized energy {energy} is not 1 within 1e-12")

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_times)

    def absolute_delays(self) -> np.ndarray:
        return np.concatenate([t + taus for t, taus in zip(self.cluster_times, self.ray_delays)])

    def gains(self) -> np.ndarray:
        return np.concatenate(self.tap_gains)


def _resolve_mode(params: ChannelParams, mode: str) -> str:
    if mode == "auto":
        return "full" if params.oracle_extras is not None else "simplified"
    if mode not in ("simplified", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "full" and params.oracle_extras is None:
        raise ParameterValidationError("full-fidelity mode requires the oracle block")
    return mode


def _arrivals_until(rng: np.random.Generator, bound: float,
                    beta: float, scale1: float, scale2: float) -> np.ndarray:
    """Arrival times of a (possibly mixed) renewal process on [0, bound),
    leading tap at 0 included."""
    chunks = [np.zeros(1)]
    t = 0.0
    mean_scale = beta * scale1 + (1.0 - beta) * scale2
    while True:
        k = max(8, int(1.5 * (bound - t) / mean_scale) + 1)
        if beta >= 1.0:
            gaps = rng.exponential(scale1, size=k)
        elif beta <= 0.0:
            gaps = rng.exponential(scale2, size=k)
        else:
            pick = rng.random(size=k) < beta
            gaps = rng.exponential(1.0, size=k) * np.where(pick, scale1, scale2)
        arr = t + np.cumsum(gaps)
        chunks.append(arr[arr < bound])
        if arr[-1] >= bound:
            return np.concatenate(chunks)
        t = arr[-1]


def _generate_with_count(params: ChannelParams, rng: np.random.Generator,
                         n_clusters: int, mode: str) -> ChannelRealization:
    lam = params.cluster_rate
    t0 = 0.0 if params.env_class == LOS else rng.exponential(1.0 / params.lambda0)
    gaps = rng.exponential(1.0 / lam, size=n_clusters)
    starts = t0 + np.concatenate([[0.0], np.cumsum(gaps[:-1])])
    upper = t0 + float(np.sum(gaps))

    extras = params.oracle_extras
    if mode == "full":
        lam_bar = (params.mix_beta * params.ray_rate_1
                   + (1.0 - params.mix_beta) * params.ray_rate_2)

    ray_delays = []
    mean_powers = []
    for l in range(n_clusters):
        if mode == "simplified":
            bound = (starts[l + 1] if l + 1 < n_clusters else upper) - starts[l]
            scale = 1.0 / params.ray_rate_fitted
            taus = _arrivals_until(rng, bound, 1.0, scale, scale)
            p_mean = np.exp(-(starts[l] + taus) / params.intra_decay)
        else:
            gamma_l = extras.gamma0 + extras.kgamma * starts[l]
            horizon = gamma_l * math.log(1.0 / _PROFILE_FLOOR)
            taus = _arrivals_until(rng, horizon, params.mix_beta,
                                   1.0 / params.ray_rate_1, 1.0 / params.ray_rate_2)
            omega_l = math.exp(-starts[l] / extras.cluster_decay)
            if extras.cluster_shadowing_db > 0.0:
                omega_l *= 10.0 ** (rng.normal(0.0, extras.cluster_shadowing_db) / 10.0)
            p_mean = (omega_l / (1.0 + lam_bar * gamma_l)) * np.exp(-taus / gamma_l)
            if extras.ray_shadowing_db > 0.0:
                p_mean = p_mean * 10.0 ** (rng.normal(0.0, extras.ray_shadowing_db,
                                                      size=taus.size) / 10.0)
        ray_delays.append(taus)
        mean_powers.append(p_mean)

    gains = []
    phases = []
    raw_energy = 0.0
    for p_mean in mean_powers:
        m = np.maximum(rng.lognormal(params.nakagami_m0, params.nakagami_m0_hat,
                                     size=p_mean.size), 0.5)
        a = np.sqrt(rng.gamma(shape=m, scale=p_mean / m))
        gains.append(a)
        phases.append(rng.uniform(0.0, _TWO_PI, size=p_mean.size))
        raw_energy += float(np.dot(a, a))
    norm = 1.0 / math.sqrt(raw_energy)
    gains = [a * norm for a in gains]

    return ChannelRealization(cluster_times=starts, upper_bound=upper,
                              ray_delays=ray_delays, tap_gains=gains,
                              phases=phases, raw_energy=raw_energy)


def generate_realization(params: ChannelParams, rng: np.random.Generator,
                         mode: str = "auto") -> ChannelRealization:
    """Draw one channel realization.

    Cluster count ~ Poisson(mean_clusters) conditioned on >= 1; the first
    cluster delay is 0 for LOS and Exp(lambda0) for NLOS.  ``mode`` is
    ``simplified``, ``full``, or ``auto`` (full when the oracle block is
    present).
    """
    mode = _resolve_mode(params, mode)
    while True:
        n_clusters = int(rng.poisson(params.mean_clusters))
        if n_clusters >= 1:
            break
    return _generate_with_count(params, rng, n_clusters, mode)


def interference_power(realization: ChannelRealization, tc: float) -> float:
    """Normalized power of every tap with absolute delay >= tc (in [0, 1])."""
    if tc < 0:
        raise ValueError("chip time must be non-negative")
    acc = 0.0
    for start, taus, g in zip(realization.cluster_times,
                              realization.ray_delays, realization.tap_gains):
        mask = (start + taus) >= tc
        if mask.any():
            gm = g[mask]
            acc += float(np.dot(gm, gm))
    return acc


def interfering_path_count(realization: ChannelRealization, tc: float) -> int:
    """Number of interfering paths at cluster granularity: all taps of
    every cluster from the chip's cluster onward (the analytic chain's
    convention, which grants the chip's own cluster its leading tap).  A
    chip beyond the last cluster span counts zero; a chip before the first
    cluster counts every tap.
    """
    if tc >= realization.upper_bound:
        return 0
    k = int(np.searchsorted(realization.cluster_times, tc, side="right")) - 1
    k = max(k, 0)
    return sum(taus.size for taus in realization.ray_delays[k:])


@dataclass
class McEstimate:
    """Scalar Monte-Carlo outcomes with first-two-moment summaries.

    Bit-exactly reproducible from (params, tc, runs, seed): sample i uses
    only the stream keyed by (seed, tag, i).
    """

    samples: np.ndarray
    seed: int
    runs: int
    mean: float = field(init=False)
    variance: float = field(init=False)
    std_error_mean: float = field(init=False)
    std_error_variance: float = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.size != self.runs:
            raise ValueError("runs must equal the number of samples")
        self.mean = float(np.mean(s))
        self.variance = float(np.var(s, ddof=1)) if s.size > 1 else 0.0
        self.std_error_mean = math.sqrt(self.variance / s.size) if s.size > 1 else math.inf
        if s.size > 1:
            m4 = float(np.mean((s - self.mean) ** 4))
            self.std_error_variance = math.sqrt(
                max(m4 - self.variance ** 2, 0.0) / s.size)
        else:
            self.std_error_variance = math.inf

    def histogram(self, bins=50):
        return np.histogram(self.samples, bins=bins)


def mc_interference(params: ChannelParams, tc: float, runs: int, seed: int,
                    mode: str = "auto", threads: int = 1) -> McEstimate:
    """Interference power over ``runs`` independent realizations."""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    mode = _resolve_mode(params, mode)
    samples = np.empty(runs)

    def fill(lo: int, hi: int):
        for i in range(lo, hi):
            r = generate_realization(params, rng_for(seed, _TAG_INTERFERENCE, i), mode)
            samples[i] = interference_power(r, tc)

    if threads <= 1:
        fill(0, runs)
    else:
        step = -(-runs // threads)
        ranges = [(lo, min(lo + step, runs)) for lo in range(0, runs, step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda r: fill(*r), ranges))
    return McEstimate(samples=samples, seed=seed, runs=runs)


@dataclass
class McConditional:
    """Conditioned Monte-Carlo statistics plus rejection accounting.

    Which fields are filled depends on the condition: cluster-count runs
    carry the path-count pmf and the pooled raw excess-PDP estimate;
    chip-in-cluster runs carry the conditional interference estimate (the
    acceptance rate is then itself the event-frequency estimate).
    """

    acceptance_rate: float
    attempts: int
    path_count_pmf: DiscretePmf | None = None
    excess_pdp: dict | None = None
    interference: McEstimate | None = None


def mc_conditional(params: ChannelParams, tc: float, condition, runs: int,
                   seed: int, mode: str = "auto",
                   min_acceptance: float = 1e-4) -> McConditional:
    """Conditioned Monte-Carlo estimates.

    ``condition`` is ``("cluster-count", L)`` or ``("chip-in-cluster", ell)``
    (1-based ell; the first cluster spans [T0, T1)).  Cluster counts are
    conditioned by direct generation (the count is drawn first and
    independently, so acceptance is 1); the chip-in-cluster event uses
    rejection sampling and raises ``BudgetError`` once its acceptance rate
    is credibly below ``min_acceptance``.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    mode = _resolve_mode(params, mode)
    kind, value = condition
    if kind == "cluster-count":
        if value < 1:
            raise ValueError("cluster count must be at least 1")
        counts = np.empty(runs, dtype=int)
        sums = np.empty(runs)
        npaths = np.empty(runs)
        for i in range(runs):
            rng = rng_for(seed, _TAG_CONDITIONAL, i)
            r = _generate_with_count(params, rng, value, mode)
            counts[i] = interfering_path_count(r, tc)
            raw = r.gains() ** 2 * r.raw_energy
            mask = r.absolute_delays() >= tc
            sums[i] = float(raw[mask].sum())
            npaths[i] = int(mask.sum())
        total_paths = float(npaths.sum())
        if total_paths > 0:
            pooled = float(sums.sum()) / total_paths
            resid = sums - pooled * npaths
            se = math.sqrt(float(np.mean(resid ** 2)) / runs) / float(np.mean(npaths))
        else:
            pooled, se = math.nan, math.nan
        return McConditional(
            acceptance_rate=1.0,
            attempts=runs,
            path_count_pmf=DiscretePmf.from_samples(counts),
            excess_pdp={"pooled_mean": pooled, "std_error": se,
                        "paths": int(total_paths)},
        )
    if kind == "chip-in-cluster":
        ell = int(value)
        if ell < 1:
            raise ValueError("ell must be at least 1")
        samples = np.empty(runs)
        accepted = 0
        attempts = 0
        while accepted < runs:
            rng = rng_for(seed, _TAG_CONDITIONAL, attempts)
            r = generate_realization(params, rng, mode)
            attempts += 1
            edges = np.append(r.cluster_times, r.upper_bound)
            if ell <= r.n_clusters and edges[ell - 1] <= tc < edges[ell]:
                samples[accepted] = interference_power(r, tc)
                accepted += 1
            if attempts >= 20000 and accepted < min_acceptance * attempts:
                raise BudgetError(
                    "chip-in-cluster acceptance below budget; generate the "
                    "cluster process conditionally instead",
                    acceptance_rate=accepted / attempts, attempts=attempts)
        return McConditional(
            acceptance_rate=accepted / attempts,
            attempts=attempts,
            interference=McEstimate(samples=samples, seed=seed, runs=runs),
        )
    raise ValueError(f"unknown condition {kind!r}")
