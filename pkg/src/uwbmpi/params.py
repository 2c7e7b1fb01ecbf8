"""Channel-model parameter registry.

Loads and validates the stochastic parameters of one radio environment
(CM1-CM4) from a flat key/value document, and derives the single-Poisson
ray rate that the closed-form chain requires in place of the standard
two-component ray mixture.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, asdict
from importlib import resources
from pathlib import Path

from scipy.integrate import quad

from .errors import NumericalError, ParameterLoadError, ParameterValidationError

LOS = "LOS"
NLOS = "NLOS"

CM_IDS = ("cm1", "cm2", "cm3", "cm4")

# file keys -> ChannelParams attributes (all required, all float except env)
_REQUIRED_KEYS = {
    "lambda0_per_ns": "lambda0",
    "cluster_rate_per_ns": "cluster_rate",
    "ray_rate_1_per_ns": "ray_rate_1",
    "ray_rate_2_per_ns": "ray_rate_2",
    "mix_beta": "mix_beta",
    "mean_clusters": "mean_clusters",
    "intra_decay_ns": "intra_decay",
    "nakagami_m0": "nakagami_m0",
    "nakagami_m0_hat": "nakagami_m0_hat",
}

_EXTRAS_KEYS = {
    "cluster_decay_ns": "cluster_decay",
    "gamma0_ns": "gamma0",
    "kgamma": "kgamma",
    "cluster_shadowing_db": "cluster_shadowing_db",
}


@dataclass(frozen=True)
class OracleExtras:
    """Extra parameters needed only by the full-fidelity channel generator.

    ``cluster_decay`` is the inter-cluster energy decay constant (ns);
    the per-cluster ray decay is ``gamma0 + kgamma * T_l``; shadowing
    deviations are lognormal standard deviations in dB (0 disables).
    """

    cluster_decay: float
    gamma0: float
    kgamma: float
    cluster_shadowing_db: float
    ray_shadowing_db: float = 0.0

    def __post_init__(self):
        if self.cluster_decay <= 0 or self.gamma0 <= 0:
            raise ParameterValidationError("decay constants must be positive")
        if self.kgamma < 0 or self.cluster_shadowing_db < 0 or self.ray_shadowing_db < 0:
            raise ParameterValidationError("slopes and shadowing deviations must be non-negative")


@dataclass(frozen=True)
class ChannelParams:
    """All stochastic-model parameters for one environment.

    Immutable after construction; safe to share across threads.  Rates are
    per ns, time constants in ns.  ``ray_rate_fitted`` is the single-Poisson
    equivalent of the (ray_rate_1, ray_rate_2, mix_beta) mixture, normally
    derived by :func:`fit_single_ray_rate`.
    """

    env_class: str
    lambda0: float
    cluster_rate: float
    ray_rate_1: float
    ray_rate_2: float
    mix_beta: float
    ray_rate_fitted: float
    mean_clusters: float
    intra_decay: float
    nakagami_m0: float
    nakagami_m0_hat: float
    analytic_m: float = 2.0
    oracle_extras: OracleExtras | None = None

    def __post_init__(self):
        if self.env_class not in (LOS, NLOS):
            raise ParameterValidationError(
                f"env_class must be {LOS!r} or {NLOS!r}, got {self.env_class!r}")
        for name in ("lambda0", "cluster_rate", "ray_rate_1", "ray_rate_2",
                     "ray_rate_fitted", "mean_clusters", "intra_decay"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ParameterValidationError(f"{name} must be strictly positive, got {value}")
        if not 0.0 <= self.mix_beta <= 1.0:
            raise ParameterValidationError(f"mix_beta must lie in [0, 1], got {self.mix_beta}")
        lo = min(self.ray_rate_1, self.ray_rate_2)
        hi = max(self.ray_rate_1, self.ray_rate_2)
        if not lo <= self.ray_rate_fitted <= hi:
            raise ParameterValidationError(
                f"ray_rate_fitted {self.ray_rate_fitted} outside [{lo}, {hi}]")
        if self.nakagami_m0_hat < 0:
            raise ParameterValidationError("nakagami_m0_hat must be non-negative")
        if self.analytic_m < 0.5:
            raise ParameterValidationError("analytic_m must be at least 0.5")

    def to_dict(self) -> dict:
        """Plain-dict form; round-trips bit-exactly through from_dict."""
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelParams":
        d = dict(d)
        extras = d.pop("oracle_extras", None)
        if extras is not None:
            extras = OracleExtras(**extras)
        return cls(oracle_extras=extras, **d)


def default_params_path() -> Path:
    """Path of the parameter document bundled with the package."""
    return Path(resources.files("uwbmpi").joinpath("data/ieee802154a_cm_params.ini"))


def load_params(source: str | Path, cm_id: str) -> ChannelParams:
    """Load and validate the parameter block for one CM class.

    ``source`` is a flat key/value document with one ``[cmN]`` section per
    environment.  ``ray_rate_fitted`` is derived here via
    :func:`fit_single_ray_rate`.  The oracle block is optional as a whole;
    if any of its keys is present, all of them must be.

    Raises ``ParameterLoadError`` naming the first missing key and
    ``ParameterValidationError`` for out-of-range values.
    """
    cm_id = cm_id.lower()
    if cm_id not in CM_IDS:
        raise ParameterLoadError(cm_id)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(source)
    if not read:
        raise ParameterLoadError(str(source))
    if not parser.has_section(cm_id):
        raise ParameterLoadError(cm_id)
    section = parser[cm_id]

    if "env_class" not in section:
        raise ParameterLoadError("env_class")
    fields: dict = {"env_class": section["env_class"].strip().upper()}
    for key, attr in _REQUIRED_KEYS.items():
        if key not in section:
            raise ParameterLoadError(key)
        fields[attr] = _parse_float(key, section[key])
    if "analytic_m" in section:
        fields["analytic_m"] = _parse_float("analytic_m", section["analytic_m"])

    present = [k for k in _EXTRAS_KEYS if k in section]
    if present:
        missing = [k for k in _EXTRAS_KEYS if k not in section]
        if missing:
            raise ParameterLoadError(missing[0])
        extras = {attr: _parse_float(k, section[k]) for k, attr in _EXTRAS_KEYS.items()}
        if "ray_shadowing_db" in section:
            extras["ray_shadowing_db"] = _parse_float(
                "ray_shadowing_db", section["ray_shadowing_db"])
        fields["oracle_extras"] = OracleExtras(**extras)

    fields["ray_rate_fitted"] = fit_single_ray_rate(
        fields["mix_beta"], fields["ray_rate_1"], fields["ray_rate_2"])
    return ChannelParams(**fields)


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ParameterValidationError(f"{key}: not a number: {raw!r}") from exc


def mixture_gap_pdf(t, beta: float, rate1: float, rate2: float):
    """Density of the two-component exponential ray-gap mixture."""
    import numpy as np

    t = np.asarray(t, dtype=float)
    return beta * rate1 * np.exp(-rate1 * t) + (1.0 - beta) * rate2 * np.exp(-rate2 * t)


def ray_fit_objective(lam: float, beta: float, rate1: float, rate2: float) -> float:
    """Integrated squared error between the gap mixture and a single
    exponential of rate ``lam``, over t in [0, 10/min(rate1, rate2)].

    Adaptive quadrature at 1e-8 relative tolerance.
    """
    t_max = 10.0 / min(rate1, rate2)

    def diff_sq(t):
        mix = beta * rate1 * math.exp(-rate1 * t) + (1.0 - beta) * rate2 * math.exp(-rate2 * t)
        single = lam * math.exp(-lam * t)
        return (mix - single) ** 2

    value, abserr = quad(diff_sq, 0.0, t_max, epsabs=1e-14, epsrel=1e-8, limit=200)
    if value > 0 and abserr > 1e-6 * max(value, 1e-12):
        raise NumericalError("ray-fit objective quadrature did not converge",
                             state={"lam": lam, "value": value, "abserr": abserr})
    return value


def fit_single_ray_rate(beta: float, rate1: float, rate2: float,
                        tol: float = 1e-6, max_iter: int = 200) -> float:
    """Single-Poisson ray rate minimizing the L2 distance to the mixture.

    Golden-section search on [min(rate1, rate2), max(rate1, rate2)]; the
    objective is smooth and unimodal on that bracket for exponential
    mixtures.  Degenerate mixtures short-circuit exactly.
    """
    if not 0.0 <= beta <= 1.0:
        raise ParameterValidationError(f"mix_beta must lie in [0, 1], got {beta}")
    if rate1 <= 0 or rate2 <= 0:
        raise ParameterValidationError("ray rates must be strictly positive")
    if beta == 1.0 or rate1 == rate2:
        return rate1
    if beta == 0.0:
        return rate2

    lo, hi = min(rate1, rate2), max(rate1, rate2)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = ray_fit_objective(c, beta, rate1, rate2)
    fd = ray_fit_objective(d, beta, rate1, rate2)
    for _ in range(max_iter):
        if b - a < tol:
            return 0.5 * (a + b)
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = ray_fit_objective(c, beta, rate1, rate2)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = ray_fit_objective(d, beta, rate1, rate2)
    raise NumericalError("golden-section search did not converge",
                         state={"bracket": (a, b), "f_inner": (fc, fd), "iterations": max_iter})


def mean_nakagami_m(m0: float, m0_hat: float) -> float:
    """Mean of the lognormal Nakagami m-factor, exp(m0 + m0_hat**2 / 2)."""
    if m0_hat < 0:
        raise ParameterValidationError("m0_hat must be non-negative")
    return math.exp(m0 + 0.5 * m0_hat * m0_hat)
