"""Ground-truth fading channel: Nakagami-m fading on top of exponential path
loss, with optional additive Gaussian noise.

The channel is described in two domains. In the amplitude domain the received
signal magnitude follows a Nakagami-m law whose mean square equals the
path-loss power; in the power domain the received power follows the matching
gamma law. A draw in the amplitude domain is exactly the square root of the
power-domain draw at the same quantile, and sampling is done by inverse-CDF
transform of a uniform quantile, so every sample is a deterministic function
of (params, d, r).

All analytic operations are pure; sampling from noise takes a caller-owned
numpy Generator (one stream per caller, never shared).
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError, ValidationError


class Approach(enum.Enum):
    """Which received quantity the channel is modeling.

    AMPLITUDE: signal voltage magnitude (Nakagami density), signed I/Q use.
    POWER: received power in watts (gamma density).
    """

    AMPLITUDE = "amplitude"
    POWER = "power"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"amplitude": cls.AMPLITUDE, "approach1": cls.AMPLITUDE,
                   "power": cls.POWER, "approach2": cls.POWER}
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        if key not in aliases:
            raise ValidationError(f"unknown approach {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class ChannelParams:
    """Fading shape and path-loss constants.

    m: fading shape (>= 0.5, m=1 reduces the amplitude law to Rayleigh)
    eta: path-loss gain
    d0: reference distance in meters
    alpha: path-loss exponent
    pt: transmit power in watts
    """

    m: float
    eta: float
    d0: float
    alpha: float
    pt: float

    def __post_init__(self):
        vals = (self.m, self.eta, self.d0, self.alpha, self.pt)
        if not all(np.isfinite(v) for v in vals):
            raise ValidationError("channel parameters must be finite")
        if self.m < 0.5:
            raise ValidationError(f"fading shape m must be >= 0.5, got {self.m}")
        if self.d0 <= 0 or self.pt <= 0 or self.eta <= 0:
            raise ValidationError("d0, pt and eta must be positive")

    def with_m(self, m):
        return ChannelParams(m=float(m), eta=self.eta, d0=self.d0,
                             alpha=self.alpha, pt=self.pt)

    def with_pt(self, pt):
        return ChannelParams(m=self.m, eta=self.eta, d0=self.d0,
                             alpha=self.alpha, pt=float(pt))

    def to_dict(self):
        return {"m": self.m, "eta": self.eta, "d0": self.d0,
                "alpha": self.alpha, "pt": self.pt}

    @classmethod
    def from_dict(cls, d):
        return cls(m=float(d["m"]), eta=float(d["eta"]), d0=float(d["d0"]),
                   alpha=float(d["alpha"]), pt=float(d["pt"]))


@dataclass(frozen=True)
class NoiseParams:
    """Additive Gaussian receiver noise.

    mean and variance are quoted in the rescaled unit system implied by
    unit_scale (the same convention the path-loss gain is quoted in when the
    experiment rescales small powers for convenience); the watt-domain noise
    distribution is Normal(mean, variance / unit_scale).
    """

    enabled: bool = False
    mean: float = 0.0
    variance: float = 0.0
    unit_scale: float = 1e14

    def __post_init__(self):
        if self.variance < 0:
            raise ValidationError("noise variance must be >= 0")
        if self.unit_scale <= 0:
            raise ValidationError("unit_scale must be > 0")
        if not all(np.isfinite(v) for v in (self.mean, self.variance,
                                            self.unit_scale)):
            raise ValidationError("noise parameters must be finite")

    @property
    def watt_std(self):
        """Standard deviation of the watt-domain noise distribution."""
        return float(np.sqrt(self.variance / self.unit_scale))

    def to_dict(self):
        return {"enabled": self.enabled, "mean": self.mean,
                "variance": self.variance, "unit_scale": self.unit_scale}

    @classmethod
    def from_dict(cls, d):
        return cls(enabled=bool(d["enabled"]), mean=float(d["mean"]),
                   variance=float(d["variance"]),
                   unit_scale=float(d["unit_scale"]))


def _check_distance(d):
    d_arr = np.asarray(d, dtype=float)
    if d_arr.size and (np.any(~np.isfinite(d_arr)) or np.any(d_arr <= 0.0)):
        raise DomainError("distance d must be finite and > 0")
    return d_arr


def path_loss(params: ChannelParams, d):
    """Mean received power pt * eta * (d0/d)**alpha, strictly decreasing in d."""
    d_arr = _check_distance(d)
    out = params.pt * params.eta * (params.d0 / d_arr) ** params.alpha
    return float(out) if out.ndim == 0 else out


def pdf(params: ChannelParams, approach: Approach, d, x):
    """Density of the received value at distance d.

    AMPLITUDE: 2/Gamma(m) * (m/pbar)^m * x^(2m-1) * exp(-m x^2 / pbar)
    POWER:     1/Gamma(m) * (m/pbar)^m * x^(m-1)  * exp(-m x   / pbar)
    """
    x_arr, scalar = _as_nonneg(x, "pdf")
    pbar = path_loss(params, d)
    m = params.m
    log_norm = m * np.log(m / pbar) - specfun.ln_gamma(m)
    with np.errstate(divide="ignore"):
        log_x = np.log(x_arr)
    if approach is Approach.AMPLITUDE:
        log_f = np.log(2.0) + log_norm + (2.0 * m - 1.0) * log_x \
            - m * np.square(x_arr) / pbar
    else:
        log_f = log_norm + (m - 1.0) * log_x - m * x_arr / pbar
    with np.errstate(over="ignore"):
        out = np.exp(log_f)
    return float(out) if scalar else out


def cdf(params: ChannelParams, approach: Approach, d, x):
    """CDF of the received value: the regularized lower incomplete gamma of
    m*x/pbar (power) or m*x^2/pbar (amplitude)."""
    x_arr, scalar = _as_nonneg(x, "cdf")
    pbar = path_loss(params, d)
    m = params.m
    if approach is Approach.AMPLITUDE:
        y = m * np.square(x_arr) / pbar
    else:
        y = m * x_arr / pbar
    out = specfun.reg_lower_gamma(m, y)
    return float(out) if scalar else np.asarray(out)


def sample_received(params: ChannelParams, approach: Approach, d, r,
                    tol: specfun.Tolerance = specfun.DEFAULT_TOLERANCE):
    """Inverse-CDF sample of the received value at quantile r in [0, 1).

    Deterministic in (params, d, r); the amplitude-domain sample is the square
    root of the power-domain sample at the same quantile.
    """
    r_arr = np.asarray(r, dtype=float)
    scalar = r_arr.ndim == 0
    if r_arr.size and (np.any(np.isnan(r_arr)) or np.any(r_arr < 0.0)
                       or np.any(r_arr >= 1.0)):
        raise DomainError("quantile r must satisfy 0 <= r < 1")
    pbar = path_loss(params, d)
    m = params.m
    power = (pbar / m) * specfun.inv_reg_lower_gamma(m, r_arr, tol)
    out = np.sqrt(power) if approach is Approach.AMPLITUDE else power
    return float(out) if scalar else np.asarray(out)


def sample_noise(noise: NoiseParams, rng: np.random.Generator, size=None):
    """Draw additive noise in watts from the stream rng.

    The draw is Normal(mean, variance/unit_scale); see NoiseParams for the
    unit convention. Raises if noise is disabled.
    """
    if not noise.enabled:
        raise ValidationError("sample_noise called with disabled noise")
    return rng.normal(loc=noise.mean, scale=noise.watt_std, size=size)


def _amplitude_mean_factor(m):
    """Gamma(m + 1/2) / Gamma(m), the Nakagami amplitude mean in units of
    sqrt(pbar/m)."""
    return np.exp(specfun.ln_gamma(m + 0.5) - specfun.ln_gamma(m))


def ideal_mean(params: ChannelParams, approach: Approach, d):
    """Closed-form mean of the received value at distance d."""
    pbar = path_loss(params, d)
    if approach is Approach.POWER:
        return pbar
    return _amplitude_mean_factor(params.m) * np.sqrt(pbar / params.m)


def ideal_var(params: ChannelParams, approach: Approach, d):
    """Closed-form variance of the received value at distance d."""
    pbar = path_loss(params, d)
    m = params.m
    if approach is Approach.POWER:
        return pbar ** 2 / m
    return pbar * (1.0 - _amplitude_mean_factor(m) ** 2 / m)


def _as_nonneg(x, opname):
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    if arr.size and (np.any(np.isnan(arr)) or np.any(arr < 0.0)):
        raise DomainError(f"{opname} requires x >= 0")
    return arr, scalar
