"""Physical model parameters and the exact sampled covariance structure.

A feedback-controlled object holding a constant reference speed responds to
white-noise disturbance as a first-order (Ornstein-Uhlenbeck) process.  The
velocity deviation sampled every ``period`` seconds is then a stationary
Gaussian AR(1) sequence whose covariance is fully described by two numbers
per class: the stationary variance ``alpha`` and the one-step correlation
``rho``.  Everything downstream (simulation, detection, error analysis)
consumes only those two numbers.
"""

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "IntruderParams",
    "NoiseSpec",
    "SamplingSpec",
    "ClassStatistics",
    "Scenario",
    "class_statistics",
    "covariance_matrix",
    "continuous_autocorrelation",
]


@dataclass(frozen=True)
class IntruderParams:
    """Mass and feedback gain of one intruder class (consistent, unit-free)."""

    mass: float
    gain: float
    label: int

    def __post_init__(self):
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ConfigError(f"mass must be positive and finite, got {self.mass}")
        if not (math.isfinite(self.gain) and self.gain > 0):
            raise ConfigError(f"gain must be positive and finite, got {self.gain}")
        if self.label not in (1, 2):
            raise ConfigError(f"label must be 1 or 2, got {self.label}")


@dataclass(frozen=True)
class NoiseSpec:
    """Intensity of the zero-mean white disturbance shared by both classes."""

    intensity: float

    def __post_init__(self):
        if not (math.isfinite(self.intensity) and self.intensity > 0):
            raise ConfigError(
                f"noise intensity must be positive and finite, got {self.intensity}"
            )


@dataclass(frozen=True)
class SamplingSpec:
    """Sampling period, observation horizon, and class priors."""

    period: float
    horizon: int
    prior1: float

    def __post_init__(self):
        if not (math.isfinite(self.period) and self.period > 0):
            raise ConfigError(f"period must be positive and finite, got {self.period}")
        if not (isinstance(self.horizon, int) and self.horizon >= 1):
            raise ConfigError(f"horizon must be an integer >= 1, got {self.horizon}")
        if not (0.0 < self.prior1 < 1.0):
            raise ConfigError(f"prior1 must lie strictly in (0, 1), got {self.prior1}")

    @property
    def prior2(self) -> float:
        return 1.0 - self.prior1


@dataclass(frozen=True)
class ClassStatistics:
    """Stationary variance and one-step correlation of the sampled deviations."""

    alpha: float
    rho: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ConfigError(f"alpha must be positive and finite, got {self.alpha}")
        # rho = 1 would make the sampled covariance singular; rejected outright.
        if not (0.0 < self.rho < 1.0):
            raise ConfigError(f"rho must lie strictly in (0, 1), got {self.rho}")


def class_statistics(
    params: IntruderParams, noise: NoiseSpec, sampling: SamplingSpec
) -> ClassStatistics:
    """Map (mass, gain, noise intensity, period) to the sampled AR(1) law.

    alpha = q / (2 * gain * mass) is the stationary variance of the velocity
    deviation; rho = exp(-(gain / mass) * period) is the correlation between
    consecutive samples.  Both follow from sampling the stationary response
    of the first-order dynamics exactly, with no discretization error.
    """
    alpha = noise.intensity / (2.0 * params.gain * params.mass)
    rho = math.exp(-(params.gain / params.mass) * sampling.period)
    return ClassStatistics(alpha=alpha, rho=rho)


def covariance_matrix(stats: ClassStatistics, horizon: int) -> np.ndarray:
    """Dense covariance of the sampled series: entry (i, j) = alpha * rho**|i-j|.

    Symmetric Toeplitz with exponentially decaying bands; positive definite
    for 0 < rho < 1.  Intended for oracles and eigenvalue work, not for the
    detector path, which never materializes the dense matrix.
    """
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    idx = np.arange(horizon)
    return stats.alpha * stats.rho ** np.abs(idx[:, None] - idx[None, :])


def continuous_autocorrelation(
    params: IntruderParams, noise: NoiseSpec, lag: float
) -> float:
    """Autocorrelation of the continuous-time stationary velocity deviation.

    Returns q / (2*gain*mass) * exp(-(gain/mass) * |lag|).  Sampling this at
    lag = n * period reproduces the entries of :func:`covariance_matrix`.
    """
    scale = noise.intensity / (2.0 * params.gain * params.mass)
    return scale * math.exp(-(params.gain / params.mass) * abs(lag))


_CONFIG_DEFAULTS = {
    "m1": 1.0,
    "k1": 1.0,
    "m2": 1.0,
    "k2": 3.0,
    "q": 1.0,
    "T": 0.5,
    "kf": 20,
    "prior1": 0.5,
}


@dataclass(frozen=True)
class Scenario:
    """Complete two-class problem description: both intruders, noise, sampling."""

    intruder1: IntruderParams
    intruder2: IntruderParams
    noise: NoiseSpec
    sampling: SamplingSpec

    def stats1(self) -> ClassStatistics:
        return class_statistics(self.intruder1, self.noise, self.sampling)

    def stats2(self) -> ClassStatistics:
        return class_statistics(self.intruder2, self.noise, self.sampling)

    @classmethod
    def from_dict(cls, raw: dict) -> "Scenario":
        """Build from a config mapping with keys m1, k1, m2, k2, q, T, kf, prior1.

        Missing keys take the built-in defaults; unknown keys are rejected so
        that typos fail loudly instead of silently keeping a default.
        """
        unknown = set(raw) - set(_CONFIG_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged = {**_CONFIG_DEFAULTS, **raw}
        if isinstance(merged["kf"], bool):  # bool would pass the int() check below
            raise ConfigError(f"kf must be an integer, got {merged['kf']!r}")
        try:
            kf = int(merged["kf"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"kf must be an integer, got {merged['kf']!r}") from exc
        if kf != merged["kf"]:
            raise ConfigError(f"kf must be an integer, got {merged['kf']!r}")
        def as_float(key):
            value = merged[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"config key {key!r} must be a number, got {value!r}")
            return float(value)

        return cls(
            intruder1=IntruderParams(mass=as_float("m1"), gain=as_float("k1"), label=1),
            intruder2=IntruderParams(mass=as_float("m2"), gain=as_float("k2"), label=2),
            noise=NoiseSpec(intensity=as_float("q")),
            sampling=SamplingSpec(
                period=as_float("T"), horizon=kf, prior1=as_float("prior1")
            ),
        )

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "Scenario":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must contain a JSON object")
        return cls.from_dict(raw)

    @classmethod
    def default(cls) -> "Scenario":
        return cls.from_dict({})

    def to_dict(self) -> dict:
        return {
            "m1": self.intruder1.mass,
            "k1": self.intruder1.gain,
            "m2": self.intruder2.mass,
            "k2": self.intruder2.gain,
            "q": self.noise.intensity,
            "T": self.sampling.period,
            "kf": self.sampling.horizon,
            "prior1": self.sampling.prior1,
        }
