"""MAP decision rule in full, simplified, and streaming forms.

The optimal rule compares the difference of the two inverse-covariance
quadratic forms against a threshold built from the priors and the two
log-determinants.  Because both covariances share the exponential-correlation
structure, that difference collapses to three running sums: the energy
sum(y**2), the adjacent-lag sum(y[i]*y[i+1]), and the two edge squares.  The
full form, the collapsed form, and an O(1)-per-sample streaming update are
all provided and agree to rounding; the equivalence is enforced by tests.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .kms import KmsMatrix, kms_quadratic_form
from .model import ClassStatistics, SamplingSpec, Scenario
from .simulator import MeasurementSeries, TrialBatch

__all__ = [
    "DetectorSpec",
    "SufficientStatistics",
    "DetectionReport",
    "RocPoint",
    "build_detector",
    "detector_from_scenario",
    "threshold",
    "detect_full",
    "detect_simplified",
    "stream_update",
    "conditional_error",
    "roc_sweep",
    "fit_class_statistics",
    "remove_mean",
]


def _inv_gain(stats: ClassStatistics) -> float:
    # common scale 1 / (alpha * (1 - rho**2)) of the analytic inverse
    return 1.0 / (stats.alpha * (1.0 - stats.rho * stats.rho))


@dataclass(frozen=True)
class DetectorSpec:
    """Precomputed constants of the decision rule for one class pair.

    The test statistic is
    energy_coef * sum(y**2) + lag_coef * sum(y[i] * y[i+1])
    + edge_coef * (y[0]**2 + y[-1]**2),
    compared against :func:`threshold`.  ``horizon`` is the configured
    default series length; detection always uses the actual series length.
    """

    stats1: ClassStatistics
    stats2: ClassStatistics
    energy_coef: float
    lag_coef: float
    edge_coef: float
    log_prior_ratio: float
    horizon: int

    def __post_init__(self):
        for name in ("energy_coef", "lag_coef", "edge_coef", "log_prior_ratio"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")


@dataclass(frozen=True)
class SufficientStatistics:
    """Running sums that are all the detector needs from a series.

    ``first`` and ``last`` hold the raw boundary samples; their squares enter
    the statistic, and the raw last value is what makes the O(1) streaming
    update possible.
    """

    sum_sq: float
    sum_lag: float
    first: float
    last: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError(f"count must be >= 1, got {self.count}")
        # These hold exactly for sums folded from real data (non-negative
        # increments; termwise Cauchy-Schwarz with boundary slack).
        if self.sum_sq < self.first_sq or self.sum_sq < self.last_sq:
            raise ConfigError("sum_sq smaller than a boundary square")
        if abs(self.sum_lag) > self.sum_sq:
            raise ConfigError("adjacent-lag sum exceeds the energy sum")

    @property
    def first_sq(self) -> float:
        return self.first * self.first

    @property
    def last_sq(self) -> float:
        return self.last * self.last

    @classmethod
    def from_series(cls, samples) -> "SufficientStatistics":
        """Batch statistics, implemented as the literal fold of stream_update.

        This guarantees bit-equality between batch and streaming paths.
        """
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 1 or samples.size < 1:
            raise ConfigError("samples must be a non-empty 1-D array")
        state = None
        for y in samples:
            state = stream_update(state, float(y))
        return state


def stream_update(
    state: "SufficientStatistics | None", y_next: float
) -> SufficientStatistics:
    """Fold one new sample into the running sums; ``state=None`` starts a stream."""
    if state is None:
        sq = y_next * y_next
        return SufficientStatistics(
            sum_sq=sq, sum_lag=0.0, first=y_next, last=y_next, count=1
        )
    return SufficientStatistics(
        sum_sq=state.sum_sq + y_next * y_next,
        sum_lag=state.sum_lag + state.last * y_next,
        first=state.first,
        last=y_next,
        count=state.count + 1,
    )


@dataclass(frozen=True)
class DetectionReport:
    """Outcome of one detection: decision, statistic vs threshold, and the
    posterior probability that the decision is wrong."""

    decision: int
    statistic: float
    threshold: float
    margin: float
    conditional_error: float
    samples_used: int

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "margin": self.margin,
            "conditional_error": self.conditional_error,
            "samples_used": self.samples_used,
        }


def build_detector(
    stats1: ClassStatistics,
    stats2: ClassStatistics,
    prior1: float = 0.5,
    horizon: int = 1,
) -> DetectorSpec:
    """Precompute the decision constants for a class pair.

    Identical class statistics are tolerated with a warning: all three
    coefficients become zero and decisions degenerate to a prior comparison.
    """
    if not (0.0 < prior1 < 1.0):
        raise ConfigError(f"prior1 must lie strictly in (0, 1), got {prior1}")
    if stats1.alpha == stats2.alpha and stats1.rho == stats2.rho:
        warnings.warn(
            "class statistics are identical; decisions will follow priors only",
            UserWarning,
            stacklevel=2,
        )
    g1, g2 = _inv_gain(stats1), _inv_gain(stats2)
    r1, r2 = stats1.rho, stats2.rho
    return DetectorSpec(
        stats1=stats1,
        stats2=stats2,
        energy_coef=(1.0 + r1 * r1) * g1 - (1.0 + r2 * r2) * g2,
        lag_coef=2.0 * r2 * g2 - 2.0 * r1 * g1,
        edge_coef=r2 * r2 * g2 - r1 * r1 * g1,
        log_prior_ratio=math.log(prior1 / (1.0 - prior1)),
        horizon=horizon,
    )


def detector_from_scenario(scenario: Scenario) -> DetectorSpec:
    sampling: SamplingSpec = scenario.sampling
    return build_detector(
        scenario.stats1(), scenario.stats2(), sampling.prior1, sampling.horizon
    )


def threshold(spec: DetectorSpec, horizon: int | None = None) -> float:
    """Decision threshold for a series of the given length (default: configured).

    z = 2 * log_prior_ratio + n * ln(alpha2 / alpha1)
      + (n - 1) * ln((1 - rho2**2) / (1 - rho1**2)),
    which equals the prior term plus the log-determinant difference of the
    two covariances.  Linear in n, so consecutive horizons differ by a
    constant increment.
    """
    n = spec.horizon if horizon is None else horizon
    if n < 1:
        raise ConfigError(f"horizon must be >= 1, got {n}")
    s1, s2 = spec.stats1, spec.stats2
    return (
        2.0 * spec.log_prior_ratio
        + n * (math.log(s2.alpha) - math.log(s1.alpha))
        + (n - 1) * (math.log1p(-s2.rho * s2.rho) - math.log1p(-s1.rho * s1.rho))
    )


def _report(spec: DetectorSpec, statistic: float, n: int) -> DetectionReport:
    z = threshold(spec, n)
    margin = z - statistic
    return DetectionReport(
        decision=1 if statistic <= z else 2,  # tie goes to class 1
        statistic=statistic,
        threshold=z,
        margin=margin,
        conditional_error=_conditional_error_from_margin(margin),
        samples_used=n,
    )


def _coerce_samples(y) -> np.ndarray:
    if isinstance(y, MeasurementSeries):
        return y.samples
    samples = np.asarray(y, dtype=float)
    if samples.ndim != 1 or samples.size < 1:
        raise ConfigError("series must be a non-empty 1-D array")
    return samples


def detect_full(spec: DetectorSpec, y) -> DetectionReport:
    """Decide via the difference of the two inverse-covariance quadratic forms.

    O(n) despite being the 'full' matrix form, thanks to the closed-form
    inverses; kept as the reference implementation for the simplified path.
    """
    samples = _coerce_samples(y)
    n = samples.size
    statistic = kms_quadratic_form(
        KmsMatrix(spec.stats1.alpha, spec.stats1.rho, n), samples
    ) - kms_quadratic_form(KmsMatrix(spec.stats2.alpha, spec.stats2.rho, n), samples)
    return _report(spec, statistic, n)


def detect_simplified(spec: DetectorSpec, stats: SufficientStatistics) -> DetectionReport:
    """Decide from the running sums alone (identical decision to detect_full)."""
    statistic = (
        spec.energy_coef * stats.sum_sq
        + spec.lag_coef * stats.sum_lag
        + spec.edge_coef * (stats.first_sq + stats.last_sq)
    )
    return _report(spec, statistic, stats.count)


def _conditional_error_from_margin(margin: float) -> float:
    # exp of a non-positive argument cannot overflow; 0.5 exactly at margin 0
    odds = math.exp(-0.5 * abs(margin))
    return odds / (1.0 + odds)


def conditional_error(spec: DetectorSpec, statistic: float, horizon: int) -> float:
    """Posterior probability the decision at this statistic value is wrong.

    Equals (1 + exp(|z - statistic| / 2))**-1: exactly 0.5 on the decision
    boundary and decaying to 0 as the statistic moves away from it.
    """
    return _conditional_error_from_margin(threshold(spec, horizon) - statistic)


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    false_positive_rate: float
    true_positive_rate: float


def roc_sweep(spec: DetectorSpec, batch: TrialBatch, thresholds) -> list[RocPoint]:
    """Empirical operating points as the decision threshold is varied.

    Class 2 is the 'positive' call: TPR is the fraction of true class-2
    trials decided 2, FPR the fraction of class-1 trials decided 2.  A trial
    is decided 2 when its statistic exceeds the threshold, so lowering the
    threshold relaxes the detector toward more class-2 calls.
    """
    labels = batch.labels()
    if not ((labels == 1).any() and (labels == 2).any()):
        raise ConfigError("ROC sweep needs both classes present in the batch")
    stats = np.array(
        [detect_full(spec, series).statistic for _, series in batch.trials]
    )
    is2 = labels == 2
    points = []
    for thr in thresholds:
        called2 = stats > thr
        points.append(
            RocPoint(
                threshold=float(thr),
                false_positive_rate=float(called2[~is2].mean()),
                true_positive_rate=float(called2[is2].mean()),
            )
        )
    return points


def fit_class_statistics(series_set) -> ClassStatistics:
    """Moment-match (alpha, rho) from archived series of one class.

    alpha_hat pools squared samples over all series; the lag-1 moment pools
    adjacent products.  The denominators differ (n vs n-1 terms per series)
    so each pooled moment is unbiased before the ratio is taken; dividing
    both by n would bias rho_hat low by a factor (n-1)/n.
    """
    sum_sq = 0.0
    sum_lag = 0.0
    n_sq = 0
    n_lag = 0
    for series in series_set:
        samples = _coerce_samples(series)
        sum_sq += float(samples @ samples)
        sum_lag += float(samples[:-1] @ samples[1:])
        n_sq += samples.size
        n_lag += samples.size - 1
    if n_sq < 2:
        raise ConfigError("need at least two samples in total to fit")
    if sum_sq <= 0.0:
        raise ConfigError("degenerate (all-zero) data cannot be fitted")
    if n_lag < 1:
        raise ConfigError("need at least one series with two or more samples")
    alpha_hat = sum_sq / n_sq
    rho_hat = (sum_lag / n_lag) / alpha_hat
    eps = 1e-9  # keep the estimate inside the open interval the model requires
    rho_hat = min(max(rho_hat, eps), 1.0 - eps)
    return ClassStatistics(alpha=alpha_hat, rho=rho_hat)


def remove_mean(series: MeasurementSeries) -> MeasurementSeries:
    """Subtract the sample mean: explicit preprocessing for raw speed data.

    The detector assumes zero-mean deviations; apply this first when feeding
    measured speeds rather than simulated deviations.
    """
    samples = series.samples - series.samples.mean()
    return MeasurementSeries(samples=samples, period=series.period)
