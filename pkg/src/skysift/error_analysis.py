"""Exact detection-error probabilities via characteristic-function inversion.

Under either hypothesis the test statistic is a quadratic form in a Gaussian
vector, i.e. a weighted sum of independent chi-squared(1) variables whose
weights are the eigenvalues of (inverse-covariance difference) times the
hypothesis covariance.  Its CDF is recovered from the characteristic
function by a truncated Fourier-type series controlled by two knobs: the
grid step (resolution error) and the term count (truncation error), both
chosen from Chernoff-style bounds so the combined error stays below a
requested target.

Evaluating the truncated series is its own numerical problem: for one or two
eigenvalues the required term count reaches 1e13.  The series is then split
into a directly-summed head and a tail evaluated exactly-in-effect by
expanding the characteristic function asymptotically in 1/omega and reducing
each order to a pinned power sum (see :mod:`skysift._powersum`).  The split
is validated against brute-force partial sums in the test suite.
"""

import logging
import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import ConfigError, NumericalError
from ._powersum import pinned_power_sum
from .detector import build_detector, threshold
from .kms import KmsMatrix, kms_cholesky_factor, kms_inverse_apply
from .model import ClassStatistics, Scenario

__all__ = [
    "QuadFormSpectrum",
    "AccuracyBudget",
    "ErrorReport",
    "ErrorSurface",
    "q_sigma_eigenvalues",
    "characteristic_function",
    "accuracy_budget",
    "cdf_quadratic_form",
    "cdf_quadratic_form_raw",
    "total_error",
    "error_surface",
]

logger = logging.getLogger(__name__)

# relative size under which an eigenvalue is treated as structurally zero
DROP_TOLERANCE = 1e-12

# evaluation noise is kept three orders below the requested accuracy target
_EVAL_SLACK = 1e-3

_DIRECT_CAP = 1 << 21  # sum series directly up to this many terms
_HEAD_MIN = 1 << 12
_HEAD_MAX = 1 << 26
_TAIL_MAX_ORDER = 16
_CHUNK = 1 << 20


@dataclass(frozen=True, eq=False)
class QuadFormSpectrum:
    """Eigenvalues of the statistic's defining matrix under one hypothesis."""

    eigenvalues: np.ndarray
    horizon: int

    def __post_init__(self):
        eigs = np.asarray(self.eigenvalues, dtype=float)
        if eigs.ndim != 1 or eigs.size != self.horizon:
            raise ConfigError("spectrum must hold exactly `horizon` eigenvalues")
        if not np.all(np.isfinite(eigs)):
            raise ConfigError("eigenvalues must be finite")
        eigs = eigs.copy()
        eigs.flags.writeable = False
        object.__setattr__(self, "eigenvalues", eigs)

    def kept(self) -> np.ndarray:
        """Eigenvalues above the relative drop threshold (see DROP_TOLERANCE)."""
        eigs = self.eigenvalues
        absmax = float(np.max(np.abs(eigs))) if eigs.size else 0.0
        if absmax == 0.0:
            return eigs[:0]
        return eigs[np.abs(eigs) >= DROP_TOLERANCE * absmax]


@dataclass(frozen=True)
class AccuracyBudget:
    """Resolution and truncation parameters certifying a CDF accuracy target.

    ``n_terms_options`` holds the two published forms of the truncation
    bound, which differ in their constant; ``n_terms`` is their maximum.
    ``kept_order`` is the number of eigenvalues surviving the near-zero drop;
    it, not the raw horizon, sets the decay order in the truncation bound.
    """

    target: float
    chernoff_t: float
    grid_step: float
    n_terms: int
    chernoff_bound: float
    n_terms_options: tuple
    lambda_abs_max: float
    lambda_abs_min: float
    kept_order: int
    drop_tolerance: float = DROP_TOLERANCE

    def __post_init__(self):
        if not (0.0 < self.target < 1.0):
            raise ConfigError(f"target must lie in (0, 1), got {self.target}")
        if not (0.0 < self.chernoff_t < 1.0 / (2.0 * self.lambda_abs_max)):
            raise ConfigError("chernoff_t outside (0, 1/(2*max|eigenvalue|))")
        if self.grid_step <= 0.0 or self.n_terms < 1:
            raise ConfigError("grid_step must be positive and n_terms >= 1")

    def refined(self, factor: int = 4) -> "AccuracyBudget":
        """Same budget with the grid ``factor`` times finer and longer.

        Used by the self-consistency check: a sound budget changes the
        reported probability by less than the target under refinement.
        """
        return AccuracyBudget(
            target=self.target,
            chernoff_t=self.chernoff_t,
            grid_step=self.grid_step / factor,
            n_terms=self.n_terms * factor,
            chernoff_bound=self.chernoff_bound,
            n_terms_options=self.n_terms_options,
            lambda_abs_max=self.lambda_abs_max,
            lambda_abs_min=self.lambda_abs_min,
            kept_order=self.kept_order,
            drop_tolerance=self.drop_tolerance,
        )

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "chernoff_t": self.chernoff_t,
            "grid_step": self.grid_step,
            "n_terms": self.n_terms,
            "chernoff_bound": self.chernoff_bound,
            "n_terms_options": list(self.n_terms_options),
            "lambda_abs_max": self.lambda_abs_max,
            "lambda_abs_min": self.lambda_abs_min,
            "kept_order": self.kept_order,
            "drop_tolerance": self.drop_tolerance,
        }


def q_sigma_eigenvalues(
    stats1: ClassStatistics,
    stats2: ClassStatistics,
    horizon: int,
    hypothesis: int,
) -> QuadFormSpectrum:
    """Spectrum of (inverse-cov difference) times the hypothesis covariance.

    Computed on the symmetric similar matrix L' (Sigma1^-1 - Sigma2^-1) L,
    where L is the analytic Cholesky factor of the hypothesis covariance.
    Similarity preserves the spectrum while the symmetric eigensolver
    guarantees real eigenvalues; the nonsymmetric product would return
    spurious imaginary parts.
    """
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    if hypothesis not in (1, 2):
        raise ConfigError(f"hypothesis must be 1 or 2, got {hypothesis}")
    stats_h = stats1 if hypothesis == 1 else stats2
    lower = kms_cholesky_factor(KmsMatrix(stats_h.alpha, stats_h.rho, horizon))
    m1 = KmsMatrix(stats1.alpha, stats1.rho, horizon)
    m2 = KmsMatrix(stats2.alpha, stats2.rho, horizon)
    q_lower = kms_inverse_apply(m1, lower) - kms_inverse_apply(m2, lower)
    sym = lower.T @ q_lower
    sym = (sym + sym.T) / 2.0  # remove rounding asymmetry before eigvalsh
    return QuadFormSpectrum(eigenvalues=np.linalg.eigvalsh(sym), horizon=horizon)


def _phi_arrays(eigenvalues: np.ndarray, u: np.ndarray):
    """log-magnitude and phase of the characteristic function on a grid.

    Accumulated per eigenvalue as -1/4 * log1p(4 u^2 lam^2) and
    1/2 * atan(2 u lam): log-polar form never touches a complex square
    root, so there are no branch-cut discontinuities to manage.
    """
    logmag = np.zeros_like(u)
    phase = np.zeros_like(u)
    for lam in eigenvalues:
        x = 2.0 * u * lam
        logmag -= 0.25 * np.log1p(x * x)
        phase += 0.5 * np.arctan(x)
    return logmag, phase


def characteristic_function(spectrum: QuadFormSpectrum, omega: float) -> complex:
    """E[exp(1j*omega*Z)] for the weighted chi-squared statistic Z."""
    logmag, phase = _phi_arrays(
        spectrum.eigenvalues, np.atleast_1d(np.asarray(omega, dtype=float))
    )
    value = np.exp(logmag) * (np.cos(phase) + 1j * np.sin(phase))
    return complex(value[0])


def accuracy_budget(
    spectrum: QuadFormSpectrum, z: float, target: float = 1e-6
) -> AccuracyBudget:
    """Choose grid step and term count so resolution + truncation error <= target.

    The Chernoff parameter t = 1/(4 max|lam|) keeps every factor 1 - 2*s*lam
    positive over s in [-t, t].  The grid step splits half the target into
    the resolution (aliasing) term via the bound
    grid_step = 2*pi*t / (log(bound) + log(2/target)); the term count takes
    the more conservative of the two published truncation-bound constants.
    """
    if not (0.0 < target < 1.0):
        raise ConfigError(f"target must lie in (0, 1), got {target}")
    kept = spectrum.kept()
    if kept.size == 0:
        raise ConfigError(
            "spectrum has no nonzero eigenvalues; the statistic is degenerate "
            "and the error is determined by the priors alone"
        )
    abs_max = float(np.max(np.abs(kept)))
    abs_min = float(np.min(np.abs(kept)))
    k = int(kept.size)
    t = 1.0 / (4.0 * abs_max)
    # log of max(e^{zt} prod(1-2t*lam)^(-1/2), e^{-zt} prod(1+2t*lam)^(-1/2});
    # the max of the two is always >= 1 (their product is >= 1), so the
    # grid-step denominator below is strictly positive.
    log_bound = max(
        z * t - 0.5 * float(np.sum(np.log1p(-2.0 * t * kept))),
        -z * t - 0.5 * float(np.sum(np.log1p(2.0 * t * kept))),
    )
    grid_step = 2.0 * math.pi * t / (log_bound + math.log(2.0 / target))
    base = 1.0 / (2.0 * grid_step * abs_min)
    n_a = math.ceil(base * (math.pi / 4.0 * target * k) ** (-2.0 / k))
    n_b = math.ceil(base * (k * math.pi / 2.0 * target) ** (-2.0 / k))
    try:
        chernoff_bound = math.exp(log_bound)
    except OverflowError:
        chernoff_bound = math.inf
    return AccuracyBudget(
        target=target,
        chernoff_t=t,
        grid_step=grid_step,
        n_terms=max(n_a, n_b),
        chernoff_bound=chernoff_bound,
        n_terms_options=(n_a, n_b),
        lambda_abs_max=abs_max,
        lambda_abs_min=abs_min,
        kept_order=k,
    )


def _direct_partial_sum(
    eigenvalues: np.ndarray, z: float, delta: float, i_first: int, i_last: int
) -> float:
    """sum over i of Im[phi(u_i) e^{-j z u_i}] / (i + 1/2), u_i = delta*(i+1/2)."""
    total = 0.0
    for start in range(i_first, i_last + 1, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, i_last + 1), dtype=float) + 0.5
        u = delta * idx
        logmag, phase = _phi_arrays(eigenvalues, u)
        total += float(np.sum(np.exp(logmag) * np.sin(phase - z * u) / idx))
    return total


def _tail_series_coefficients(kept: np.ndarray, order: int):
    """Asymptotic expansion phi(u) ~ A * u^(-k/2) * sum_m g_m u^(-m).

    Per factor, (1 - 2j*lam*u)^(-1/2) = (-2j*lam)^(-1/2) u^(-1/2)
    * (1 - 1/(2j*lam*u))^(-1/2); the principal branch of each prefactor
    matches the log-polar phase convention because Re(1 - 2j*lam*u) = 1 > 0.
    The g_m come from convolving the per-factor binomial series.
    """
    prefactor = complex(1.0)
    g = np.zeros(order + 1, dtype=complex)
    g[0] = 1.0
    central = np.array([comb(2 * m, m) / 4.0**m for m in range(order + 1)])
    powers = np.arange(order + 1)
    for lam in kept:
        prefactor *= (-2j * lam) ** (-0.5)
        g = np.convolve(g, central * (1.0 / (2j * lam)) ** powers)[: order + 1]
    return prefactor, g


def _tail_sum(
    kept: np.ndarray,
    z: float,
    delta: float,
    i_first: int,
    i_last: int,
    tol: float,
) -> float:
    """Tail of the inversion series via the asymptotic expansion + power sums."""
    k = kept.size
    prefactor, g = _tail_series_coefficients(kept, _TAIL_MAX_ORDER)
    freq = z * delta
    per_term_tol = tol / (2.0 * (_TAIL_MAX_ORDER + 1))
    total = 0.0
    for m in range(_TAIL_MAX_ORDER + 1):
        sigma = 0.5 * k + m + 1.0
        coef = prefactor * g[m] * delta ** (-(0.5 * k + m))
        if coef == 0:
            continue
        p_sum = pinned_power_sum(
            sigma, i_first, i_last, freq, per_term_tol / abs(coef)
        )
        total += (coef * p_sum).imag
        if abs(coef) * abs(p_sum) < tol / 8.0:
            return total
    raise NumericalError(
        f"tail expansion did not converge within {_TAIL_MAX_ORDER + 1} orders "
        f"(k={k}, delta={delta:g}, start={i_first})"
    )


def _inversion_sum(
    spectrum: QuadFormSpectrum,
    z: float,
    delta: float,
    n_terms: int,
    tol: float,
    direct_cap: int = _DIRECT_CAP,
) -> float:
    """The full truncated series sum_{i=0}^{N} Im[...]/(i+1/2), to within tol."""
    eigs = spectrum.eigenvalues
    kept = spectrum.kept()
    if kept.size == 0:
        raise ConfigError("cannot invert a spectrum with no nonzero eigenvalues")
    if n_terms <= direct_cap:
        return _direct_partial_sum(eigs, z, delta, 0, n_terms)

    abs_min = float(np.min(np.abs(kept)))
    # start the tail where the expansion parameter 1/(2|lam| u) is <= 0.05
    head_len = math.ceil(10.0 / (abs_min * delta))
    head_len = max(head_len, _HEAD_MIN)
    if kept.size != eigs.size:
        # dropped eigenvalues are treated as exactly zero in the tail; make
        # sure they would indeed be invisible there
        drop_max = float(
            np.max(np.abs(eigs[np.abs(eigs) < DROP_TOLERANCE * np.max(np.abs(eigs))]))
        )
        u_max = delta * (n_terms + 0.5)
        if 2.0 * u_max * drop_max > 1e-9:
            raise NumericalError(
                "near-zero eigenvalues are not negligible over the tail range"
            )
    if head_len > _HEAD_MAX:
        head_len = _HEAD_MAX
        u_head = delta * (head_len + 0.5)
        logmag, _ = _phi_arrays(eigs, np.array([u_head]))
        tail_bound = math.exp(float(logmag[0])) * math.log(
            (n_terms + 1.5) / (head_len + 0.5)
        )
        if tail_bound > tol:
            raise NumericalError(
                "series tail is neither expandable nor negligible "
                f"(bound {tail_bound:g} vs tolerance {tol:g})"
            )
        return _direct_partial_sum(eigs, z, delta, 0, head_len)
    head = _direct_partial_sum(eigs, z, delta, 0, head_len - 1)
    tail = _tail_sum(kept, z, delta, head_len, n_terms, tol)
    return head + tail


def cdf_quadratic_form_raw(
    spectrum: QuadFormSpectrum, z: float, budget: AccuracyBudget
) -> float:
    """Unclamped truncated-series value of Pr(Z <= z); may leave [0, 1] by
    up to the accuracy target."""
    series = _inversion_sum(
        spectrum,
        z,
        budget.grid_step,
        budget.n_terms,
        tol=_EVAL_SLACK * budget.target * math.pi,
    )
    return 0.5 - series / math.pi


def cdf_quadratic_form(
    spectrum: QuadFormSpectrum, z: float, budget: AccuracyBudget
) -> float:
    """Pr(Z <= z) within the budget's target, clamped into [0, 1].

    The raw value is computed first and logged so excursions outside [0, 1]
    (which the truncation bounds allow, up to the target) stay observable.
    """
    raw = cdf_quadratic_form_raw(spectrum, z, budget)
    clamped = min(max(raw, 0.0), 1.0)
    if raw != clamped:
        logger.debug("cdf excursion clamped: raw=%r at z=%r", raw, z)
    return clamped


@dataclass(frozen=True)
class ErrorReport:
    """Total a-priori error probability and its per-conclusion components.

    miss_given_1 is the probability a class-1 series is called 2;
    miss_given_2 the probability a class-2 series is called 1.  When the two
    classes coincide the statistic is identically zero and the report is the
    degenerate prior-only result (budgets are None in that case).
    """

    total_error: float
    miss_given_1: float
    miss_given_2: float
    prior1: float
    prior2: float
    threshold: float
    budget_given_1: "AccuracyBudget | None"
    budget_given_2: "AccuracyBudget | None"
    raw_cdf_given_1: float
    raw_cdf_given_2: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "total_error": self.total_error,
            "miss_given_1": self.miss_given_1,
            "miss_given_2": self.miss_given_2,
            "prior1": self.prior1,
            "prior2": self.prior2,
            "threshold": self.threshold,
            "budget_given_1": None
            if self.budget_given_1 is None
            else self.budget_given_1.to_dict(),
            "budget_given_2": None
            if self.budget_given_2 is None
            else self.budget_given_2.to_dict(),
            "raw_cdf_given_1": self.raw_cdf_given_1,
            "raw_cdf_given_2": self.raw_cdf_given_2,
            "degenerate": self.degenerate,
        }


def total_error(scenario: Scenario, target: float = 1e-6) -> ErrorReport:
    """Exact a-priori probability that the MAP decision is wrong.

    Combines the two conditional CDF evaluations at the decision threshold:
    prior2 * Pr(decide 1 | class 2) + prior1 * Pr(decide 2 | class 1).
    Identical classes short-circuit: the decision is then the larger prior
    and the error is exactly min(prior1, prior2).
    """
    stats1, stats2 = scenario.stats1(), scenario.stats2()
    sampling = scenario.sampling
    p1, p2 = sampling.prior1, sampling.prior2
    kf = sampling.horizon

    spectrum1 = q_sigma_eigenvalues(stats1, stats2, kf, hypothesis=1)
    spectrum2 = q_sigma_eigenvalues(stats1, stats2, kf, hypothesis=2)

    if spectrum1.kept().size == 0 or spectrum2.kept().size == 0:
        # degenerate pair: the statistic carries no information
        decide1 = p1 >= p2  # zero statistic vs threshold 2*ln(p1/p2)
        z = 2.0 * math.log(p1 / p2)
        return ErrorReport(
            total_error=p2 if decide1 else p1,
            miss_given_1=0.0 if decide1 else 1.0,
            miss_given_2=1.0 if decide1 else 0.0,
            prior1=p1,
            prior2=p2,
            threshold=z,
            budget_given_1=None,
            budget_given_2=None,
            raw_cdf_given_1=1.0 if decide1 else 0.0,
            raw_cdf_given_2=1.0 if decide1 else 0.0,
            degenerate=True,
        )

    detector = build_detector(stats1, stats2, p1, kf)
    z = threshold(detector, kf)

    budget1 = accuracy_budget(spectrum1, z, target)
    budget2 = accuracy_budget(spectrum2, z, target)
    raw1 = cdf_quadratic_form_raw(spectrum1, z, budget1)
    raw2 = cdf_quadratic_form_raw(spectrum2, z, budget2)
    cdf1 = min(max(raw1, 0.0), 1.0)
    cdf2 = min(max(raw2, 0.0), 1.0)
    return ErrorReport(
        total_error=p2 * cdf2 + p1 * (1.0 - cdf1),
        miss_given_1=1.0 - cdf1,
        miss_given_2=cdf2,
        prior1=p1,
        prior2=p2,
        threshold=z,
        budget_given_1=budget1,
        budget_given_2=budget2,
        raw_cdf_given_1=raw1,
        raw_cdf_given_2=raw2,
    )


@dataclass(frozen=True, eq=False)
class ErrorSurface:
    """Total error over a grid of class-2/class-1 parameter ratios."""

    gain_ratios: np.ndarray
    mass_ratios: np.ndarray
    total_errors: np.ndarray  # shape (len(mass_ratios), len(gain_ratios))

    def write_csv(self, path) -> None:
        """Matrix CSV: rows are mass ratios, columns gain ratios, cells
        log10 of the total error."""
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["mass_ratio\\gain_ratio"] + [repr(float(g)) for g in self.gain_ratios]
            )
            for i, mr in enumerate(self.mass_ratios):
                writer.writerow(
                    [repr(float(mr))]
                    + [repr(float(np.log10(e))) for e in self.total_errors[i]]
                )


def error_surface(
    scenario: Scenario,
    gain_ratios,
    mass_ratios,
    target: float = 1e-6,
) -> ErrorSurface:
    """Sweep class 2 as a (gain, mass) ratio of class 1 and tabulate the error.

    The base scenario's class-1 parameters, noise, and sampling are held
    fixed; each grid cell rebuilds class 2 at the given ratios.  The (1, 1)
    cell makes the classes identical, so it returns min(prior1, prior2).
    """
    gain_ratios = np.asarray(list(gain_ratios), dtype=float)
    mass_ratios = np.asarray(list(mass_ratios), dtype=float)
    if np.any(gain_ratios <= 0) or np.any(mass_ratios <= 0):
        raise ConfigError("ratio grids must be strictly positive")
    base = scenario.to_dict()
    errors = np.empty((mass_ratios.size, gain_ratios.size))
    for i, mr in enumerate(mass_ratios):
        for j, gr in enumerate(gain_ratios):
            cell = dict(
                base,
                m2=base["m1"] * float(mr),
                k2=base["k1"] * float(gr),
            )
            errors[i, j] = total_error(Scenario.from_dict(cell), target).total_error
    return ErrorSurface(
        gain_ratios=gain_ratios, mass_ratios=mass_ratios, total_errors=errors
    )
