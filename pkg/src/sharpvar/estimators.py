"""Variance estimators computable from one observed experiment.

Every public function here is a thin wrapper around :func:`estimate_batch`,
which evaluates all estimators for a stack of experiments sharing the same
arm sizes.  Outcomes are sorted inside each arm before any reduction, so the
results do not depend on the order in which units are listed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidDesign, InvalidInput
from .normal import inverse_normal_cdf
from .partition import build_partition
from .population import INFINITE, ExperimentDesign, PopulationSize, as_outcome_vector

__all__ = [
    "ConfidenceInterval",
    "ObservedExperiment",
    "VarianceEstimateSet",
    "cochran_variance",
    "difference_in_means",
    "estimate_all",
    "estimate_batch",
    "infinite_population_variance",
    "neyman_bounds",
    "neyman_conservative",
    "sharp_covariance_bounds",
    "sharp_variance_bounds",
    "wald_interval",
]

DEFAULT_LEVEL = 0.95

# names of the variance estimates that get clamped at zero
VARIANCE_FIELDS = ("v_a", "v_b_plus", "v_b_minus", "v_high", "v_low")
# estimates reported with a Wald interval
CI_BASES_ESTIMATE = ("v_a", "v_b_plus", "v_high")


@dataclass(frozen=True)
class ObservedExperiment:
    """Observed outcomes of the treated arm (``yt``) and control arm (``yc``).

    ``N`` defaults to the number of experimental units (a census).
    """

    yt: np.ndarray
    yc: np.ndarray
    N: Optional[PopulationSize] = None

    def __post_init__(self):
        yt = as_outcome_vector(self.yt, "yt")
        yc = as_outcome_vector(self.yc, "yc")
        object.__setattr__(self, "yt", yt)
        object.__setattr__(self, "yc", yc)
        if self.N is None:
            object.__setattr__(self, "N", yt.size + yc.size)
        self.design  # validates arm sizes and N >= n

    @property
    def design(self) -> ExperimentDesign:
        return ExperimentDesign(self.N, self.n, self.m)

    @property
    def m(self) -> int:
        return self.yt.size

    @property
    def k(self) -> int:
        return self.yc.size

    @property
    def n(self) -> int:
        return self.yt.size + self.yc.size


@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    half_width: float
    level: float
    basis: str = ""

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def covers(self, value: float) -> bool:
        """Closed-interval coverage; a boundary hit counts as covered."""
        return abs(value - self.center) <= self.half_width


@dataclass(frozen=True)
class VarianceEstimateSet:
    """All point and variance estimates for one experiment."""

    tau_hat: float
    s2_y1_hat: float
    s2_y0_hat: float
    cov_high_hat: float
    cov_low_hat: float
    v_a: float
    v_b_plus: float
    v_b_minus: float
    v_high: float
    v_low: float
    design: ExperimentDesign
    level: float = DEFAULT_LEVEL
    diagnostics: tuple = field(default_factory=tuple)

    def interval(self, basis: str) -> ConfidenceInterval:
        """Wald interval around ``tau_hat`` using the named variance estimate."""
        return wald_interval(self.tau_hat, getattr(self, basis), self.level, basis=basis)


def _arm_factor(k: int, N: PopulationSize) -> float:
    # Cochran's multiplier on the sum of squared deviations
    if N is INFINITE:
        return 1.0 / (k - 1)
    return (N - 1) / (N * (k - 1))


def estimate_batch(yt, yc, N: PopulationSize) -> dict:
    """Evaluate every estimator for a stack of experiments.

    Parameters
    ----------
    yt : array_like, shape (B, m)
        Treated-arm outcomes, one experiment per row.
    yc : array_like, shape (B, n - m)
        Control-arm outcomes.
    N : int or INFINITE
        Population size shared by all rows.

    Returns
    -------
    dict of str -> ndarray
        Arrays of length ``B``: ``tau_hat``, ``s2_y1_hat``, ``s2_y0_hat``,
        ``cov_high_hat``, ``cov_low_hat`` and the unclamped variance
        estimates ``v_a``, ``v_b_plus``, ``v_b_minus``, ``v_high``, ``v_low``.
        For an infinite population ``v_high`` and ``v_low`` both hold the
        independent-samples variance.
    """
    yt = np.sort(np.asarray(yt, dtype=np.float64), axis=1)
    yc = np.sort(np.asarray(yc, dtype=np.float64), axis=1)
    if yt.ndim != 2 or yc.ndim != 2 or yt.shape[0] != yc.shape[0]:
        raise InvalidInput("expected two 2-D arrays with the same number of rows")
    m, k = yt.shape[1], yc.shape[1]
    design = ExperimentDesign(N, m + k, m)
    n = design.n

    mu1 = np.sum(yt, axis=1) / m
    mu0 = np.sum(yc, axis=1) / k
    d1 = yt - mu1[:, None]
    d0 = yc - mu0[:, None]
    s2_1 = np.sum(d1 * d1, axis=1) * _arm_factor(m, N)
    s2_0 = np.sum(d0 * d0, axis=1) * _arm_factor(k, N)

    part = build_partition(m, k)
    w, t_idx, c_idx = part.float_weights, part.treated_take, part.control_take
    g = d1[:, t_idx]
    # centred form of sum_i w_i y1[i] y0[i] - mu1 mu0 (the grid refines both arms)
    cov_high = np.sum(w * g * d0[:, c_idx], axis=1)
    cov_low = np.sum(w * g * d0[:, c_idx[::-1]], axis=1)

    v_a = n / (n - 1) * (s2_1 / m + s2_0 / k)
    base_b = ((n - m) / m * s2_1 + m / (n - m) * s2_0) / (n - 1)
    geo = 2.0 * np.sqrt(s2_1 * s2_0) / (n - 1)
    v_b_plus = base_b + geo
    v_b_minus = base_b - geo

    if N is INFINITE:
        v_high = s2_1 / m + s2_0 / k
        v_low = v_high.copy()
    else:
        base = ((N - m) / m * s2_1 + (N - k) / k * s2_0) / (N - 1)
        v_high = base + 2.0 * cov_high / (N - 1)
        v_low = base + 2.0 * cov_low / (N - 1)

    return {
        "tau_hat": mu1 - mu0,
        "s2_y1_hat": s2_1,
        "s2_y0_hat": s2_0,
        "cov_high_hat": cov_high,
        "cov_low_hat": cov_low,
        "v_a": v_a,
        "v_b_plus": v_b_plus,
        "v_b_minus": v_b_minus,
        "v_high": v_high,
        "v_low": v_low,
    }


def _single(obs: ObservedExperiment) -> dict:
    out = estimate_batch(obs.yt[None, :], obs.yc[None, :], obs.N)
    return {key: float(val[0]) for key, val in out.items()}


def _clamp(value: float) -> float:
    return value if value > 0.0 else 0.0


def difference_in_means(obs: ObservedExperiment) -> float:
    return _single(obs)["tau_hat"]


def cochran_variance(arm, N: PopulationSize) -> float:
    """Unbiased estimate of an arm's population variance under sampling without replacement.

    ``(N - 1) / (N (k - 1)) * sum((y - mean(y))**2)`` for an arm of ``k``
    units; with ``N = INFINITE`` this is the ordinary sample variance.
    """
    arm = np.sort(as_outcome_vector(arm, "arm"))
    k = arm.size
    if k < 2:
        raise InvalidDesign(f"an arm needs at least 2 units, got {k}")
    if N is not INFINITE and N < k:
        raise InvalidDesign(f"population size N={N} is smaller than the arm size {k}")
    d = arm - np.sum(arm) / k
    return float(np.sum(d * d) * _arm_factor(k, N))


def neyman_conservative(obs: ObservedExperiment) -> float:
    """Conventional estimate ``n/(n-1) {S2_1/m + S2_0/(n-m)}``.

    Conservative when ``n == N``; for ``n < N`` it is only a heuristic.
    """
    return _clamp(_single(obs)["v_a"])


def neyman_bounds(obs: ObservedExperiment) -> tuple[float, float]:
    """Cauchy-Schwarz bounds ``(lower, upper)`` on the variance."""
    est = _single(obs)
    return _clamp(est["v_b_minus"]), _clamp(est["v_b_plus"])


def sharp_covariance_bounds(obs: ObservedExperiment) -> tuple[float, float]:
    """Plug-in ``(low, high)`` covariance bounds from the extremal couplings.

    The high value pairs the sorted arms level by level on the merged
    quantile grid; the low value pairs the treated arm with the control
    arm in reverse order.
    """
    est = _single(obs)
    return est["cov_low_hat"], est["cov_high_hat"]


def sharp_variance_bounds(obs: ObservedExperiment) -> tuple[float, float]:
    """Plug-in sharp bounds ``(low, high)`` on the variance of the difference in means."""
    if obs.N is INFINITE:
        raise InvalidDesign("use infinite_population_variance for an infinite population")
    est = _single(obs)
    return _clamp(est["v_low"]), _clamp(est["v_high"])


def infinite_population_variance(obs: ObservedExperiment) -> float:
    """``s2(yt)/m + s2(yc)/(n-m)`` with ``(k-1)``-divisor sample variances."""
    if obs.N is not INFINITE:
        raise InvalidDesign("population size is finite; use sharp_variance_bounds")
    return _clamp(_single(obs)["v_high"])


def wald_interval(tau_hat: float, variance: float, level: float = DEFAULT_LEVEL,
                  basis: str = "") -> ConfidenceInterval:
    if not 0.0 < level < 1.0:
        raise InvalidInput(f"confidence level must lie in (0, 1), got {level!r}")
    if not math.isfinite(variance) or variance < 0.0:
        raise InvalidInput(f"variance estimate must be finite and non-negative, got {variance!r}")
    z = inverse_normal_cdf(1.0 - (1.0 - level) / 2.0)
    return ConfidenceInterval(float(tau_hat), z * math.sqrt(variance), level, basis)


def estimate_all(obs: ObservedExperiment, level: float = DEFAULT_LEVEL) -> VarianceEstimateSet:
    """Compute every estimate for ``obs`` and collect diagnostics.

    Diagnostics are short strings: ``"clamped:<name>"`` when a variance
    estimate was negative through rounding and has been set to zero, and
    ``"heuristic:<name>"`` for the conventional and Cauchy-Schwarz estimates
    when ``n < N``.
    """
    if not 0.0 < level < 1.0:
        raise InvalidInput(f"confidence level must lie in (0, 1), got {level!r}")
    est = _single(obs)
    diagnostics = []
    for name in VARIANCE_FIELDS:
        if est[name] < 0.0:
            diagnostics.append(f"clamped:{name}")
            est[name] = 0.0
    if not obs.design.is_census:
        diagnostics.extend(["heuristic:v_a", "heuristic:v_b_plus", "heuristic:v_b_minus"])
    return VarianceEstimateSet(design=obs.design, level=level, diagnostics=tuple(diagnostics), **est)
