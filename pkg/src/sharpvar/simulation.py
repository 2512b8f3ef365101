"""Complete randomization: enumeration, seeded Monte Carlo, imputation, convergence.

Random streams
--------------
All randomness comes from NumPy's ``PCG64`` generator (128-bit state).
A run with seed ``s`` splits its replicates into fixed blocks of
:data:`BLOCK_SIZE`; block ``b`` draws from
``PCG64(SeedSequence(s, spawn_key=(b,)))``, which is the same stream as
``SeedSequence(s).spawn(b + 1)[b]``.  Block results are reduced in block
order, so a report depends only on its inputs and never on the number of
worker threads.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np

from .coupling import StepQuantile, hoeffding_bounds
from .errors import InvalidDesign, InvalidInput, TooLarge
from .estimators import (
    CI_BASES_ESTIMATE,
    DEFAULT_LEVEL,
    VARIANCE_FIELDS,
    ObservedExperiment,
    estimate_batch,
)
from .normal import inverse_normal_cdf
from .population import (
    ExperimentDesign,
    PotentialOutcomeTable,
    population_variance,
    true_average_effect,
    true_variance,
)

__all__ = [
    "BLOCK_SIZE",
    "CI_BASES",
    "MAX_ENUMERATION",
    "Assignment",
    "AsymptoticRegime",
    "ConstantEffect",
    "ConvergenceRow",
    "EstimatorSummary",
    "ExactMoments",
    "SharpNull",
    "SimulationReport",
    "TableEdit",
    "convergence_study",
    "divergent_superpopulation",
    "draw_assignment",
    "enumerate_assignments",
    "exact_moments",
    "impute",
    "parse_hypothesis",
    "run_exhaustive",
    "run_monte_carlo",
    "sharp_bounds_population",
]

BLOCK_SIZE = 1024
MAX_ENUMERATION = 10**6
# variance estimates that get a Wald interval, widest first when n == N
CI_BASES = CI_BASES_ESTIMATE
THREADS_ENV = "SHARPVAR_THREADS"


# ---------------------------------------------------------------------------
# assignments


@dataclass(frozen=True)
class Assignment:
    """0-based indices of the treated units and of all sampled units."""

    treated: tuple
    sampled: tuple

    def __post_init__(self):
        if not set(self.treated) <= set(self.sampled):
            raise InvalidInput("treated units must be a subset of the sampled units")

    @property
    def control(self) -> tuple:
        treated = set(self.treated)
        return tuple(i for i in self.sampled if i not in treated)


def _block_stream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _draw_block(design: ExperimentDesign, rng: np.random.Generator, size: int) -> np.ndarray:
    """Partial Fisher-Yates shuffles; row ``r`` holds ``m`` treated then ``n - m`` control indices."""
    N, n = design.N, design.n
    perm = np.tile(np.arange(N, dtype=np.intp), (size, 1))
    rows = np.arange(size)
    for i in range(min(n, N - 1)):
        j = rng.integers(i, N, size=size)
        held = perm[rows, i].copy()
        perm[rows, i] = perm[rows, j]
        perm[rows, j] = held
    return perm[:, :n]


def _require_finite(design: ExperimentDesign) -> None:
    if design.is_infinite:
        raise InvalidDesign("randomization needs a finite population")


def draw_assignment(design: ExperimentDesign, rng: np.random.Generator) -> Assignment:
    """Draw one assignment uniformly from all ``C(N, n) C(n, m)`` possibilities."""
    _require_finite(design)
    row = _draw_block(design, rng, 1)[0]
    return Assignment(tuple(sorted(row[: design.m].tolist())), tuple(sorted(row.tolist())))


def _count_assignments(design: ExperimentDesign) -> int:
    return math.comb(design.N, design.n) * math.comb(design.n, design.m)


def enumerate_assignments(design: ExperimentDesign) -> Iterator[Assignment]:
    """Yield every assignment exactly once, in lexicographic order."""
    _require_finite(design)
    total = _count_assignments(design)
    if total > MAX_ENUMERATION:
        raise TooLarge(f"{total} assignments exceeds the enumeration limit {MAX_ENUMERATION}")
    for sampled in itertools.combinations(range(design.N), design.n):
        for treated in itertools.combinations(sampled, design.m):
            yield Assignment(treated, sampled)


def _enumeration_matrix(design: ExperimentDesign) -> np.ndarray:
    rows = [a.treated + a.control for a in enumerate_assignments(design)]
    return np.array(rows, dtype=np.intp)


# ---------------------------------------------------------------------------
# effect hypotheses and imputation


@dataclass(frozen=True)
class SharpNull:
    """Every unit has the same outcome under treatment and control."""


@dataclass(frozen=True)
class ConstantEffect:
    tau: float


@dataclass(frozen=True)
class TableEdit:
    """Sharp null with selected unobserved potential outcomes overridden.

    Each edit is ``(unit, potential, value)`` where ``potential`` is ``"y1"``
    or ``"y0"``.  Units are numbered from 0 in the imputed table's order:
    treated units first, then control units.
    """

    edits: tuple = ()


EffectHypothesis = Union[SharpNull, ConstantEffect, TableEdit]


def parse_hypothesis(text: str, edits: Sequence = ()) -> EffectHypothesis:
    """Parse ``sharp-null``, ``constant:<tau>`` or ``edits``."""
    text = text.strip()
    if text == "sharp-null":
        return SharpNull()
    if text.startswith("constant:"):
        try:
            tau = float(text.split(":", 1)[1])
        except ValueError:
            raise InvalidInput(f"bad constant effect in {text!r}") from None
        if not math.isfinite(tau):
            raise InvalidInput("constant effect must be finite")
        return ConstantEffect(tau)
    if text == "edits":
        return TableEdit(tuple(edits))
    raise InvalidInput(f"unknown hypothesis {text!r}")


def impute(observed: ObservedExperiment, hypothesis: EffectHypothesis) -> PotentialOutcomeTable:
    """Fill in the unobserved potential outcomes of a census experiment."""
    if not observed.design.is_census:
        raise InvalidDesign("imputation needs every population unit to be observed (n == N)")
    m = observed.m
    y = np.concatenate([observed.yt, observed.yc])
    if isinstance(hypothesis, ConstantEffect):
        tau = hypothesis.tau
        y1 = np.concatenate([observed.yt, observed.yc + tau])
        y0 = np.concatenate([observed.yt - tau, observed.yc])
        return PotentialOutcomeTable(y1, y0)
    y1, y0 = y.copy(), y.copy()
    if isinstance(hypothesis, SharpNull):
        return PotentialOutcomeTable(y1, y0)
    if not isinstance(hypothesis, TableEdit):
        raise InvalidInput(f"unsupported hypothesis {hypothesis!r}")
    for unit, potential, value in hypothesis.edits:
        unit = int(unit)
        if not 0 <= unit < y.size:
            raise InvalidInput(f"edit references unit {unit}, outside 0..{y.size - 1}")
        if not math.isfinite(float(value)):
            raise InvalidInput(f"edit for unit {unit} has a non-finite value")
        if potential == "y1" and unit >= m:
            y1[unit] = float(value)
        elif potential == "y0" and unit < m:
            y0[unit] = float(value)
        elif potential in ("y1", "y0"):
            raise InvalidInput(f"unit {unit}: {potential} is observed and cannot be edited")
        else:
            raise InvalidInput(f"unknown potential outcome {potential!r}")
    return PotentialOutcomeTable(y1, y0)


# ---------------------------------------------------------------------------
# exact moments


@dataclass(frozen=True)
class ExactMoments:
    assignments: int
    mean_tau_hat: float
    var_tau_hat: float
    means: dict  # estimator name -> average over all assignments


def _estimates_for(table: PotentialOutcomeTable, design: ExperimentDesign, idx: np.ndarray) -> dict:
    yt = table.y1[idx[:, : design.m]]
    yc = table.y0[idx[:, design.m:]]
    return estimate_batch(yt, yc, design.N)


def _check_table(table: PotentialOutcomeTable, design: ExperimentDesign) -> None:
    _require_finite(design)
    if table.N != design.N:
        raise InvalidDesign(f"design has N={design.N} but the table has {table.N} units")


def exact_moments(table: PotentialOutcomeTable, design: ExperimentDesign) -> ExactMoments:
    """Average ``tau_hat`` and every estimator over all possible assignments."""
    _check_table(table, design)
    idx = _enumeration_matrix(design)
    est = _estimates_for(table, design, idx)
    tau = est["tau_hat"]
    mean_tau = float(np.mean(tau))
    var_tau = float(np.mean((tau - mean_tau) ** 2))
    means = {key: float(np.mean(val)) for key, val in est.items() if key != "tau_hat"}
    return ExactMoments(idx.shape[0], mean_tau, var_tau, means)


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class EstimatorSummary:
    mean_variance: float
    mean_ci_width: Optional[float] = None
    coverage: Optional[float] = None


@dataclass(frozen=True)
class SimulationReport:
    """Operating characteristics of the variance estimators over many assignments.

    ``gamma_hat`` is the ratio of the true variance to the mean sharp upper
    bound estimate.  ``width_order_violations`` counts replicates in which
    the interval widths were not ordered sharp <= Cauchy-Schwarz <= conventional.
    """

    replicates: int
    seed: Optional[int]
    level: float
    design: ExperimentDesign
    tau: float
    true_variance: float
    mean_tau_hat: Optional[float]
    estimators: dict
    gamma_hat: Optional[float]
    width_order_violations: int
    exact: bool = False
    diagnostics: tuple = field(default_factory=tuple)


# accumulators kept per block: sums of each variance estimate, widths and hits
def _block_sums(table, design, tau, z, rng, size) -> np.ndarray:
    idx = _draw_block(design, rng, size)
    return _assignment_sums(table, design, tau, z, idx)


def _assignment_sums(table, design, tau, z, idx) -> np.ndarray:
    est = _estimates_for(table, design, idx)
    row = [np.sum(est["tau_hat"])]
    row.extend(np.sum(est[name]) for name in VARIANCE_FIELDS)
    widths = {}
    for name in CI_BASES:
        v = np.maximum(est[name], 0.0)
        widths[name] = 2.0 * z * np.sqrt(v)
        row.append(np.sum(widths[name]))
        row.append(np.count_nonzero(np.abs(est["tau_hat"] - tau) <= widths[name] / 2.0))
    w_a, w_b, w_h = widths["v_a"], widths["v_b_plus"], widths["v_high"]
    # ties between the estimates are exact in real arithmetic; allow rounding
    slack = 1e-12 * np.maximum(w_a, 1.0)
    bad = (w_h > w_b + slack) | (w_b > w_a + slack)
    row.append(np.count_nonzero(bad))
    return np.array(row, dtype=np.float64)


def _thread_count(threads: Optional[int]) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "")
        try:
            threads = int(raw) if raw else (os.cpu_count() or 1)
        except ValueError:
            threads = 1
    return max(1, int(threads))


def _summarise(table, design, level, seed, replicates, totals, exact) -> SimulationReport:
    tau = true_average_effect(table)
    v_true = true_variance(table, design)
    diagnostics = []
    if not design.is_census:
        diagnostics.append("heuristic:n<N")
    if replicates == 0:
        diagnostics.append("coverage-undefined:no-replicates")
        return SimulationReport(0, seed, level, design, tau, v_true, None, {}, None, 0,
                                exact, tuple(diagnostics))
    pos = 0
    mean_tau_hat = float(totals[pos] / replicates)
    pos += 1
    means = {}
    for name in VARIANCE_FIELDS:
        means[name] = float(totals[pos] / replicates)
        pos += 1
    estimators = {}
    for name in VARIANCE_FIELDS:
        if name in CI_BASES:
            continue
        estimators[name] = EstimatorSummary(means[name])
    for name in CI_BASES:
        width = float(totals[pos] / replicates)
        cover = float(totals[pos + 1] / replicates)
        pos += 2
        estimators[name] = EstimatorSummary(means[name], width, cover)
    violations = int(totals[pos])
    gamma = v_true / means["v_high"] if means["v_high"] > 0 else None
    ordered = {name: estimators[name] for name in VARIANCE_FIELDS}
    return SimulationReport(replicates, seed, level, design, tau, v_true, mean_tau_hat, ordered,
                            gamma, violations, exact, tuple(diagnostics))


def run_monte_carlo(table: PotentialOutcomeTable, design: ExperimentDesign, replicates: int,
                    level: float = DEFAULT_LEVEL, seed: int = 0,
                    threads: Optional[int] = None) -> SimulationReport:
    """Simulate ``replicates`` random assignments and summarise every estimator.

    Parameters
    ----------
    table : PotentialOutcomeTable
        Full schedule of potential outcomes.
    design : ExperimentDesign
        Finite design with ``N == len(table)``.
    replicates : int
        Number of simulated assignments; 0 gives an empty report.
    level : float
        Nominal coverage of the Wald intervals.
    seed : int
        Root seed; see the module docstring for the stream-splitting rule.
    threads : int, optional
        Worker threads; defaults to ``$SHARPVAR_THREADS`` or the CPU count.
        The result does not depend on it.
    """
    _check_table(table, design)
    if replicates < 0:
        raise InvalidInput("replicates must be non-negative")
    if not 0.0 < level < 1.0:
        raise InvalidInput(f"confidence level must lie in (0, 1), got {level!r}")
    seed = int(seed)
    if seed < 0:
        raise InvalidInput("seed must be non-negative")
    tau = true_average_effect(table)
    z = inverse_normal_cdf(1.0 - (1.0 - level) / 2.0)
    sizes = [BLOCK_SIZE] * (replicates // BLOCK_SIZE)
    if replicates % BLOCK_SIZE:
        sizes.append(replicates % BLOCK_SIZE)

    def work(b: int) -> np.ndarray:
        return _block_sums(table, design, tau, z, _block_stream(seed, b), sizes[b])

    workers = min(_thread_count(threads), max(1, len(sizes)))
    if workers == 1:
        parts = [work(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    totals = np.zeros(1 + len(VARIANCE_FIELDS) + 2 * len(CI_BASES) + 1)
    for part in parts:  # fixed block order
        totals = totals + part
    return _summarise(table, design, level, seed, replicates, totals, exact=False)


def run_exhaustive(table: PotentialOutcomeTable, design: ExperimentDesign,
                   level: float = DEFAULT_LEVEL) -> SimulationReport:
    """Same summary as :func:`run_monte_carlo`, averaged over every assignment."""
    _check_table(table, design)
    tau = true_average_effect(table)
    z = inverse_normal_cdf(1.0 - (1.0 - level) / 2.0)
    idx = _enumeration_matrix(design)
    totals = _assignment_sums(table, design, tau, z, idx)
    return _summarise(table, design, level, None, idx.shape[0], totals, exact=True)


# ---------------------------------------------------------------------------
# convergence of the plug-in bounds


@dataclass(frozen=True)
class AsymptoticRegime:
    """Growing populations with ``n = ceil(theta N)`` and ``m = ceil(rho n)``."""

    theta: float
    rho: float
    N_grid: tuple

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise InvalidInput(f"theta must lie in (0, 1], got {self.theta}")
        if not 0.0 < self.rho < 1.0:
            raise InvalidInput(f"rho must lie in (0, 1), got {self.rho}")
        grid = tuple(int(N) for N in self.N_grid)
        if list(grid) != sorted(set(grid)):
            raise InvalidInput("N_grid must be strictly increasing")
        object.__setattr__(self, "N_grid", grid)
        for N in grid:
            self.design(N)

    def design(self, N: int) -> ExperimentDesign:
        n = math.ceil(self.theta * N)
        return ExperimentDesign(N, n, math.ceil(self.rho * n))


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    n: int
    m: int
    v_high: float
    v_low: float
    median_scaled_error_high: float
    median_scaled_error_low: float


def sharp_bounds_population(table: PotentialOutcomeTable, design: ExperimentDesign) -> tuple[float, float]:
    """Population-level sharp bounds ``(low, high)`` on the variance of the difference in means.

    The covariance extremes come from the exact step-marginal integrals.
    """
    _check_table(table, design)
    N, m, k = design.N, design.m, design.k
    cov_low, cov_high = hoeffding_bounds(StepQuantile(table.y1), StepQuantile(table.y0))
    base = (N - m) / m * population_variance(table.y1) + (N - k) / k * population_variance(table.y0)
    return (base + 2.0 * cov_low) / (N - 1), (base + 2.0 * cov_high) / (N - 1)


def divergent_superpopulation(rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Independent normal control outcomes and exponential treatment outcomes."""
    y0 = rng.standard_normal(size)
    y1 = rng.exponential(1.0, size)
    return y1, y0


Sampler = Callable[[np.random.Generator, int], tuple]


def convergence_study(regime: AsymptoticRegime, sampler: Sampler = divergent_superpopulation,
                      replicates: int = 500, seed: int = 0) -> list:
    """Median scaled errors ``N |V_hat - V|`` of the plug-in bounds along ``regime``.

    Populations are nested: one draw of ``max(N_grid)`` units from
    ``sampler`` (stream ``spawn_key=(0,)``) and ``U_N`` is its first ``N``
    units.  Assignments for the ``j``-th grid entry use stream
    ``spawn_key=(1, j)``.
    """
    pop_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0,))))
    y1_all, y0_all = sampler(pop_rng, max(regime.N_grid))
    rows = []
    for j, N in enumerate(regime.N_grid):
        design = regime.design(N)
        table = PotentialOutcomeTable(y1_all[:N], y0_all[:N])
        v_low, v_high = sharp_bounds_population(table, design)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1, j))))
        idx = _draw_block(design, rng, replicates)
        est = _estimates_for(table, design, idx)
        err_high = N * np.abs(est["v_high"] - v_high)
        err_low = N * np.abs(est["v_low"] - v_low)
        rows.append(ConvergenceRow(N, design.n, design.m, v_high, v_low,
                                   float(np.median(err_high)), float(np.median(err_low))))
    return rows
