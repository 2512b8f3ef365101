"""Variance estimators and bounds for the difference in means under complete randomization."""

from .coupling import (
    AnalyticQuantile,
    ExtremalCoupling,
    StepQuantile,
    brute_force_extremes,
    empirical_cdf,
    extremal_joint_cdf,
    hoeffding_bounds,
    lcm_expand,
)
from .errors import InvalidDesign, InvalidInput, NumericalFailure, SharpVarError, TooLarge
from .estimators import (
    ConfidenceInterval,
    ObservedExperiment,
    VarianceEstimateSet,
    cochran_variance,
    difference_in_means,
    estimate_all,
    infinite_population_variance,
    neyman_bounds,
    neyman_conservative,
    sharp_covariance_bounds,
    sharp_variance_bounds,
    wald_interval,
)
from .illustrations import BetaMarginal, RatioResult, beta_inverse_cdf, limiting_ratios, table3_sweep
from .normal import inverse_normal_cdf
from .partition import QuantilePartition, build_partition
from .population import (
    INFINITE,
    ExperimentDesign,
    PotentialOutcomeTable,
    population_covariance,
    population_mean,
    population_variance,
    true_average_effect,
    true_variance,
)
from .simulation import (
    AsymptoticRegime,
    ConstantEffect,
    SharpNull,
    SimulationReport,
    TableEdit,
    convergence_study,
    draw_assignment,
    enumerate_assignments,
    exact_moments,
    impute,
    run_exhaustive,
    run_monte_carlo,
)

__version__ = "0.1.0"
