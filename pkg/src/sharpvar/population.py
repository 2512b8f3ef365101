"""Finite-population descriptive statistics and the exact sampling variance.

All reductions divide by the population size ``N`` (not ``N - 1``).  The
unbiased sample-based estimators live in :mod:`sharpvar.estimators`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidDesign, InvalidInput

__all__ = [
    "INFINITE",
    "ExperimentDesign",
    "PotentialOutcomeTable",
    "as_outcome_vector",
    "neyman_bias",
    "population_covariance",
    "population_mean",
    "population_variance",
    "true_average_effect",
    "true_variance",
]


class _Infinite(enum.Enum):
    INFINITE = "infinite"

    def __repr__(self) -> str:
        return "INFINITE"

    def __str__(self) -> str:
        return "infinite"


#: Marker for a population of unbounded size (sampling from a superpopulation).
INFINITE = _Infinite.INFINITE

PopulationSize = Union[int, _Infinite]


def as_outcome_vector(values, name: str = "values") -> np.ndarray:
    """Validate ``values`` as a non-empty 1-D vector of finite floats.

    The returned array is a read-only float64 copy.
    """
    try:
        arr = np.array(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{name}: not numeric ({exc})") from None
    if arr.ndim != 1:
        raise InvalidInput(f"{name}: expected a 1-D sequence, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInput(f"{name}: empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name}: contains NaN or infinite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ExperimentDesign:
    """Population size ``N``, sample size ``n`` and treated count ``m``.

    ``N`` is either a positive integer or :data:`INFINITE`.
    """

    N: PopulationSize
    n: int
    m: int

    def __post_init__(self):
        for field in ("n", "m"):
            value = getattr(self, field)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidDesign(f"{field} must be an integer, got {value!r}")
            object.__setattr__(self, field, int(value))
        if self.m < 2:
            raise InvalidDesign(f"need at least 2 treated units, got m={self.m}")
        if self.n - self.m < 2:
            raise InvalidDesign(f"need at least 2 control units, got n-m={self.n - self.m}")
        if self.N is INFINITE:
            return
        if isinstance(self.N, bool) or not isinstance(self.N, (int, np.integer)):
            raise InvalidDesign(f"N must be an integer or INFINITE, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if self.N < 4:
            raise InvalidDesign(f"population size must be at least 4, got N={self.N}")
        if self.n > self.N:
            raise InvalidDesign(f"sample size n={self.n} exceeds population size N={self.N}")

    @property
    def k(self) -> int:
        """Number of control units, ``n - m``."""
        return self.n - self.m

    @property
    def is_infinite(self) -> bool:
        return self.N is INFINITE

    @property
    def is_census(self) -> bool:
        """True when every population unit is in the experiment (``n == N``)."""
        return self.N is not INFINITE and self.n == self.N


@dataclass(frozen=True)
class PotentialOutcomeTable:
    """Treatment (``y1``) and control (``y0``) potential outcomes for every unit."""

    y1: np.ndarray
    y0: np.ndarray

    def __post_init__(self):
        y1 = as_outcome_vector(self.y1, "y1")
        y0 = as_outcome_vector(self.y0, "y0")
        if y1.shape != y0.shape:
            raise InvalidInput(f"y1 has {y1.size} units but y0 has {y0.size}")
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y0", y0)

    @property
    def N(self) -> int:
        return self.y1.size

    def __len__(self) -> int:
        return self.y1.size


def population_mean(v) -> float:
    """Mean of ``v``; the sum is pairwise over the stored element order."""
    v = as_outcome_vector(v, "v")
    return float(np.sum(v) / v.size)


def population_variance(v) -> float:
    """Variance of ``v`` with divisor ``N``."""
    v = as_outcome_vector(v, "v")
    d = v - np.sum(v) / v.size
    return float(np.sum(d * d) / v.size)


def population_covariance(v, w) -> float:
    """Covariance of ``v`` and ``w`` with divisor ``N``."""
    v = as_outcome_vector(v, "v")
    w = as_outcome_vector(w, "w")
    if v.size != w.size:
        raise InvalidInput(f"length mismatch: {v.size} != {w.size}")
    dv = v - np.sum(v) / v.size
    dw = w - np.sum(w) / w.size
    return float(np.sum(dv * dw) / v.size)


def true_average_effect(table: PotentialOutcomeTable) -> float:
    return population_mean(table.y1) - population_mean(table.y0)


def _check_table_design(table: PotentialOutcomeTable, design: ExperimentDesign) -> None:
    if design.is_infinite:
        raise InvalidDesign("the exact variance is undefined for an infinite population")
    if design.N != table.N:
        raise InvalidDesign(f"design has N={design.N} but the table has {table.N} units")


def true_variance(table: PotentialOutcomeTable, design: ExperimentDesign) -> float:
    """Exact randomization variance of the difference in means.

    Parameters
    ----------
    table : PotentialOutcomeTable
        Full schedule of potential outcomes; its length must equal ``design.N``.
    design : ExperimentDesign
        A finite design.

    Returns
    -------
    float
        ``{(N-m)/m S2(y1) + (N-(n-m))/(n-m) S2(y0) + 2 S(y1, y0)} / (N-1)``,
        where ``S2`` and ``S`` are the divisor-``N`` population moments.
    """
    _check_table_design(table, design)
    N, m, k = design.N, design.m, design.k
    s2_1 = population_variance(table.y1)
    s2_0 = population_variance(table.y0)
    s_10 = population_covariance(table.y1, table.y0)
    value = ((N - m) / m * s2_1 + (N - k) / k * s2_0 + 2.0 * s_10) / (N - 1)
    # exact value is a variance; only rounding can push it below zero
    return max(value, 0.0)


def neyman_bias(table: PotentialOutcomeTable, n: int) -> float:
    """Expected excess of the conventional estimator over the truth when ``n == N``.

    Equals ``{S2(y1) + S2(y0) - 2 S(y1, y0)} / (n - 1)``, i.e. the population
    variance of the unit-level effects scaled by ``n / (n - 1)``.
    """
    if n != table.N:
        raise InvalidDesign("the bias identity holds for n == N only")
    s2_1 = population_variance(table.y1)
    s2_0 = population_variance(table.y0)
    s_10 = population_covariance(table.y1, table.y0)
    return (s2_1 + s2_0 - 2.0 * s_10) / (n - 1)
