"""Extremal couplings of two marginals and independent checks of the covariance bounds.

The covariance of two variables with fixed marginals is largest when they
are paired quantile level by quantile level (comonotone) and smallest when
one is paired with the reversed quantiles of the other (countermonotone).
This module evaluates those extremes three ways:

* :func:`hoeffding_bounds` integrates products of quantile functions, exactly
  in rational arithmetic for step marginals and by midpoint quadrature for
  analytic ones;
* :func:`brute_force_extremes` searches every pairing of two equal-size
  atom lists;
* :func:`extremal_joint_cdf` builds the Frechet upper and lower joint CDFs.
"""

from __future__ import annotations

import itertools
import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInput, NumericalFailure, TooLarge
from .partition import build_partition
from .population import as_outcome_vector

__all__ = [
    "AnalyticQuantile",
    "ExtremalCoupling",
    "StepQuantile",
    "brute_force_extremes",
    "empirical_cdf",
    "extremal_joint_cdf",
    "hoeffding_bounds",
    "lcm_expand",
    "quantile_product_integral",
]

DEFAULT_GRID_SIZE = 100_000
MAX_BRUTE_FORCE_ATOMS = 8


class StepQuantile:
    """Left-continuous inverse of the empirical CDF of ``atoms``.

    ``q(u) = y_(ceil(k u))`` for ``u`` in ``(0, 1]`` over the ``k`` sorted atoms.
    """

    def __init__(self, atoms):
        self.atoms = np.sort(as_outcome_vector(atoms, "atoms"))
        self.atoms.flags.writeable = False

    @property
    def size(self) -> int:
        return self.atoms.size

    @property
    def mean(self) -> float:
        return float(np.sum(self.atoms) / self.atoms.size)

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        if np.any((u <= 0.0) | (u > 1.0)):
            raise InvalidInput("quantile level must lie in (0, 1]")
        idx = np.ceil(u * self.size).astype(np.intp) - 1
        out = self.atoms[np.clip(idx, 0, self.size - 1)]
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class AnalyticQuantile:
    """A quantile function given as a vectorised callable with a known mean."""

    func: Callable[[np.ndarray], np.ndarray]
    mean: Optional[float] = None

    def __call__(self, u):
        return self.func(u)


@dataclass(frozen=True)
class ExtremalCoupling:
    kind: str  # "comonotone" | "countermonotone"
    g: object
    f: object

    def __post_init__(self):
        if self.kind not in ("comonotone", "countermonotone"):
            raise InvalidInput(f"unknown coupling kind {self.kind!r}")

    def sample(self, u):
        """Map uniforms ``u`` to pairs realising the coupling."""
        u = np.asarray(u, dtype=np.float64)
        v = u if self.kind == "comonotone" else 1.0 - u
        # 1 - u hits 0 when u == 1; the quantile at 0+ is the smallest value
        v = np.where(v <= 0.0, np.nextafter(0.0, 1.0), v)
        return self.g(u), self.f(v)


def _step_integral(g: StepQuantile, f: StepQuantile, reverse_g: bool, reverse_f: bool) -> Fraction:
    # exact sum over the merged grid; each float atom converts exactly
    part = build_partition(g.size, f.size)
    ga = [Fraction(float(x)) for x in g.atoms]
    fa = [Fraction(float(x)) for x in f.atoms]
    gi = part.treated_index[::-1] if reverse_g else part.treated_index
    fi = part.control_index[::-1] if reverse_f else part.control_index
    total = Fraction(0)
    for w, i, j in zip(part.weights, gi, fi):
        total += w * ga[i - 1] * fa[j - 1]
    return total


@lru_cache(maxsize=16)
def _midpoints(K: int) -> np.ndarray:
    u = (np.arange(K, dtype=np.float64) + 0.5) / K
    u.flags.writeable = False
    return u


def _grid_values(q, K: int) -> np.ndarray:
    vals = np.asarray(q(_midpoints(K)), dtype=np.float64)
    if vals.shape != (K,) or not np.all(np.isfinite(vals)):
        raise NumericalFailure("quantile function returned non-finite values on the grid")
    return vals


def quantile_product_integral(g, f, reverse_g: bool = False, reverse_f: bool = False,
                              grid_size: int = DEFAULT_GRID_SIZE) -> float:
    """Integrate ``g(u') f(u'')`` over ``u`` in (0, 1).

    ``u'`` is ``1 - u`` when ``reverse_g`` is set and ``u`` otherwise; the
    same for ``u''``.  Two step quantiles are integrated exactly; any
    analytic input switches to midpoint quadrature on ``grid_size`` points.
    """
    if isinstance(g, StepQuantile) and isinstance(f, StepQuantile):
        return float(_step_integral(g, f, reverse_g, reverse_f))
    gv = _grid_values(g, grid_size)
    fv = _grid_values(f, grid_size)
    # midpoints are symmetric, so q(1 - u_k) is the reversed grid
    if reverse_g:
        gv = gv[::-1]
    if reverse_f:
        fv = fv[::-1]
    return float(np.sum(gv * fv) / grid_size)


def _mean_of(q, given: Optional[float], grid_size: int):
    if given is not None:
        return given
    if isinstance(q, StepQuantile):
        return Fraction(sum(Fraction(float(x)) for x in q.atoms), q.size)
    if getattr(q, "mean", None) is not None:
        return q.mean
    return float(np.sum(_grid_values(q, grid_size)) / grid_size)


def hoeffding_bounds(g, f, mu_g: Optional[float] = None, mu_f: Optional[float] = None,
                     grid_size: int = DEFAULT_GRID_SIZE) -> tuple[float, float]:
    """Smallest and largest covariance compatible with the marginals ``g`` and ``f``.

    Parameters
    ----------
    g, f : StepQuantile or AnalyticQuantile
        Quantile functions of the two marginals.
    mu_g, mu_f : float, optional
        Marginal means; derived from the quantile functions when omitted.
    grid_size : int
        Quadrature points for analytic marginals.

    Returns
    -------
    (low, high) : tuple of float
        ``int g(u) f(1-u) du - mu_g mu_f`` and ``int g(u) f(u) du - mu_g mu_f``.
    """
    if isinstance(g, StepQuantile) and isinstance(f, StepQuantile):
        mg = _mean_of(g, None if mu_g is None else Fraction(mu_g), grid_size)
        mf = _mean_of(f, None if mu_f is None else Fraction(mu_f), grid_size)
        high = _step_integral(g, f, False, False) - mg * mf
        low = _step_integral(g, f, False, True) - mg * mf
        return float(low), float(high)
    mg = float(_mean_of(g, mu_g, grid_size))
    mf = float(_mean_of(f, mu_f, grid_size))
    gv = _grid_values(g, grid_size)
    fv = _grid_values(f, grid_size)
    high = float(np.sum(gv * fv) / grid_size) - mg * mf
    low = float(np.sum(gv * fv[::-1]) / grid_size) - mg * mf
    if not (math.isfinite(high) and math.isfinite(low)):
        raise NumericalFailure("quantile product integral is not finite")
    return low, high


def lcm_expand(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Replicate each atom so both lists have ``lcm(len(a), len(b))`` entries.

    Uniform weights on the expanded lists reproduce the two empirical
    marginals, which turns the weighted pairing problem into a permutation
    problem.
    """
    a = as_outcome_vector(a, "a")
    b = as_outcome_vector(b, "b")
    L = math.lcm(a.size, b.size)
    return np.repeat(a, L // a.size), np.repeat(b, L // b.size)


@lru_cache(maxsize=MAX_BRUTE_FORCE_ATOMS)
def _all_permutations(L: int) -> np.ndarray:
    perms = np.array(list(itertools.permutations(range(L))), dtype=np.intp)
    perms.flags.writeable = False
    return perms


def brute_force_extremes(atoms_a, atoms_b) -> tuple[float, float]:
    """Extreme covariances over every pairing of two equal-length atom lists.

    Returns ``(min, max)`` over permutations ``s`` of
    ``mean(a_i b_s(i)) - mean(a) mean(b)``.  Limited to 8 atoms (40,320
    pairings).
    """
    a = as_outcome_vector(atoms_a, "atoms_a")
    b = as_outcome_vector(atoms_b, "atoms_b")
    if a.size != b.size:
        raise InvalidInput(f"atom lists differ in length ({a.size} vs {b.size}); use lcm_expand")
    L = a.size
    if L > MAX_BRUTE_FORCE_ATOMS:
        raise TooLarge(f"{L} atoms exceeds the brute-force limit of {MAX_BRUTE_FORCE_ATOMS}")
    da = a - math.fsum(a) / L
    db = b - math.fsum(b) / L
    covs = (db[_all_permutations(L)] @ da) / L
    return float(covs.min()), float(covs.max())


def empirical_cdf(values) -> Callable[[float], float]:
    """Right-continuous empirical CDF; ``+inf`` maps to 1 and ``-inf`` to 0."""
    atoms = sorted(float(x) for x in as_outcome_vector(values, "values"))
    size = len(atoms)

    def cdf(y: float) -> float:
        return bisect_right(atoms, y) / size

    return cdf


def extremal_joint_cdf(kind: str, G: Callable[[float], float],
                       F: Callable[[float], float]) -> Callable[[float, float], float]:
    """Frechet bound on the joint CDF with marginal CDFs ``G`` and ``F``.

    ``kind="upper"`` (comonotone) gives ``min(G, F)``; ``kind="lower"``
    (countermonotone) gives ``max(0, G + F - 1)``.
    """
    if kind in ("upper", "comonotone"):
        return lambda y1, y0: min(G(y1), F(y0))
    if kind in ("lower", "countermonotone"):
        return lambda y1, y0: max(0.0, G(y1) + F(y0) - 1.0)
    raise InvalidInput(f"unknown bound kind {kind!r}")
