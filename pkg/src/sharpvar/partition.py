"""Merged quantile grid on which two empirical quantile functions are constant.

For step marginals with ``a`` and ``b`` atoms, the left-continuous inverses
are constant on the intervals between consecutive elements of
``{0, 1/a, ..., 1} | {0, 1/b, ..., 1}``.  Breakpoints are kept as exact
rationals over the common denominator ``lcm(a, b)`` and the order-statistic
indices use integer ceiling division, so no floating-point guard is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InvalidDesign

__all__ = ["QuantilePartition", "build_partition"]


@dataclass(frozen=True)
class QuantilePartition:
    """Breakpoints ``p_0 = 0 < ... < p_P = 1`` and per-segment data.

    Attributes
    ----------
    breakpoints : tuple of Fraction
        ``P + 1`` ascending breakpoints.
    weights : tuple of Fraction
        ``p_i - p_{i-1}`` for segments ``i = 1..P``.
    treated_index, control_index : tuple of int
        1-based order statistics ``ceil(a p_i)`` and ``ceil(b p_i)``.
    """

    a: int
    b: int
    breakpoints: tuple
    weights: tuple
    treated_index: tuple
    control_index: tuple

    @property
    def size(self) -> int:
        """Number of segments ``P``."""
        return len(self.weights)

    @property
    def denominator(self) -> int:
        return math.lcm(self.a, self.b)

    # float views used by the vectorised estimators; indices are 0-based
    @property
    def float_weights(self) -> np.ndarray:
        return _float_views(self.a, self.b)[0]

    @property
    def treated_take(self) -> np.ndarray:
        return _float_views(self.a, self.b)[1]

    @property
    def control_take(self) -> np.ndarray:
        return _float_views(self.a, self.b)[2]


@lru_cache(maxsize=256)
def build_partition(a: int, b: int) -> QuantilePartition:
    """Merge the grids of multiples of ``1/a`` and ``1/b`` on ``[0, 1]``.

    Used with ``(a, b) = (m, n - m)`` by the estimators and with arbitrary
    atom counts by the population-level coupling oracle.

    >>> [str(p) for p in build_partition(2, 3).breakpoints]
    ['0', '1/3', '1/2', '2/3', '1']
    """
    a, b = int(a), int(b)
    if a < 1 or b < 1:
        raise InvalidDesign(f"atom counts must be positive, got ({a}, {b})")
    L = math.lcm(a, b)
    sa, sb = L // a, L // b
    # numerators over L: multiples of L/a merged with multiples of L/b
    nums = sorted(set(range(0, L + 1, sa)) | set(range(0, L + 1, sb)))
    breakpoints = tuple(Fraction(q, L) for q in nums)
    weights = tuple(Fraction(q1 - q0, L) for q0, q1 in zip(nums, nums[1:]))
    # ceil(a * q / L) == ceil(q / sa) == -(-q // sa)
    treated = tuple(-(-q // sa) for q in nums[1:])
    control = tuple(-(-q // sb) for q in nums[1:])
    return QuantilePartition(a, b, breakpoints, weights, treated, control)


@lru_cache(maxsize=256)
def _float_views(a: int, b: int):
    part = build_partition(a, b)
    w = np.array([float(x) for x in part.weights])
    t = np.array(part.treated_index, dtype=np.intp) - 1
    c = np.array(part.control_index, dtype=np.intp) - 1
    for arr in (w, t, c):
        arr.flags.writeable = False
    return w, t, c
