import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import enumeration_variance, valid_designs
from sharpvar import (
    INFINITE,
    ExperimentDesign,
    InvalidDesign,
    InvalidInput,
    PotentialOutcomeTable,
    population_covariance,
    population_mean,
    population_variance,
    true_average_effect,
    true_variance,
)
from sharpvar.population import neyman_bias

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
vectors = st.lists(finite, min_size=1, max_size=30)


class TestMoments:
    @pytest.mark.parametrize("values, expected", [([1, 2, 3], 2.0), ([7.5] * 5, 7.5), ([1, 2, 3, 4], 2.5)])
    def test_mean(self, values, expected):
        assert population_mean(values) == expected

    @pytest.mark.parametrize("values, expected", [([1, 1, 1], 0.0), ([0, 2], 1.0), ([1, 2, 3, 4], 1.25)])
    def test_variance_divides_by_N(self, values, expected):
        assert population_variance(values) == pytest.approx(expected, rel=1e-15)

    def test_covariance_examples(self):
        assert population_covariance([0, 1], [1, 0]) == -0.25
        assert population_covariance([1, 2, 3, 4], [1, 2, 3, 4]) == 1.25

    @pytest.mark.parametrize("fn", [population_mean, population_variance])
    def test_empty_rejected(self, fn):
        with pytest.raises(InvalidInput):
            fn([])

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInput):
            population_mean([1.0, math.nan])
        with pytest.raises(InvalidInput):
            population_variance([1.0, math.inf])

    def test_covariance_length_mismatch(self):
        with pytest.raises(InvalidInput):
            population_covariance([1, 2], [1, 2, 3])

    @given(vectors)
    def test_self_covariance_is_variance(self, v):
        assert population_covariance(v, v) == pytest.approx(population_variance(v), rel=1e-12, abs=1e-300)

    @given(vectors, st.floats(-50, 50), st.floats(-1e3, 1e3))
    def test_affine_scaling(self, v, a, b):
        v = np.array(v)
        expected = a * a * population_variance(v)
        scale = (abs(a) * np.max(np.abs(v)) + abs(b)) ** 2
        assert population_variance(a * v + b) == pytest.approx(expected, rel=1e-12, abs=1e-13 * scale)

    @given(vectors, vectors)
    def test_covariance_symmetric(self, v, w):
        k = min(len(v), len(w))
        assert population_covariance(v[:k], w[:k]) == population_covariance(w[:k], v[:k])


class TestDesign:
    def test_valid(self):
        d = ExperimentDesign(10, 8, 3)
        assert (d.k, d.is_census, d.is_infinite) == (5, False, False)
        assert ExperimentDesign(4, 4, 2).is_census

    def test_infinite(self):
        d = ExperimentDesign(INFINITE, 6, 3)
        assert d.is_infinite and not d.is_census

    @pytest.mark.parametrize("N, n, m", [(3, 3, 2), (10, 11, 3), (10, 5, 1), (10, 5, 4), (10, 3, 2)])
    def test_invalid(self, N, n, m):
        with pytest.raises(InvalidDesign):
            ExperimentDesign(N, n, m)

    def test_infinite_still_needs_arms(self):
        with pytest.raises(InvalidDesign):
            ExperimentDesign(INFINITE, 3, 2)


class TestTrueVariance:
    def test_census_example(self):
        table = PotentialOutcomeTable([1, 2, 3, 4], [1, 2, 3, 4])
        assert true_variance(table, ExperimentDesign(4, 4, 2)) == pytest.approx(5 / 3, rel=1e-14)
        assert enumeration_variance(table.y1, table.y0, 4, 4, 2) == pytest.approx(5 / 3, rel=1e-14)

    def test_constant_outcomes(self):
        table = PotentialOutcomeTable([3.0] * 5, [1.0] * 5)
        assert true_variance(table, ExperimentDesign(5, 4, 2)) == 0.0

    def test_binary_matches_enumeration(self):
        table = PotentialOutcomeTable([0, 0, 1, 1], [0, 0, 1, 1])
        expected = enumeration_variance(table.y1, table.y0, 4, 4, 2)
        assert true_variance(table, ExperimentDesign(4, 4, 2)) == pytest.approx(expected, rel=1e-12)

    def test_design_must_match_table(self):
        table = PotentialOutcomeTable([1, 2, 3, 4], [1, 2, 3, 4])
        with pytest.raises(InvalidDesign):
            true_variance(table, ExperimentDesign(5, 4, 2))
        with pytest.raises(InvalidDesign):
            true_variance(table, ExperimentDesign(INFINITE, 4, 2))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(4, 6).flatmap(
        lambda N: st.tuples(st.just(N), st.lists(finite, min_size=N, max_size=N),
                            st.lists(finite, min_size=N, max_size=N), st.sampled_from(valid_designs(N)))))
    def test_matches_enumeration(self, case):
        N, y1, y0, (n, m) = case
        table = PotentialOutcomeTable(y1, y0)
        got = true_variance(table, ExperimentDesign(N, n, m))
        expected = enumeration_variance(y1, y0, N, n, m)
        assert got >= 0.0
        assert got == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_average_effect(self):
        assert true_average_effect(PotentialOutcomeTable([1, 2], [1, 2])) == 0.0
        assert true_average_effect(PotentialOutcomeTable([3.5, 4.5, 0.5], [1, 2, -2])) == pytest.approx(2.5)
        assert true_average_effect(PotentialOutcomeTable([1, 2], [0, 0])) == 1.5

    def test_bias_is_scaled_effect_variance(self):
        y1, y0 = np.array([1.0, 4.0, 2.0, 0.0]), np.array([0.0, 1.0, 3.0, 3.0])
        table = PotentialOutcomeTable(y1, y0)
        assert neyman_bias(table, 4) == pytest.approx(population_variance(y1 - y0) / 3, rel=1e-14)
