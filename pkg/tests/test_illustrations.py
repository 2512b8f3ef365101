import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sharpvar import BetaMarginal, InvalidInput, beta_inverse_cdf, limiting_ratios, table3_sweep
from sharpvar.illustrations import TABLE3_REFERENCE, TABLE3_ROWS, _quantile_grid, regularized_incomplete_beta

SHAPES = sorted({(a, b) for row in TABLE3_ROWS for a, b in (row[:2], row[2:])} | {(2, 0.1), (1, 0.1), (2, 1)})


class TestBetaMarginal:
    def test_moments(self):
        b = BetaMarginal(2, 3)
        assert b.mean == pytest.approx(0.4)
        assert b.variance == pytest.approx(6 / (25 * 6))

    @pytest.mark.parametrize("a, b", [(0, 1), (-1, 2), (1, math.inf), (math.nan, 1)])
    def test_invalid(self, a, b):
        with pytest.raises(InvalidInput):
            BetaMarginal(a, b)


class TestIncompleteBeta:
    def test_closed_forms(self):
        x = np.linspace(0, 1, 11)
        assert regularized_incomplete_beta(x, 1, 1) == pytest.approx(x, abs=1e-15)
        assert regularized_incomplete_beta(x, 2, 1) == pytest.approx(x ** 2, abs=1e-15)
        assert regularized_incomplete_beta(x, 1, 3) == pytest.approx(1 - (1 - x) ** 3, abs=1e-15)
        # I_x(2, 2) = 3x^2 - 2x^3
        assert regularized_incomplete_beta(x, 2, 2) == pytest.approx(3 * x ** 2 - 2 * x ** 3, abs=1e-15)

    # dyadic x keeps 1 - x exact
    @given(st.integers(1, 2**20 - 1), st.sampled_from(SHAPES))
    def test_reflection(self, k, shape):
        a, b = shape
        x = k / 2**20
        lhs = regularized_incomplete_beta(x, a, b)
        rhs = 1.0 - regularized_incomplete_beta(1.0 - x, b, a)
        assert lhs == pytest.approx(rhs, abs=1e-14)

    def test_domain(self):
        with pytest.raises(InvalidInput):
            regularized_incomplete_beta(1.5, 1, 1)


class TestInverse:
    def test_examples(self):
        assert beta_inverse_cdf(BetaMarginal(1, 1), 0.3) == pytest.approx(0.3, abs=1e-13)
        assert beta_inverse_cdf(BetaMarginal(2, 2), 0.5) == pytest.approx(0.5, abs=1e-13)
        u = np.linspace(0.01, 0.99, 99)
        assert beta_inverse_cdf(BetaMarginal(2, 1), u) == pytest.approx(np.sqrt(u), abs=1e-12)

    @pytest.mark.parametrize("shape", SHAPES)
    def test_residual_lower_half(self, shape):
        a, b = shape
        u = np.concatenate([np.geomspace(1e-12, 0.5, 200), np.linspace(0.01, 0.5, 50)])
        x = beta_inverse_cdf(BetaMarginal(a, b), u)
        assert np.max(np.abs(regularized_incomplete_beta(x, a, b) - u)) <= 1e-10

    @pytest.mark.parametrize("shape", SHAPES)
    def test_upper_half_by_reflection(self, shape):
        # x may round to 1 in the upper tail; the residual is measured on 1 - x
        a, b = shape
        u = np.linspace(0.5, 1 - 1e-9, 200)[1:]
        x = beta_inverse_cdf(BetaMarginal(a, b), u)
        y = beta_inverse_cdf(BetaMarginal(b, a), 1.0 - u)
        assert x == pytest.approx(1.0 - y, abs=1e-15)
        assert np.max(np.abs(regularized_incomplete_beta(y, b, a) - (1.0 - u))) <= 1e-10

    @pytest.mark.parametrize("shape", SHAPES)
    def test_monotone(self, shape):
        q = beta_inverse_cdf(BetaMarginal(*shape), (np.arange(2000) + 0.5) / 2000)
        assert np.all(np.diff(q) >= 0)

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.2, math.nan])
    def test_domain(self, u):
        with pytest.raises(InvalidInput):
            beta_inverse_cdf(BetaMarginal(1, 1), u)

    def test_against_scipy(self):
        stats = pytest.importorskip("scipy.stats")
        u = np.linspace(0.001, 0.999, 301)
        for a, b in SHAPES:
            assert beta_inverse_cdf(BetaMarginal(a, b), u) == pytest.approx(stats.beta.ppf(u, a, b), abs=1e-10)


class TestRatios:
    @pytest.mark.parametrize("shape", SHAPES)
    def test_grid_mean(self, shape):
        grid = _quantile_grid(float(shape[0]), float(shape[1]), 100_000)
        assert float(np.mean(grid)) == pytest.approx(BetaMarginal(*shape).mean, abs=1e-4)

    def test_identical_marginals(self):
        for shape in [(0.1, 0.1), (1, 1), (2, 2)]:
            r = limiting_ratios(BetaMarginal(*shape), BetaMarginal(*shape))
            assert r.ratio_vs_conventional == pytest.approx(1.0, abs=1e-4)
            assert r.ratio_vs_neyman_upper == pytest.approx(1.0, abs=1e-4)

    @pytest.mark.parametrize("control, treat, expected", [
        ((0.1, 0.1), (0.1, 1), (0.68, 0.79)),
        ((2, 2), (0.1, 2), (0.76, 0.83)),
        ((1, 1), (0.1, 2), (0.71, 0.83)),
    ])
    def test_reference_rows(self, control, treat, expected):
        r = limiting_ratios(BetaMarginal(*treat), BetaMarginal(*control))
        assert (r.ratio_vs_conventional, r.ratio_vs_neyman_upper) == pytest.approx(expected, abs=0.02)

    @pytest.mark.parametrize("control, treat", [((0.1, 0.1), (0.1, 1)), ((1, 1), (1, 2)), ((2, 2), (0.1, 2))])
    def test_shape_swap(self, control, treat):
        a = limiting_ratios(BetaMarginal(*treat), BetaMarginal(*control))
        b = limiting_ratios(BetaMarginal(treat[1], treat[0]), BetaMarginal(*control))
        assert a.ratio_vs_conventional == pytest.approx(b.ratio_vs_conventional, abs=1e-3)
        assert a.ratio_vs_neyman_upper == pytest.approx(b.ratio_vs_neyman_upper, abs=1e-3)

    @pytest.mark.parametrize("row", TABLE3_ROWS[:9:2])
    def test_grid_refinement(self, row):
        a0, b0, a1, b1 = row
        coarse = limiting_ratios(BetaMarginal(a1, b1), BetaMarginal(a0, b0), 100_000)
        fine = limiting_ratios(BetaMarginal(a1, b1), BetaMarginal(a0, b0), 200_000)
        assert abs(coarse.ratio_vs_conventional - fine.ratio_vs_conventional) < 5e-4
        assert abs(coarse.ratio_vs_neyman_upper - fine.ratio_vs_neyman_upper) < 5e-4

    def test_invalid_grid(self):
        with pytest.raises(InvalidInput):
            limiting_ratios(BetaMarginal(1, 1), BetaMarginal(1, 1), 0)


@pytest.fixture(scope="module")
def sweep():
    return table3_sweep()


class TestSweep:

    def test_length_and_order(self, sweep):
        assert len(sweep) == 18
        for r, (a0, b0, a1, b1) in zip(sweep, TABLE3_ROWS):
            assert (r.control.alpha, r.control.beta, r.treat.alpha, r.treat.beta) == (a0, b0, a1, b1)

    def test_reference_ratios(self, sweep):
        for r, (conv, ney) in zip(sweep, TABLE3_REFERENCE):
            assert r.ratio_vs_conventional == pytest.approx(conv, abs=0.02)
            assert r.ratio_vs_neyman_upper == pytest.approx(ney, abs=0.02)

    def test_bounded(self, sweep):
        for r in sweep:
            assert 0 < r.ratio_vs_conventional <= 1 + 1e-9
            assert 0 < r.ratio_vs_neyman_upper <= 1 + 1e-9

    def test_algebraic_identity(self, sweep):
        for r in sweep:
            s1, s0 = r.treat.variance, r.control.variance
            lhs = r.ratio_vs_conventional * 2 * (s1 + s0)
            rhs = r.ratio_vs_neyman_upper * (s1 + s0 + 2 * math.sqrt(s1 * s0))
            assert lhs == pytest.approx(rhs, rel=1e-9)
