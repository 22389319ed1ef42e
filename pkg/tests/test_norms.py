"""Tests for the norms evaluated from quarter-period samples."""

import numpy as np
import pytest

from norm_inflation_lab.constants import NormError
from norm_inflation_lab.fields import Parity, RadialProfile, ScalarField
from norm_inflation_lab.grid import Grid, build_grid
from norm_inflation_lab.initial_data import DataParams, bump, make_eta0_2d
from norm_inflation_lab.norms import (
    NormKind,
    beta_project,
    calHk_norm,
    calWk_norm,
    l2_norm,
    linf_norm,
    profile_l2,
    weighted_L2_3d,
)


@pytest.fixture
def grid() -> Grid:
    return build_grid(0.01, 4.0, 256, 65, "uniform-R")


@pytest.fixture
def unit_bump(grid: Grid) -> RadialProfile:
    return RadialProfile(grid, bump(np.asarray(grid.R_nodes) - 2.0))


class TestLinf:
    """Test the sup norm."""

    def test_zero(self, grid: Grid):
        assert linf_norm(RadialProfile.zeros(grid)).value == 0.0

    def test_sin2(self, grid: Grid):
        """sin(2 beta) attains 1 at the node beta = pi/4."""
        f = RadialProfile(grid, np.ones(grid.nR)).times_sin(2)
        assert linf_norm(f).value == pytest.approx(1.0, abs=1e-14)

    def test_eta0_range(self, uniform_grid: Grid, params_2d: DataParams):
        """The 2d density profile is of size delta."""
        value = linf_norm(make_eta0_2d(params_2d, uniform_grid)).value
        assert 0.1 <= value <= 0.2001 * 1.0001

    def test_mixed_parity_uses_full_period(self, grid: Grid):
        """1 - sin(2 beta) reaches 2 only on a reflected copy of the quarter."""
        ones = RadialProfile(grid, np.ones(grid.nR))
        f = ones.as_field() - ones.times_sin(2)
        assert linf_norm(f).value == pytest.approx(2.0, abs=1e-12)
        assert linf_norm(f).kind is NormKind.LINF


class TestL2AndSobolev:
    """Test L2 and the weighted Sobolev norms."""

    def test_separable_l2(self, grid: Grid, unit_bump: RadialProfile):
        """||phi(R) sin 2beta||^2 = pi ||phi||^2."""
        f = unit_bump.times_sin(2)
        assert l2_norm(f).value ** 2 == pytest.approx(np.pi * profile_l2(unit_bump) ** 2, rel=1e-10)

    def test_zero_any_order(self, grid: Grid):
        zero = RadialProfile.zeros(grid).times_sin(2)
        for k in range(4):
            assert calHk_norm(zero, k).value == 0.0
            assert calWk_norm(zero, k).value == 0.0

    def test_order_zero_doubles(self, grid: Grid, unit_bump: RadialProfile):
        """At m = i = 0 both sums contribute the same term."""
        f = unit_bump.times_sin(2)
        assert calHk_norm(f, 0).value == pytest.approx(2.0 * l2_norm(f).value, rel=1e-14)
        assert calWk_norm(unit_bump, 0).value == pytest.approx(
            2.0 * linf_norm(unit_bump).value, rel=1e-14
        )

    def test_W1_of_sin2(self, grid: Grid):
        """f = sin(2 beta): 2 * 1 for f, 2 * 2 for d_beta f, radial terms vanish."""
        f = RadialProfile(grid, np.ones(grid.nR)).times_sin(2)
        assert calWk_norm(f, 1).value == pytest.approx(6.0, rel=1e-4)

    def test_homogeneity(self, grid: Grid, unit_bump: RadialProfile):
        f = unit_bump.times_sin(2)
        for norm in (l2_norm, linf_norm):
            assert norm(f * -3.0).value == pytest.approx(3.0 * norm(f).value, rel=1e-12)
        assert calHk_norm(f * 2.5, 2).value == pytest.approx(
            2.5 * calHk_norm(f, 2).value, rel=1e-12
        )

    def test_monotone_in_order(self, grid: Grid, unit_bump: RadialProfile):
        f = unit_bump.times_sin(2)
        values = [calHk_norm(f, k).value for k in range(4)]
        assert values == sorted(values)

    def test_order_limit(self, grid: Grid, unit_bump: RadialProfile):
        with pytest.raises(NormError, match="order"):
            calHk_norm(unit_bump, 7)


class TestWeightedL2:
    """Test the 3d weighted norm."""

    def test_zero(self, grid: Grid):
        f = RadialProfile.zeros(grid).times_sin(2)
        assert weighted_L2_3d(f, 0.99, grid.alpha).value == 0.0

    def test_bounded_by_weight_on_support(self, grid: Grid):
        """On R >= 1, beta in [pi/8, 3pi/8] the weight is below 16 sin(pi/4)^-sigma."""
        R, beta = grid.mesh()
        mask = (R >= 1.0) & (R <= 3.0) & (beta >= np.pi / 8) & (beta <= 3 * np.pi / 8)
        f = ScalarField(grid, np.where(mask, 1.0, 0.0), Parity.COS_EVEN)
        sigma = 1.0 + grid.alpha / 10.0
        bound = np.sqrt(16.0 * np.sin(np.pi / 4) ** -sigma)
        assert weighted_L2_3d(f, sigma, grid.alpha).value <= bound * l2_norm(f).value

    def test_sin2_indicator_finite(self, grid: Grid):
        """sin(2 beta) 1_[1,2](R) is integrable for sigma = 1 + alpha/10."""
        R = np.asarray(grid.R_nodes)
        profile = RadialProfile(grid, np.where((R >= 1.0) & (R <= 2.0), 1.0, 0.0))
        value = weighted_L2_3d(profile.times_sin(2), 1.0 + grid.alpha / 10.0, grid.alpha).value
        assert np.isfinite(value)
        assert value > 0.0

    def test_unknown_sigma(self, grid: Grid):
        with pytest.raises(NormError, match="sigma"):
            weighted_L2_3d(RadialProfile.zeros(grid).times_sin(2), 0.5, grid.alpha)

    def test_not_vanishing_on_axis(self, grid: Grid):
        """A radial field does not vanish where sin(2 beta) does."""
        R = np.asarray(grid.R_nodes)
        f = RadialProfile(grid, np.where(R > 1.0, 1.0, 0.0)).as_field()
        with pytest.raises(NormError, match="vanish"):
            weighted_L2_3d(f, 0.99, grid.alpha)


class TestBetaProject:
    """Test angular mode projection."""

    def test_recovers_coefficient(self, grid: Grid, unit_bump: RadialProfile):
        f = unit_bump.times_sin(2)
        np.testing.assert_allclose(beta_project(f, 2).values, unit_bump.values, atol=1e-10)

    def test_orthogonal_mode(self, grid: Grid, unit_bump: RadialProfile):
        f = unit_bump.times_sin(4)
        np.testing.assert_allclose(beta_project(f, 2).values, 0.0, atol=1e-10)

    def test_superposition(self, grid: Grid, unit_bump: RadialProfile):
        """Modes 2 and 6 are recovered independently."""
        f = unit_bump.times_sin(2) + (unit_bump * 3.0).times_sin(6)
        np.testing.assert_allclose(beta_project(f, 2).values, unit_bump.values, atol=1e-10)
        np.testing.assert_allclose(beta_project(f, 6).values, 3.0 * unit_bump.values, atol=1e-10)

    def test_radial_part_ignored(self, grid: Grid, unit_bump: RadialProfile):
        f = unit_bump.times_sin(2) + unit_bump.as_field()
        np.testing.assert_allclose(beta_project(f, 2).values, unit_bump.values, atol=1e-10)

    def test_invalid_mode(self, grid: Grid, unit_bump: RadialProfile):
        with pytest.raises(NormError):
            beta_project(unit_bump.times_sin(2), 0)


class TestNormProperties:
    """Test properties every norm shares."""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_triangle_inequality(self, grid: Grid, seed: int):
        rng = np.random.default_rng(seed)
        f = ScalarField(grid, rng.normal(size=grid.shape), Parity.SIN_EVEN)
        g = ScalarField(grid, rng.normal(size=grid.shape), Parity.SIN_EVEN)
        total = f + g
        for norm in (l2_norm, linf_norm):
            assert norm(total).value <= (norm(f).value + norm(g).value) * (1.0 + 1e-12)
        for k in (1, 2):
            for norm in (calHk_norm, calWk_norm):
                bound = norm(f, k).value + norm(g, k).value
                assert norm(total, k).value <= bound * (1.0 + 1e-12)

    def test_parseval_for_sine_modes(self, grid: Grid, unit_bump: RadialProfile):
        """||f||^2 = pi sum_n ||a_n||^2 over the sin(n beta) coefficients of f."""
        f = unit_bump.times_sin(2) + (unit_bump * 0.5).times_sin(4) + (unit_bump * 2.0).times_sin(6)
        energy = np.pi * sum(profile_l2(beta_project(f, n)) ** 2 for n in range(2, 17, 2))
        assert energy == pytest.approx(l2_norm(f).value ** 2, rel=1e-8)
