"""Tests for parity-aware field containers and the Cartesian chain rule."""

import numpy as np
import pytest

from norm_inflation_lab.constants import FieldError
from norm_inflation_lab.fields import (
    AnyField,
    Parity,
    PrefactoredField,
    RadialProfile,
    ScalarField,
    SplitField,
    cartesian_derivative,
    combine,
    cos_beta,
    sin_beta,
)
from norm_inflation_lab.grid import Grid, build_grid
from norm_inflation_lab.norms import full_period_values


@pytest.fixture
def grid() -> Grid:
    return build_grid(0.1, 4.0, 256, 33, "uniform-R")


class TestParity:
    """Test parity algebra."""

    def test_product_of_sines(self):
        """sin(b) sin(b) is in the cos 2m class."""
        assert Parity.SIN_ODD * Parity.SIN_ODD is Parity.COS_EVEN
        assert Parity.SIN_EVEN * Parity.COS_ODD is Parity.SIN_ODD

    def test_derivative_flips(self):
        """d/dbeta maps sin 2m to cos 2m and back."""
        assert Parity.SIN_EVEN.flipped() is Parity.COS_EVEN
        assert Parity.COS_ODD.flipped() is Parity.SIN_ODD

    def test_of_sine_and_cosine(self):
        assert Parity.of_sine(2) is Parity.SIN_EVEN
        assert Parity.of_sine(3) is Parity.SIN_ODD
        assert Parity.of_cosine(0) is Parity.COS_EVEN
        assert Parity.of_cosine(1) is Parity.COS_ODD


class TestContainers:
    """Test construction, arithmetic and combination."""

    def test_shape_mismatch(self, grid: Grid):
        """A profile of the wrong length is rejected."""
        with pytest.raises(FieldError, match="profile shape"):
            RadialProfile(grid, np.zeros(grid.nR + 1))

    def test_non_finite_rejected(self, grid: Grid):
        values = np.zeros(grid.shape)
        values[3, 3] = np.nan
        with pytest.raises(FieldError, match="non-finite"):
            ScalarField(grid, values, Parity.SIN_EVEN)

    def test_values_are_copied_read_only(self, grid: Grid):
        source = np.ones(grid.nR)
        profile = RadialProfile(grid, source)
        source[0] = 5.0
        assert profile.values[0] == 1.0
        with pytest.raises(ValueError):
            profile.values[0] = 2.0

    def test_grid_mismatch(self, grid: Grid):
        """Fields on different grids cannot be combined."""
        other = build_grid(0.2, 4.0, 256, 33, "uniform-R")
        with pytest.raises(FieldError, match="different grids"):
            RadialProfile.zeros(grid).as_field() + RadialProfile.zeros(other).as_field()

    def test_same_parity_merges(self, grid: Grid):
        """Adding two sin 2m fields stays a ScalarField."""
        f = RadialProfile(grid, np.ones(grid.nR))
        total = f.times_sin(2) + f.times_sin(4)
        assert isinstance(total, ScalarField)
        assert total.parity is Parity.SIN_EVEN

    def test_mixed_parity_splits(self, grid: Grid):
        """Adding sin 2 beta and a radial field gives a two-part SplitField."""
        f = RadialProfile(grid, np.ones(grid.nR))
        total = f.times_sin(2) + f.as_field()
        assert isinstance(total, SplitField)
        assert {p.parity for p in total.parts} == {Parity.SIN_EVEN, Parity.COS_EVEN}
        np.testing.assert_allclose(total.part(Parity.COS_EVEN).values, 1.0)
        assert not np.any(total.part(Parity.SIN_ODD).values)

    def test_combine_empty(self, grid: Grid):
        with pytest.raises(FieldError):
            combine(grid, [])

    def test_duplicate_parts_rejected(self, grid: Grid):
        part = ScalarField.zeros(grid)
        with pytest.raises(FieldError, match="distinct"):
            SplitField(grid, (part, part))

    def test_product_parity(self, grid: Grid):
        """sin(beta) times cos(beta) is (1/2) sin(2 beta)."""
        product = sin_beta(grid) * cos_beta(grid)
        assert isinstance(product, ScalarField)
        assert product.parity is Parity.SIN_EVEN
        beta = np.asarray(grid.beta_nodes)
        np.testing.assert_allclose(product.values[0], 0.5 * np.sin(2.0 * beta), atol=1e-15)


class TestDerivatives:
    """Test beta and radial derivatives."""

    def test_d_beta_of_sin2(self, grid: Grid):
        """d/dbeta sin(2 beta) = 2 cos(2 beta), endpoints included through the ghosts."""
        f = RadialProfile(grid, np.ones(grid.nR)).times_sin(2)
        beta = np.asarray(grid.beta_nodes)
        df = f.d_beta()
        assert df.parity is Parity.COS_EVEN
        np.testing.assert_allclose(df.values[5], 2.0 * np.cos(2.0 * beta), atol=1e-4)

    def test_d_beta2_of_cos1(self, grid: Grid):
        """d^2/dbeta^2 cos(beta) = -cos(beta)."""
        f = cos_beta(grid)
        np.testing.assert_allclose(f.d_beta2().values, -f.values, atol=1e-5)

    def test_r_dr_of_power(self, grid: Grid):
        """R d/dR R^2 sin(2 beta) = 2 R^2 sin(2 beta)."""
        R = np.asarray(grid.R_nodes)
        f = RadialProfile(grid, R**2).times_sin(2)
        np.testing.assert_allclose(f.r_dr().values, 2.0 * f.values, atol=1e-10)

    def test_d_s4_of_quadratic(self, grid: Grid):
        """The fourth radial derivative of a quadratic vanishes."""
        R = np.asarray(grid.R_nodes)
        f = RadialProfile(grid, R**2).as_field()
        np.testing.assert_allclose(f.d_s4().values, 0.0, atol=1e-4)


class TestCartesianDerivative:
    """Test the chain rule with symbolic R^{q/alpha} prefactors."""

    def test_derivative_of_y(self, grid: Grid):
        """f = R^{1/alpha} sin(beta): d_y f = 1 and d_x f = 0."""
        f = PrefactoredField(sin_beta(grid), 1)
        dy = cartesian_derivative(f, "y")
        dx = cartesian_derivative(f, "x")
        assert not isinstance(dy, PrefactoredField)
        assert not isinstance(dx, PrefactoredField)
        np.testing.assert_allclose(full_period_values(dy), 1.0, atol=1e-5)
        np.testing.assert_allclose(full_period_values(dx), 0.0, atol=1e-5)

    def test_radial_times_cos(self, grid: Grid):
        """d_x (R^{1/alpha} eta(R) cos beta) = eta + alpha R eta' cos^2 beta."""
        R = np.asarray(grid.R_nodes)
        eta = np.exp(-((R - 2.0) ** 2))
        base = RadialProfile(grid, eta).times_cos(1)
        dx = cartesian_derivative(PrefactoredField(base, 1), "x")
        _, beta = grid.mesh()
        deta = -2.0 * (R - 2.0) * eta
        expected = eta[:, None] + grid.alpha * (R * deta)[:, None] * np.cos(beta) ** 2
        quarter = full_period_values(dx)[:, : grid.n_beta]
        np.testing.assert_allclose(quarter[4:-4], expected[4:-4], atol=1e-5)

    def test_constant_has_zero_derivative(self, grid: Grid):
        f = RadialProfile(grid, np.full(grid.nR, 3.0)).as_field()
        for which in ("x", "y"):
            out = cartesian_derivative(f, which)
            assert isinstance(out, PrefactoredField)
            assert out.power == -1
            for part in out.base.parts:
                np.testing.assert_allclose(part.values, 0.0, atol=1e-10)

    def test_unknown_direction(self, grid: Grid):
        with pytest.raises(FieldError, match="unknown direction"):
            cartesian_derivative(sin_beta(grid), "z")  # type: ignore[arg-type]

    def test_prefactor_overflow(self):
        """A prefactor that overflows on the support is an error."""
        grid = build_grid(1e-3, 8.0, 64, 17, "uniform-R")
        f = PrefactoredField(RadialProfile(grid, np.ones(grid.nR)).as_field(), 1)
        with pytest.raises(FieldError, match="overflows"):
            f.evaluate()


def _max_error(field: AnyField | PrefactoredField, exact: AnyField | None) -> float:
    base = field.base if isinstance(field, PrefactoredField) else field
    values = full_period_values(base)
    if exact is not None:
        values = values - full_period_values(exact)
    return float(np.max(np.abs(values)))


class TestCartesianConvergence:
    """Test the chain rule against closed forms at two resolutions."""

    MONOMIALS = (
        # base of R^{2/alpha} b(beta), parity, exact d_x, exact d_y (bases of R^{1/alpha})
        (lambda b: np.cos(b) ** 2, Parity.COS_EVEN, (np.cos, 2.0), None),
        (lambda b: np.sin(b) * np.cos(b), Parity.SIN_EVEN, (np.sin, 1.0), (np.cos, 1.0)),
        (lambda b: np.sin(b) ** 2, Parity.COS_EVEN, None, (np.sin, 2.0)),
    )

    @staticmethod
    def _exact(grid: Grid, closed_form: tuple | None) -> ScalarField | None:
        if closed_form is None:
            return None
        fn, scale = closed_form
        parity = Parity.COS_ODD if fn is np.cos else Parity.SIN_ODD
        return ScalarField.from_function(grid, lambda R, b: scale * fn(b), parity)

    def _quadratic_error(self, n_beta: int) -> float:
        grid = build_grid(0.1, 4.0, 64, n_beta, "uniform-R")
        beta = np.asarray(grid.beta_nodes)
        error = 0.0
        for fn, parity, exact_x, exact_y in self.MONOMIALS:
            values = np.broadcast_to(fn(beta)[None, :], grid.shape)
            f = PrefactoredField(ScalarField(grid, values, parity), 2)
            for which, closed_form in (("x", exact_x), ("y", exact_y)):
                out = cartesian_derivative(f, which)
                assert isinstance(out, PrefactoredField)
                assert out.power == 1
                error = max(error, _max_error(out, self._exact(grid, closed_form)))
        return error

    def test_quadratics_converge(self):
        """x^2, xy, y^2 differentiate to 2x, y, x, 2y with at least second order in beta."""
        coarse, fine = self._quadratic_error(17), self._quadratic_error(33)
        assert fine < 1e-4
        assert np.log2(coarse / fine) >= 1.8

    @staticmethod
    def _commutator(nR: int, n_beta: int) -> float:
        grid = build_grid(0.1, 4.0, nR, n_beta, "uniform-R")
        f = ScalarField.from_function(
            grid, lambda R, b: np.exp(-((R - 2.0) ** 2)) * np.cos(b) ** 2, Parity.COS_EVEN
        )
        xy = cartesian_derivative(cartesian_derivative(f, "x"), "y")
        yx = cartesian_derivative(cartesian_derivative(f, "y"), "x")
        assert isinstance(xy, PrefactoredField)
        assert isinstance(yx, PrefactoredField)
        assert xy.power == yx.power == -2
        gap = np.abs(full_period_values(xy.base) - full_period_values(yx.base))
        R = np.asarray(grid.R_nodes)
        inner = (R >= 0.5) & (R <= 3.5)
        return float(np.max(gap[inner]))

    def test_mixed_derivatives_commute(self):
        coarse, fine = self._commutator(128, 17), self._commutator(256, 33)
        assert coarse < 1e-2
        assert fine <= coarse / 2.0**1.5
