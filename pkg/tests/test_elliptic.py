"""Tests for the stream-function solvers and the elliptic estimates."""

import numpy as np
import pytest

from norm_inflation_lab.constants import EllipticError
from norm_inflation_lab.elliptic import (
    apply_operator_3d,
    decompose_psi_2d,
    decompose_psi_3d,
    far_field_change,
    solve_psi_2d,
    solve_psi_3d,
    verify_elliptic_estimates,
)
from norm_inflation_lab.fields import Parity, RadialProfile, ScalarField, cos_beta
from norm_inflation_lab.grid import Grid, build_grid
from norm_inflation_lab.initial_data import bump, bump_derivative, elliptic_test_vorticity
from norm_inflation_lab.norms import beta_project, l2_norm


def _relative_error(numeric: np.ndarray, exact: np.ndarray) -> float:
    return float(np.max(np.abs(numeric - exact)) / np.max(np.abs(exact)))


@pytest.fixture
def grid() -> Grid:
    return build_grid(0.1, 8.0, 1024, 33, "log-R")


def _manufactured_2d(grid: Grid, m: int) -> tuple[ScalarField, ScalarField]:
    """Psi = phi(R) sin(2 m beta) (m >= 1) or phi(R) (m = 0) and its exact Omega."""
    a = grid.alpha
    R = np.asarray(grid.R_nodes)
    u = R - 2.0
    phi = bump(u)
    radial = a * a * R**2 * bump_derivative(u, 2) + (4.0 * a + a * a) * R * bump_derivative(u, 1)
    omega_profile = -((4.0 - 4.0 * m * m) * phi + radial)
    if m == 0:
        return RadialProfile(grid, phi).as_field(), RadialProfile(grid, omega_profile).as_field()
    psi = RadialProfile(grid, phi).times_sin(2 * m)
    return psi, RadialProfile(grid, omega_profile).times_sin(2 * m)


class TestSolve2d:
    """Test the mode-by-mode 2d solver against manufactured solutions."""

    @pytest.mark.parametrize("m", [0, 1, 2, 3])
    def test_manufactured(self, grid: Grid, m: int):
        psi, omega = _manufactured_2d(grid, m)
        numeric = solve_psi_2d(omega, grid.alpha)
        assert _relative_error(np.asarray(numeric.values), np.asarray(psi.values)) < 1e-2

    @pytest.mark.parametrize("m", [1, 2])
    def test_second_order_in_nR(self, m: int):
        """Observed order of the manufactured error between nR = 512 and 1024 is at least 1.8."""
        errors, steps = [], []
        for nR in (512, 1024):
            grid = build_grid(0.1, 8.0, nR, 17, "log-R")
            psi, omega = _manufactured_2d(grid, m)
            numeric = solve_psi_2d(omega, grid.alpha)
            errors.append(_relative_error(np.asarray(numeric.values), np.asarray(psi.values)))
            steps.append(grid.h_radial)
        order = np.log(errors[0] / errors[1]) / np.log(steps[0] / steps[1])
        assert order >= 1.8

    def test_zero(self, grid: Grid):
        psi = solve_psi_2d(ScalarField.zeros(grid), grid.alpha)
        assert not np.any(psi.values)

    def test_linear_in_omega(self, grid: Grid):
        _, omega = _manufactured_2d(grid, 2)
        single = np.asarray(solve_psi_2d(omega, grid.alpha).values)
        double = np.asarray(solve_psi_2d(omega * 2.0, grid.alpha).values)
        np.testing.assert_allclose(double, 2.0 * single, rtol=1e-12, atol=1e-14)

    def test_odd_parity_rejected(self, grid: Grid):
        with pytest.raises(EllipticError, match="parity"):
            solve_psi_2d(cos_beta(grid), grid.alpha)

    def test_far_field_is_small(self, grid: Grid):
        _, omega = _manufactured_2d(grid, 1)
        assert far_field_change(omega, grid.alpha) < 1e-3


class TestDecomposition2d:
    """Test Psi = psi_app + R^alpha part + Psi_err."""

    def test_pure_sin2_has_no_rest(self, grid: Grid):
        omega = RadialProfile(grid, bump(np.asarray(grid.R_nodes) - 2.0)).times_sin(2)
        psi = solve_psi_2d(omega, grid.alpha)
        dec = decompose_psi_2d(omega, psi, grid.alpha)
        assert float(l2_norm(dec.psi_err)) <= 1e-10 * float(l2_norm(psi))
        assert dec.ell2_residual < 1e-2

    def test_rest_has_no_sin2_mode(self, grid: Grid):
        omega = elliptic_test_vorticity(grid)
        dec = decompose_psi_2d(omega, solve_psi_2d(omega, grid.alpha), grid.alpha)
        leak = np.max(np.abs(beta_project(dec.psi_err, 2).values))
        assert leak <= 1e-8 * np.max(np.abs(np.asarray(dec.psi_err.values)))

    def test_psi2_sums_parts(self, grid: Grid):
        omega = elliptic_test_vorticity(grid)
        dec = decompose_psi_2d(omega, solve_psi_2d(omega, grid.alpha), grid.alpha)
        np.testing.assert_allclose(
            np.asarray(dec.psi2.values),
            np.asarray(dec.psi_app.values) + np.asarray(dec.r_part.values),
        )


class TestSolve3d:
    """Test the sparse collocation solver."""

    def test_manufactured(self):
        grid = build_grid(0.1, 8.0, 256, 65, "log-R")
        psi = RadialProfile(grid, bump(np.asarray(grid.R_nodes) - 2.0)).times_sin(2)
        omega = apply_operator_3d(psi, grid.alpha)
        numeric = np.asarray(solve_psi_3d(omega, grid.alpha).values)
        exact = np.asarray(psi.values)
        inner = (slice(1, -1), slice(0, grid.n_beta - 1))
        assert _relative_error(numeric[inner], exact[inner]) < 5e-2

    def test_dirichlet(self):
        grid = build_grid(0.1, 8.0, 128, 33, "log-R")
        omega = RadialProfile(grid, bump(np.asarray(grid.R_nodes) - 2.0)).times_sin(2)
        psi = np.asarray(solve_psi_3d(omega, grid.alpha).values)
        assert not np.any(psi[:, 0])
        assert not np.any(psi[:, -1])
        assert not np.any(psi[0])

    def test_decomposition(self):
        grid = build_grid(0.1, 8.0, 128, 33, "log-R")
        omega = RadialProfile(grid, bump(np.asarray(grid.R_nodes) - 2.0)).times_sin(2)
        omega = omega * cos_beta(grid)
        dec = decompose_psi_3d(omega, solve_psi_3d(omega, grid.alpha), grid.alpha)
        assert not np.any(dec.r_part.values)
        assert dec.psi_app.parity is Parity.SIN_EVEN


class TestEstimates:
    """Test the alpha-uniform estimate report."""

    def test_zero_vorticity(self, grid: Grid):
        report = verify_elliptic_estimates(ScalarField.zeros(grid))
        assert report.passed
        assert report.diagnostics["hardy_max"] is None

    def test_default_vorticity_passes(self):
        grid = build_grid(0.1, 8.0, 512, 33, "log-R")
        report = verify_elliptic_estimates(elliptic_test_vorticity(grid))
        assert report.passed, [c.name for c in report.failed_checks]
        assert report.diagnostics["hardy_max"] <= 1.0 / 15.0
        assert {"err_bb@0.1", "err_bb@0.01", "err_bb@0.001"} <= set(report.diagnostics)

    def test_tight_cap_fails(self):
        grid = build_grid(0.1, 8.0, 512, 33, "log-R")
        report = verify_elliptic_estimates(elliptic_test_vorticity(grid), cap=1e-6)
        assert not report.passed
        assert "hardy_cap" in {c.name for c in report.failed_checks}
