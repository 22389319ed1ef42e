"""Stream-function solvers in scaled polar coordinates and the Biot-Savart split.

2d: 4 Psi + a^2 R^2 Psi_RR + Psi_bb + (4a + a^2) R Psi_R = -Omega. The beta-modes decouple;
in s = log R each mode is a constant-coefficient second-order ODE that factors into two
first-order ones, solved by exponential sweeps with decay at both ends of the axis.

3d: -a^2 R^2 Psi_RR - a(a + 5) R Psi_R - Psi_bb + d_b(tan(b) Psi) - 6 Psi = Omega with
Psi = 0 on b = 0 and b = pi/2. The tan term couples the modes, so the problem is assembled
as a sparse second-order collocation system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft, sparse
from scipy.sparse.linalg import spsolve

from .constants import EllipticError
from .fields import AnyField, Parity, RadialProfile, ScalarField, as_split, combine
from .grid import FloatArray, Grid, Spacing, radial_r2_drr, radial_r_dr
from .logger import logger
from .norms import beta_project, l2_norm, profile_l2
from .operators import exponential_sweep, op_L, op_L12, op_Ralpha, tail_integral_on
from .report import Check, VerificationReport


ANCHOR_2D = 'eq. (ellittica), "with boundary conditions"'
ANCHOR_HARDY = 'eq. (hardy), "the last inequality is uniform in"'
ANCHOR_REST = 'eq. (est-rem), "The following estimates hold"'
ANCHOR_MODES = 'eq. (ell-err), "the above sum is actually over"'

DEFAULT_LADDER = (1e-1, 1e-2, 1e-3)
RATIO_CAP = 10.0
RATIO_GROWTH = 1.5
RATIO_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class PsiDecomposition:
    """Psi = psi_app + r_part + psi_err, with the residual of the Psi_2 radial equation."""

    psi: AnyField
    psi_app: ScalarField
    r_part: ScalarField
    psi_err: AnyField
    ell2_residual: float = float("nan")

    @property
    def psi2(self) -> AnyField:
        return self.psi_app + self.r_part


# 2d


def _mode_solve(coeffs: FloatArray, n: FloatArray, grid: Grid, alpha: float) -> FloatArray:
    """Solve a^2 D^2 P + 4a D P + (4 - 4n^2) P = -c column by column, D = d/ds.

    Args:
    ----
        coeffs: Mode coefficients of Omega, shape (nR, m).
        n: Mode index of each column, shape (m,).
        grid: Radial grid.
        alpha: Scaling exponent.

    Returns:
    -------
        Mode coefficients of Psi, shape (nR, m).

    """
    s = np.asarray(grid.s_nodes)
    a2 = alpha * alpha
    out = np.zeros_like(coeffs)

    high = n >= 2
    if np.any(high):
        lam = (2.0 * n[high] - 2.0) / alpha
        mu = (2.0 * n[high] + 2.0) / alpha
        # (D - lam) phi = -c/a^2 decays at +inf, (D + mu) psi = phi is regular at 0
        phi = exponential_sweep(coeffs[:, high] / a2, s, lam, reverse=True)
        out[:, high] = exponential_sweep(phi, s, mu, y0=phi[0] / (mu + lam))

    one = n == 1
    if np.any(one):
        c = coeffs[:, one]
        rate = 4.0 / alpha
        ralpha = exponential_sweep(c, s, rate, y0=c[0] / rate) / (4.0 * alpha)
        out[:, one] = tail_integral_on(grid, c) / (4.0 * alpha) + ralpha

    zero = n == 0
    if np.any(zero):
        rate = 2.0 / alpha
        phi = exponential_sweep(-coeffs[:, zero] / a2, s, rate)
        out[:, zero] = exponential_sweep(phi, s, rate)

    bad = ~np.all(np.isfinite(out), axis=0)
    if np.any(bad):
        raise EllipticError("radial mode solve overflowed", mode=int(n[np.argmax(bad)]))
    return out


def _solve_part_2d(part: ScalarField, alpha: float) -> ScalarField:
    grid = part.grid
    values = np.asarray(part.values)
    out = np.zeros(grid.shape)
    if part.parity is Parity.SIN_EVEN:
        y = fft.dst(values[:, 1:-1], type=1, axis=1)
        n = np.arange(1, y.shape[1] + 1, dtype=np.float64)
        out[:, 1:-1] = fft.idst(_mode_solve(y, n, grid, alpha), type=1, axis=1)
    elif part.parity is Parity.COS_EVEN:
        y = fft.dct(values, type=1, axis=1)
        n = np.arange(y.shape[1], dtype=np.float64)
        out[:] = fft.idct(_mode_solve(y, n, grid, alpha), type=1, axis=1)
    else:
        raise EllipticError(
            f"parity class {part.parity.name} has no pi-periodic 2d stream function"
        )
    return part.with_values(out)


def solve_psi_2d(omega: AnyField, alpha: float) -> AnyField:
    """Stream function of the 2d scaled problem, decaying in R at both ends.

    Each parity part is expanded in its quarter-period basis (sin(2n beta) by a type-1 DST on
    the interior nodes, cos(2n beta) by a type-1 DCT) and each mode is solved by two sweeps.

    Raises
    ------
        EllipticError: For odd parity parts, or if a mode solve overflows.

    """
    logger.debug(f"2d elliptic solve: alpha={alpha}, grid {omega.grid.shape}")
    return combine(omega.grid, [_solve_part_2d(p, alpha) for p in omega.parts])


def apply_operator_2d(psi: AnyField, alpha: float) -> AnyField:
    """Omega = -(4 Psi + a^2 R^2 Psi_RR + Psi_bb + (4a + a^2) R Psi_R), fourth-order stencils."""
    a = alpha
    lhs = psi * 4.0 + psi.r2_drr() * (a * a) + psi.d_beta2() + psi.r_dr() * (4.0 * a + a * a)
    return -lhs


def _ell2_residual(psi2_profile: RadialProfile, omega2: RadialProfile, alpha: float) -> float:
    """max |a^2 R^2 P'' + (4a + a^2) R P' + omega2| / max |omega2| away from the two ends."""
    grid = omega2.grid
    P = psi2_profile.values
    res = (
        alpha * alpha * radial_r2_drr(P, grid)
        + (4.0 * alpha + alpha * alpha) * radial_r_dr(P, grid)
        + omega2.values
    )
    scale = float(np.max(np.abs(omega2.values)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(res[2:-2]))) / scale


def decompose_psi_2d(omega: AnyField, psi: AnyField, alpha: float) -> PsiDecomposition:
    """Split Psi into L(Omega)/(4a) sin 2b, R^alpha(Omega) sin 2b and the rest."""
    L = op_L(omega)
    R_alpha = op_Ralpha(omega, alpha)
    psi_app = (L * (1.0 / (4.0 * alpha))).times_sin(2)
    r_part = R_alpha.times_sin(2)
    psi_err = psi - psi_app - r_part
    residual = _ell2_residual(L * (1.0 / (4.0 * alpha)) + R_alpha, beta_project(omega, 2), alpha)
    logger.debug(f"2d decomposition: alpha={alpha}, ell2 residual {residual:.3e}")
    return PsiDecomposition(psi, psi_app, r_part, psi_err, residual)


def _extended_grid(grid: Grid) -> Grid:
    """The same nodes continued with the same spacing up to at least 2 R_max."""
    R = np.asarray(grid.R_nodes)
    if grid.spacing is Spacing.LOG_R:
        q = R[1] / R[0]
        extra = int(np.ceil(np.log(2.0) / np.log(q)))
        tail = R[-1] * q ** np.arange(1, extra + 1)
    else:
        h = R[1] - R[0]
        tail = R[-1] + h * np.arange(1, grid.nR + 1)
    return Grid(grid.alpha, np.concatenate([R, tail]), grid.beta_nodes.copy(), grid.spacing)


def far_field_change(omega: AnyField, alpha: float) -> float:
    """Relative change of Psi on R <= R_max/2 when the radial domain is doubled."""
    grid = omega.grid
    big = _extended_grid(grid)
    pad = big.nR - grid.nR
    omega_big = combine(
        big,
        [ScalarField(big, np.pad(p.values, ((0, pad), (0, 0))), p.parity) for p in omega.parts],
    )
    psi = as_split(solve_psi_2d(omega, alpha)).quarter_values()
    psi_big = as_split(solve_psi_2d(omega_big, alpha)).quarter_values()[: grid.nR]
    region = np.asarray(grid.R_nodes) <= 0.5 * grid.R_max
    scale = float(np.max(np.abs(psi[region])))
    if scale == 0.0:
        return 0.0
    change = float(np.max(np.abs(psi_big[region] - psi[region]))) / scale
    logger.debug(f"far-field change on doubling R_max: {change:.3e}")
    return change


# 3d


def _radial_matrix_3d(s: FloatArray, alpha: float) -> sparse.csr_matrix:
    """-a^2 D^2 - 5a D on the interior s nodes, three-point nonuniform stencils."""
    hm = s[1:-1] - s[:-2]
    hp = s[2:] - s[1:-1]
    tot = hm + hp
    a2 = alpha * alpha
    lower = -a2 * 2.0 / (hm * tot) + 5.0 * alpha * hp / (hm * tot)
    diag = a2 * 2.0 / (hm * hp) - 5.0 * alpha * (hp - hm) / (hm * hp)
    upper = -a2 * 2.0 / (hp * tot) - 5.0 * alpha * hm / (hp * tot)
    return sparse.diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], format="csr")


def _angular_matrix_3d(beta: FloatArray) -> sparse.csr_matrix:
    """-D^2 + tan(b) D + sec^2(b) - 6 on the interior beta nodes."""
    h = beta[1] - beta[0]
    b = beta[1:-1]
    tan = np.tan(b)
    sec2 = 1.0 / np.cos(b) ** 2
    lower = -1.0 / h**2 - tan / (2.0 * h)
    diag = 2.0 / h**2 + sec2 - 6.0
    upper = -1.0 / h**2 + tan / (2.0 * h)
    return sparse.diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], format="csr")


def _solve_part_3d(part: ScalarField, alpha: float) -> ScalarField:
    grid = part.grid
    rhs = np.asarray(part.values)[1:-1, 1:-1]
    if not np.any(rhs):
        return part.with_values(np.zeros(grid.shape))
    Ds = _radial_matrix_3d(np.asarray(grid.s_nodes), alpha)
    Db = _angular_matrix_3d(np.asarray(grid.beta_nodes))
    A = sparse.kron(Ds, sparse.identity(Db.shape[0])) + sparse.kron(
        sparse.identity(Ds.shape[0]), Db
    )
    logger.debug(f"3d elliptic solve: {A.shape[0]} unknowns, alpha={alpha}")
    try:
        solution = spsolve(A.tocsc(), rhs.ravel())
    except RuntimeError as e:
        raise EllipticError(f"3d collocation solve failed: {e}") from e
    if not np.all(np.isfinite(solution)):
        raise EllipticError("3d collocation solve returned non-finite values")
    out = np.zeros(grid.shape)
    out[1:-1, 1:-1] = solution.reshape(rhs.shape)
    return part.with_values(out)


def solve_psi_3d(omega: AnyField, alpha: float) -> AnyField:
    """Stream function of the 3d axisymmetric problem, Dirichlet on both beta ends and both R ends.

    Raises
    ------
        EllipticError: If the sparse solve fails.

    """
    return combine(omega.grid, [_solve_part_3d(p, alpha) for p in omega.parts])


def _apply_part_3d(part: ScalarField, alpha: float) -> ScalarField:
    grid = part.grid
    beta = np.asarray(grid.beta_nodes)
    cos = np.cos(beta)
    interior = cos > 1e-12
    tan = np.where(interior, np.sin(beta) / np.where(interior, cos, 1.0), 0.0)
    sec2 = np.where(interior, 1.0 / np.where(interior, cos, 1.0) ** 2, 0.0)
    a = alpha
    values = (
        -a * a * part.r2_drr().values
        - a * (a + 5.0) * part.r_dr().values
        - part.d_beta2().values
        + tan * part.d_beta().values
        + (sec2 - 6.0) * part.values
    )
    values[:, ~interior] = 0.0
    return part.with_values(values)


def apply_operator_3d(psi: AnyField, alpha: float) -> AnyField:
    """The 3d operator with fourth-order stencils; the beta = pi/2 column is set to zero."""
    return combine(psi.grid, [_apply_part_3d(p, alpha) for p in psi.parts])


def decompose_psi_3d(omega: AnyField, psi: AnyField, alpha: float) -> PsiDecomposition:
    """Psi_app = L12(Omega)/(4a) sin 2b; there is no R^alpha part in 3d."""
    psi_app = (op_L12(omega) * (1.0 / (4.0 * alpha))).times_sin(2)
    r_part = ScalarField.zeros(omega.grid, Parity.SIN_EVEN)
    return PsiDecomposition(psi, psi_app, r_part, psi - psi_app)


# alpha-uniform estimates


def _on_grid(f: AnyField, grid: Grid) -> AnyField:
    return combine(grid, [ScalarField(grid, p.values, p.parity) for p in f.parts])


def _estimate_ratios(omega: AnyField, alpha: float) -> dict[str, float]:
    """The five estimate ratios plus the mode-content diagnostics at one alpha."""
    norm = float(l2_norm(omega))
    dec = decompose_psi_2d(omega, solve_psi_2d(omega, alpha), alpha)
    err, psi2 = dec.psi_err, dec.psi2
    ratios = {
        "err_bb": float(l2_norm(err.d_beta2())) / norm,
        "err_Rb": alpha * float(l2_norm(err.r_dr().d_beta())) / norm,
        "psi2_bb": alpha * float(l2_norm(psi2.d_beta2())) / norm,
        "psi2_RR": alpha * alpha * float(l2_norm(psi2.r2_drr())) / norm,
        "hardy": float(l2_norm(dec.r_part)) / norm,
    }
    err_norm = float(l2_norm(err))
    sin_part = [p for p in err.parts if p.parity is Parity.SIN_EVEN]
    ratios["mode2_deficiency"] = (
        profile_l2(beta_project(err, 2)) / err_norm if err_norm > 0.0 else 0.0
    )
    if sin_part and float(l2_norm(sin_part[0])) > RATIO_FLOOR * norm:
        p = sin_part[0]
        ratios["poincare"] = float(l2_norm(p.d_beta())) ** 2 / float(l2_norm(p)) ** 2
    ratios["ell2_residual"] = dec.ell2_residual
    return ratios


def verify_elliptic_estimates(
    omega: AnyField,
    alphas: tuple[float, ...] | list[float] = DEFAULT_LADDER,
    cap: float = RATIO_CAP,
) -> VerificationReport:
    """Check the alpha-uniform elliptic estimates on an alpha ladder.

    Every ratio must stay below ``cap`` and its maximum over the ladder must not exceed
    1.5 times its value at the largest alpha. Zero vorticity passes vacuously with every
    ratio reported as None.

    Args:
    ----
        omega: Vorticity samples; only the values are used, the grid alpha is replaced.
        alphas: The alpha ladder.
        cap: Fixed upper bound for every ratio.

    Returns:
    -------
        The verification report.

    """
    report = VerificationReport("elliptic-check", config={"alphas": list(alphas), "cap": cap})
    names = ("err_bb", "err_Rb", "psi2_bb", "psi2_RR", "hardy")
    if float(l2_norm(omega)) == 0.0:
        return report.extend(
            [Check.flag("zero_vorticity", True, ANCHOR_REST, "Omega = 0: ratios are 0/0")],
            **{f"{name}_max": None for name in names},
        )

    ladder = sorted(alphas, reverse=True)
    rows = []
    for alpha in ladder:
        rows.append(_estimate_ratios(_on_grid(omega, omega.grid.with_alpha(alpha)), alpha))
        logger.debug(f"elliptic ratios at alpha={alpha}: {rows[-1]}")

    checks = []
    diagnostics: dict[str, float | None] = {}
    for name in names:
        series = [row[name] for row in rows]
        anchor = ANCHOR_HARDY if name == "hardy" else ANCHOR_REST
        peak = max(series)
        checks.append(Check.le(f"{name}_cap", peak, cap, anchor, text=f"max {name} <= cap"))
        checks.append(
            Check.le(
                f"{name}_uniform",
                peak,
                RATIO_GROWTH * series[0] + RATIO_FLOOR,
                anchor,
                text=f"max {name} <= 1.5 x {name} at the largest alpha",
            )
        )
        diagnostics[f"{name}_max"] = peak
        diagnostics.update({f"{name}@{a:g}": v for a, v in zip(ladder, series, strict=True)})

    deficiency = max(row["mode2_deficiency"] for row in rows)
    checks.append(Check.le("mode2_deficiency", deficiency, 1e-6, ANCHOR_MODES))
    poincare = [row["poincare"] for row in rows if "poincare" in row]
    if poincare:
        checks.append(
            Check.ge(
                "poincare", min(poincare), 9.0 * 0.95, ANCHOR_MODES, text="|d_b E|^2 >= 9|E|^2"
            )
        )
    diagnostics["ell2_residual_max"] = max(row["ell2_residual"] for row in rows)
    diagnostics["far_field_change"] = far_field_change(omega, ladder[-1])

    report = report.extend(checks, **diagnostics)
    for check in report.failed_checks:
        logger.warning(
            f"elliptic check {check.name} failed: lhs={check.lhs:.6g}, rhs={check.rhs:.6g}"
        )
    return report
