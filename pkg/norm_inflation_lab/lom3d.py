"""Leading order model of the axisymmetric 3d system with swirl.

As in 2d, a single radial unknown J(t, R), the time integral of L12(g), determines every
field in closed form. The angular integral of the explicit g against the L12 weight is a
function of J/alpha alone; it is tabulated once per case as the kernel K and the closed
equation for J becomes

    dJ/dt = (3/(8 pi)) int_R^inf (g0(s)/s) K(J(t, s)/alpha) ds.

Case (i) has g0 >= 0 and J >= 0; case (ii) has g0 <= 0 and J <= 0, and K is tabulated in
|J|/alpha for it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline
from scipy.special import logsumexp

from .constants import EXP_GUARD, ConfigError, IntegrationError
from .fields import AnyField, Parity, RadialProfile, ScalarField, combine
from .grid import FloatArray, Grid
from .initial_data import Case3d, SizeConstants, SupportMeta
from .logger import logger
from .lom2d import characteristic_angle, growth_bracket, headline_floor, rk4_radial, t_star
from .norms import calHk_norm, linf_norm
from .operators import op_L12, tail_integral_on, tail_log_integral
from .report import Check, VerificationReport, worst


L12_PREFACTOR = 3.0 / (8.0 * np.pi)
KERNEL_X_MAX = 100.0
KERNEL_LOG_U = (-60.0, 40.0, 0.02)
DEFAULT_MAX_SUBSTEPS = 200_000

ANCHOR_BRACKET_3D = 'eq. (bound L12), "for some constant"'
ANCHOR_SLOPE_3D = 'eq. (tildeg), "Now, the flow map is"'
ANCHOR_LOOP_3D = 'eq. (g explicit), "We then deduce that"'
ANCHOR_ETA_3D = 'prop. expl3d (i), "such that either"'
ANCHOR_XI_3D = 'eq. (xiblow-up), "Case (ii):"'
ANCHOR_OMEGA_3D = 'prop. expl3d (ii), "of the following are satisfied"'
ANCHOR_G_3D = 'prop. expl3d case (i), "does not blow up"'
ANCHOR_SUPPORT = 'lem. local-supp, "it holds that"'
ANCHOR_DISPLACEMENT = 'eq. (flow), "the unique associate flow"'

# sup over beta0 of the angular profile: sin(2b)cos(b) and sin(2b)sin(b) share it
PROFILE_MAX = 4.0 / (3.0 * np.sqrt(3.0))


@dataclass(frozen=True, eq=False)
class Kernel3d:
    """Tabulated K(y), y = |J|/alpha >= 0, with its exponential envelope.

    ``c_lo`` and ``c_hi`` bound K(y) e^{rate y}/K(0) over the table.
    """

    case: Case3d
    x_nodes: FloatArray
    K_values: FloatArray
    rate: float
    c_lo: float
    c_hi: float
    _spline: CubicSpline = field(repr=False)

    @property
    def K0(self) -> float:
        return float(self.K_values[0])

    @property
    def X_max(self) -> float:
        return float(self.x_nodes[-1])

    def __call__(self, y: FloatArray) -> FloatArray:
        """K at |y|; log-linear with slope -rate beyond the table."""
        y = np.abs(np.asarray(y, dtype=np.float64))
        inside = np.minimum(y, self.X_max)
        log_k = self._spline(inside) - self.rate * (y - inside)
        return np.exp(log_k)


def _profile_power(case: Case3d) -> int:
    if case is Case3d.I:
        return 1
    if case is Case3d.II:
        return 2
    raise ConfigError(["kernel needs case3d in {i, ii}"])


def kernel_log_values(y: FloatArray, case: Case3d) -> FloatArray:
    """log K(y) by trapezoid quadrature in v = log u, evaluated with log-sum-exp.

    K(y) = 16 e^{-s y/2} a^m int u^{m+1} (1 + a^2 u^2)^{-3/2} (1 + u^2)^{-5/2} du, with
    a = e^{-3 s y}, s = +1 and m = 1 in case (i), s = -1 and m = 2 in case (ii).
    """
    m = _profile_power(case)
    sign = 1.0 if case is Case3d.I else -1.0
    lo, hi, dv = KERNEL_LOG_U
    v = np.arange(lo, hi + 0.5 * dv, dv)
    log_v_part = (m + 2) * v - 2.5 * np.logaddexp(0.0, 2.0 * v)
    out = np.empty_like(y)
    for start in range(0, y.size, 256):
        chunk = y[start : start + 256, None]
        log_a = -3.0 * sign * chunk
        integrand = (
            np.log(16.0)
            - 0.5 * sign * chunk
            + m * log_a
            + log_v_part[None, :]
            - 1.5 * np.logaddexp(0.0, 2.0 * log_a + 2.0 * v[None, :])
        )
        out[start : start + chunk.shape[0]] = logsumexp(integrand, axis=1) + np.log(dv)
    return out


@lru_cache(maxsize=8)
def build_kernel(resolution: int = 4096, case: Case3d = Case3d.I) -> Kernel3d:
    """Tabulate K on [0, X_max] with ``resolution`` nodes and a cubic spline of log K.

    Raises
    ------
        ConfigError: If resolution < 256 or the case is not (i) or (ii).

    """
    if resolution < 256:
        raise ConfigError([f"kernel resolution {resolution} below 256"])
    case = Case3d(case)
    y = np.linspace(0.0, KERNEL_X_MAX, resolution)
    log_k = kernel_log_values(y, case)
    rate = 3.5 if case is Case3d.I else 2.5
    envelope = np.exp(log_k - log_k[0] + rate * y)
    x_nodes = y.copy()
    K_values = np.exp(log_k)
    x_nodes.setflags(write=False)
    K_values.setflags(write=False)
    kernel = Kernel3d(
        case=case,
        x_nodes=x_nodes,
        K_values=K_values,
        rate=rate,
        c_lo=float(np.min(envelope)),
        c_hi=float(np.max(envelope)),
        _spline=CubicSpline(y, log_k),
    )
    logger.debug(
        f"kernel case {case.value}: K(0)={kernel.K0:.12g}, envelope [{kernel.c_lo:.6g}, "
        f"{kernel.c_hi:.6g}] at rate {rate}"
    )
    return kernel


@dataclass(frozen=True)
class PassiveData3d:
    """Radial and sin(2 beta) amplitudes of eta0 and xi0."""

    eta_radial: RadialProfile
    eta_angular: RadialProfile
    xi_radial: RadialProfile
    xi_angular: RadialProfile


def passive_data(case: Case3d, eta_bar: RadialProfile, alpha: float) -> PassiveData3d:
    """Case (i): eta0 = eta_bar, xi0 = (alpha/2) R eta_bar' sin(2 beta); case (ii) swaps them."""
    amplitude = eta_bar.r_dr() * (0.5 * alpha)
    zero = RadialProfile.zeros(eta_bar.grid)
    data = PassiveData3d(eta_bar, zero, zero, amplitude)
    if Case3d(case) is Case3d.I:
        return data
    if Case3d(case) is Case3d.II:
        return mirror_data(RadialProfile.zeros(eta_bar.grid), data)[1]
    raise ConfigError(["passive data needs case3d in {i, ii}"])


def mirror_data(
    g0: RadialProfile, data: PassiveData3d
) -> tuple[RadialProfile, PassiveData3d]:
    """Flip the sign of g0 and exchange the roles of eta0 and xi0. An involution."""
    swapped = PassiveData3d(data.xi_radial, data.xi_angular, data.eta_radial, data.eta_angular)
    return -g0, swapped


@dataclass(frozen=True)
class LomState3d:
    """J at one time with its data and the support radius (in the R variable)."""

    t: float
    J: RadialProfile
    g0: RadialProfile
    passive: PassiveData3d
    alpha: float
    case: Case3d
    S_alpha: float = float("nan")

    @property
    def grid(self) -> Grid:
        return self.J.grid


@dataclass(frozen=True)
class LomNorms3d:
    t: float
    J_abs_max: float
    eta_linf: float
    xi_linf: float
    g_linf: float
    omega_app_HN: float


@dataclass(frozen=True)
class LomTrajectory3d:
    """Time-ordered states of one 3d LOM run."""

    states: tuple[LomState3d, ...]
    kernel: Kernel3d
    norms: tuple[LomNorms3d, ...] = ()

    def __post_init__(self) -> None:
        times = self.times
        if times.size == 0 or times[0] != 0.0 or np.any(np.diff(times) <= 0.0):
            raise IntegrationError("trajectory times must start at 0 and increase strictly")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def times(self) -> FloatArray:
        return np.array([s.t for s in self.states])

    @property
    def J_matrix(self) -> FloatArray:
        return np.stack([s.J.values for s in self.states])

    @property
    def alpha(self) -> float:
        return self.states[0].alpha

    @property
    def case(self) -> Case3d:
        return self.states[0].case

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    @property
    def g0(self) -> RadialProfile:
        return self.states[0].g0

    @property
    def S_series(self) -> FloatArray:
        return np.array([s.S_alpha for s in self.states])

    def scaled(self, factor: float) -> LomTrajectory3d:
        """Same trajectory with J multiplied by ``factor`` (negative controls)."""
        states = tuple(
            LomState3d(s.t, s.J * factor, s.g0, s.passive, s.alpha, s.case, s.S_alpha)
            for s in self.states
        )
        return LomTrajectory3d(states, self.kernel)

    def with_support(self, S: FloatArray) -> LomTrajectory3d:
        states = tuple(
            LomState3d(s.t, s.J, s.g0, s.passive, s.alpha, s.case, float(v))
            for s, v in zip(self.states, S, strict=True)
        )
        return LomTrajectory3d(states, self.kernel, self.norms)

    def series_rows(self) -> list[dict[str, float]]:
        """Rows of the 3d CSV series."""
        if len(self.norms) != len(self.states):
            raise IntegrationError("norms not recorded; call record_norms_3d first")
        G = effective_weight(self.g0, self.kernel)
        rows = []
        for state, norms in zip(self.states, self.norms, strict=True):
            lower, upper = kernel_bracket(G, state.t, self.alpha, self.kernel)
            active = G > 0.0
            Y = np.abs(state.J.values)
            if np.any(active):
                scale = np.maximum(upper[active], 1e-300)
                lo_margin = float(np.min((Y[active] - lower[active]) / scale))
                up_margin = float(np.min((upper[active] - Y[active]) / scale))
            else:
                lo_margin = up_margin = 0.0
            rows.append(
                {
                    "t": state.t,
                    "I_max": norms.J_abs_max,
                    "eta_linf": norms.eta_linf,
                    "xi_linf": norms.xi_linf,
                    "g_linf": norms.g_linf,
                    "omega_app_HN": norms.omega_app_HN,
                    "bracket_lower_margin": lo_margin,
                    "bracket_upper_margin": up_margin,
                    "S_alpha": state.S_alpha,
                }
            )
        return rows


def _case_sign(case: Case3d) -> float:
    return 1.0 if Case3d(case) is Case3d.I else -1.0


def effective_weight(g0: RadialProfile, kernel: Kernel3d) -> FloatArray:
    """(3/(8 pi)) K(0) int_R^inf |g0|/s, the initial rate of |J|."""
    magnitude = RadialProfile(g0.grid, np.abs(g0.values))
    return L12_PREFACTOR * kernel.K0 * tail_log_integral(magnitude).values


def kernel_bracket(
    G: FloatArray, t: float, alpha: float, kernel: Kernel3d
) -> tuple[FloatArray, FloatArray]:
    """growth_bracket with the kernel's rate and envelope constants."""
    return growth_bracket(G, t, alpha, kernel.rate, kernel.c_lo, kernel.c_hi)


def _check_sign(g0: RadialProfile, case: Case3d) -> None:
    sign = _case_sign(case)
    if np.any(sign * g0.values < 0.0):
        raise ConfigError([f"case {Case3d(case).value} needs g0 of sign {sign:+.0f}"])


def evolve_J(
    g0: RadialProfile,
    alpha: float,
    times: FloatArray,
    case: Case3d,
    eta_bar: RadialProfile | None = None,
    kernel: Kernel3d | None = None,
    max_substeps: int = DEFAULT_MAX_SUBSTEPS,
) -> LomTrajectory3d:
    """Integrate the closed equation for J on the requested times.

    Args:
    ----
        g0: Vorticity profile; nonnegative in case (i), nonpositive in case (ii).
        alpha: Scaling exponent.
        times: Increasing times starting at 0.
        case: Which of the two sign cases.
        eta_bar: Profile from which the passive data are built.
        kernel: Precomputed kernel for ``case``; built at default resolution if omitted.
        max_substeps: Total RK4 substep budget.

    Returns:
    -------
        The trajectory, without support radius.

    """
    case = Case3d(case)
    _check_sign(g0, case)
    kern = kernel if kernel is not None else build_kernel(case=case)
    if kern.case is not case:
        raise ConfigError([f"kernel built for case {kern.case.value}, run is case {case.value}"])
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0.0):
        raise IntegrationError("times must start at 0 and increase strictly")
    grid = g0.grid
    G = effective_weight(g0, kern)
    g_max = float(np.max(G))
    dt_max = alpha / (10.0 * g_max) if g_max > 0.0 else np.inf
    weights = np.abs(g0.values)[:, None]

    def rhs(Y: FloatArray) -> FloatArray:
        return L12_PREFACTOR * tail_integral_on(grid, weights * kern(Y / alpha)[:, None])[:, 0]

    logger.info(f"LOM 3d case {case.value}: alpha={alpha:g}, {t.size} times up to {t[-1]:.6g}")
    snapshots = rk4_radial(rhs, t, dt_max, grid.nR, max_substeps)
    sign = _case_sign(case)
    base = eta_bar if eta_bar is not None else RadialProfile.zeros(grid)
    passive = passive_data(case, base, alpha)
    states = tuple(
        LomState3d(float(ti), RadialProfile(grid, sign * Y), g0, passive, alpha, case)
        for ti, Y in zip(t, snapshots, strict=True)
    )
    return LomTrajectory3d(states, kern)


def _angular_profile(beta0: FloatArray, case: Case3d) -> tuple[FloatArray, Parity]:
    if case is Case3d.I:
        return np.sin(2.0 * beta0) * np.cos(beta0), Parity.SIN_ODD
    return np.sin(2.0 * beta0) * np.sin(beta0), Parity.COS_ODD


def _guarded_exp(exponent: FloatArray, support: FloatArray, what: str) -> FloatArray:
    if np.any(support) and float(np.max(exponent[support])) > EXP_GUARD:
        raise IntegrationError(f"{what} exponent exceeds {EXP_GUARD}")
    return np.exp(np.minimum(exponent, EXP_GUARD))


def _passive_field(
    radial: RadialProfile, angular: RadialProfile, factor: FloatArray, beta0: FloatArray
) -> AnyField:
    grid = radial.grid
    sin2 = np.sin(2.0 * beta0)
    sin2[:, -1] = 0.0
    return combine(
        grid,
        [
            RadialProfile(grid, radial.values * factor).as_field(),
            ScalarField(grid, (angular.values * factor)[:, None] * sin2, Parity.SIN_EVEN),
        ],
    )


def eval_g_3d(state: LomState3d) -> ScalarField:
    """g = g0 B(beta0) e^{-J/(2 alpha)}, tan(beta0) = tan(beta) e^{-3J/alpha}."""
    x = state.J.values / state.alpha
    beta0 = characteristic_angle(state.grid, 3.0 * x)
    profile, parity = _angular_profile(beta0, state.case)
    factor = _guarded_exp(-0.5 * x, state.g0.values != 0.0, "g")
    values = state.g0.values[:, None] * factor[:, None] * profile
    values[:, -1] = 0.0
    return ScalarField(state.grid, values, parity)


def eval_lom3d_fields(state: LomState3d) -> tuple[ScalarField, AnyField, AnyField]:
    """(g, eta_app, xi_app): eta carried with e^{3J/alpha}, xi with e^{-J/alpha}."""
    x = state.J.values / state.alpha
    beta0 = characteristic_angle(state.grid, 3.0 * x)
    p = state.passive
    eta_support = (p.eta_radial.values != 0.0) | (p.eta_angular.values != 0.0)
    xi_support = (p.xi_radial.values != 0.0) | (p.xi_angular.values != 0.0)
    eta = _passive_field(
        p.eta_radial, p.eta_angular, _guarded_exp(3.0 * x, eta_support, "eta"), beta0
    )
    xi = _passive_field(p.xi_radial, p.xi_angular, _guarded_exp(-x, xi_support, "xi"), beta0)
    return eval_g_3d(state), eta, xi


def growth_rates(traj: LomTrajectory3d, index: int) -> FloatArray:
    """|dJ/dt| = |L12(g)| at a stored time, from the closed equation."""
    state = traj.states[index]
    grid = traj.grid
    weights = np.abs(state.g0.values)[:, None]
    Y = np.abs(state.J.values)
    kern = traj.kernel
    return np.asarray(
        L12_PREFACTOR * tail_integral_on(grid, weights * kern(Y / traj.alpha)[:, None])[:, 0]
    )


def evolve_support(traj: LomTrajectory3d, S0_alpha: float) -> FloatArray:
    """Outer support radius S(t)^alpha along the worst-case characteristic.

    d log R/dt = |L12(t, R)|/2, integrated with the trapezoid rule in time and the rate
    interpolated at the current radius.
    """
    R = np.asarray(traj.grid.R_nodes)
    times = traj.times
    S = np.empty(times.size)
    S[0] = S0_alpha
    rate_prev = growth_rates(traj, 0)
    for n in range(1, times.size):
        rate_next = growth_rates(traj, n)
        dt = times[n] - times[n - 1]
        r0 = np.interp(S[n - 1], R, rate_prev)
        predictor = S[n - 1] * np.exp(0.5 * dt * r0)
        r1 = np.interp(predictor, R, rate_next)
        S[n] = S[n - 1] * np.exp(0.25 * dt * (r0 + r1))
        rate_prev = rate_next
    return S


def record_norms_3d(traj: LomTrajectory3d, k: int = 4) -> LomTrajectory3d:
    """Attach per-time norms; Omega_app is g in the 3d model."""
    records = []
    for state in traj.states:
        g, eta, xi = eval_lom3d_fields(state)
        records.append(
            LomNorms3d(
                t=state.t,
                J_abs_max=float(np.max(np.abs(state.J.values))),
                eta_linf=linf_norm(eta).value,
                xi_linf=linf_norm(xi).value,
                g_linf=linf_norm(g).value,
                omega_app_HN=calHk_norm(g, k).value,
            )
        )
    return LomTrajectory3d(traj.states, traj.kernel, tuple(records))


def closed_loop_residual_3d(traj: LomTrajectory3d, t_end: float | None = None) -> float:
    """Relative sup distance between J and int_0^t L12(g(J)) up to ``t_end``."""
    times = traj.times
    stop = times.size if t_end is None else int(np.searchsorted(times, t_end, side="right"))
    stop = max(stop, 2)
    rates = np.stack([op_L12(eval_g_3d(s)).values for s in traj.states[:stop]])
    rebuilt = cumulative_trapezoid(rates, x=times[:stop], axis=0, initial=0.0)
    stored = traj.J_matrix[:stop]
    scale = float(np.max(np.abs(stored)))
    if scale == 0.0:
        return float(np.max(np.abs(rebuilt)))
    return float(np.max(np.abs(rebuilt - stored)) / scale)


def _floor_checks(
    state: LomState3d, lower: FloatArray, slack: float
) -> list[Check]:
    """Pointwise floors implied by the lower bracket, per case."""
    g, eta, xi = eval_lom3d_fields(state)
    alpha = state.alpha
    p = state.passive
    checks = []
    if state.case is Case3d.I and np.any(p.eta_radial.values != 0.0):
        growth = np.exp(np.minimum(3.0 * lower / alpha, EXP_GUARD))
        floor = float(np.max(np.abs(p.eta_radial.values) * growth))
        checks.append(Check.ge("eta_floor", linf_norm(eta).value, floor, ANCHOR_ETA_3D, slack))
    if state.case is Case3d.II:
        if np.any(p.xi_radial.values != 0.0):
            growth = np.exp(np.minimum(lower / alpha, EXP_GUARD))
            floor = float(np.max(np.abs(p.xi_radial.values) * growth))
            checks.append(Check.ge("xi_floor", linf_norm(xi).value, floor, ANCHOR_XI_3D, slack))
        if np.any(state.g0.values != 0.0):
            growth = np.exp(np.minimum(0.5 * lower / alpha, EXP_GUARD))
            floor = float(PROFILE_MAX * np.max(np.abs(state.g0.values) * growth))
            sup_g = linf_norm(g).value
            checks.append(Check.ge("omega_floor", sup_g, floor, ANCHOR_OMEGA_3D, slack))
    return checks


def check_growth_bounds_3d(
    traj: LomTrajectory3d,
    consts: SizeConstants,
    meta: SupportMeta | None = None,
    slack: float = 1e-3,
    loop_tol: float = 1e-3,
    slope_tol: float = 5e-2,
) -> VerificationReport:
    """Verify the 3d growth dichotomy, boundedness and support confinement up to t_star."""
    alpha = traj.alpha
    kern = traj.kernel
    G = effective_weight(traj.g0, kern)
    ts = t_star(alpha, consts.C_k1)
    g0_sup = float(np.max(np.abs(traj.g0.values)))
    # g0 support, where J and both bracket ends are strictly positive for t > 0
    active = (G > 0.0) & (traj.g0.values != 0.0)

    lower_checks, upper_checks, floor_checks, g_checks = [], [], [], []
    for state in traj.states:
        if state.case is Case3d.I:
            g_sup = linf_norm(eval_g_3d(state)).value
            g_checks.append(Check.le("g_ceiling", g_sup, PROFILE_MAX * g0_sup, ANCHOR_G_3D))
        if state.t <= 0.0:
            continue
        Y = np.abs(state.J.values)
        lower, upper = kernel_bracket(G, state.t, alpha, kern)
        if np.any(active):
            values, lo, up = Y[active], lower[active], upper[active]
            scale = np.maximum(up, 1e-300)
            j_lo = int(np.argmin((values - lo) / scale))
            j_up = int(np.argmin((up - values) / scale))
            lower_checks.append(
                Check.ge("J_lower", float(values[j_lo]), float(lo[j_lo]), ANCHOR_BRACKET_3D, slack)
            )
            upper_checks.append(
                Check.le("J_upper", float(values[j_up]), float(up[j_up]), ANCHOR_BRACKET_3D, slack)
            )
        floor_checks.extend(_floor_checks(state, lower, slack))

    slope_error = 0.0
    if len(traj) > 1 and np.any(G > 0.0):
        slope = np.abs(traj.states[1].J.values) / traj.states[1].t
        slope_error = float(np.max(np.abs(slope - G)) / np.max(G))

    checks = [
        worst(lower_checks, "J_bracket_lower", ANCHOR_BRACKET_3D, "J_lower(t, R) <= |J|"),
        worst(upper_checks, "J_bracket_upper", ANCHOR_BRACKET_3D, "|J| <= J_upper(t, R)"),
        Check.le(
            "initial_slope", slope_error, slope_tol, ANCHOR_SLOPE_3D,
            text="sup| |J(t1)|/t1 - G | / sup G <= tol",
        ),
        Check.le(
            "closed_loop_residual", closed_loop_residual_3d(traj, ts), loop_tol, ANCHOR_LOOP_3D,
            text="sup|int L12(g(J)) - J| / sup|J| <= tol on [0, t_star]",
        ),
        worst(
            floor_checks,
            "growth_floor",
            ANCHOR_ETA_3D if traj.case is Case3d.I else ANCHOR_XI_3D,
        ),
    ]
    if g_checks:
        checks.append(worst(g_checks, "g_ceiling", ANCHOR_G_3D, "|g(t)|_inf <= max B |g0|_inf"))

    diagnostics: dict[str, float | int | str | bool | None] = {
        "t_star": ts,
        "alpha": alpha,
        "case": traj.case.value,
        "kernel_K0": kern.K0,
        "kernel_c_lo": kern.c_lo,
        "kernel_c_hi": kern.c_hi,
        "kernel_rate": kern.rate,
    }
    S = traj.S_series
    if meta is not None and np.all(np.isfinite(S)):
        checks.extend(_support_checks(traj, meta, G, ts))
        diagnostics |= {"S_alpha_max": float(np.max(S)), "epsilon": meta.epsilon}

    ratio = _growth_ratio(traj, ts)
    diagnostics |= {
        "growth_ratio_at_t_star": ratio,
        "headline_floor": headline_floor(alpha, consts.C_k1),
        "headline_reached": ratio >= headline_floor(alpha, consts.C_k1),
    }
    report = VerificationReport("lom3d").extend(checks, **diagnostics)
    for failed in report.failed_checks:
        logger.warning(f"check {failed.name} failed: lhs={failed.lhs:.6g}, rhs={failed.rhs:.6g}")
    return report


def _growth_ratio(traj: LomTrajectory3d, ts: float) -> float:
    """Growth of the inflating quantity at t_star: eta in case (i), xi in case (ii)."""
    index = min(int(np.searchsorted(traj.times, ts)), len(traj) - 1)
    _, eta0, xi0 = eval_lom3d_fields(traj.states[0])
    _, eta, xi = eval_lom3d_fields(traj.states[index])
    before, after = (eta0, eta) if traj.case is Case3d.I else (xi0, xi)
    base = linf_norm(before).value
    return 1.0 if base == 0.0 else linf_norm(after).value / base


def _support_checks(
    traj: LomTrajectory3d, meta: SupportMeta, G: FloatArray, ts: float
) -> list[Check]:
    times = traj.times
    S = traj.S_series
    within = times <= ts * (1.0 + 1e-12)
    S_in = S[within]
    eps = meta.epsilon
    S0 = S[0]
    G_sup = np.array([float(np.max(G))])
    displacement = np.abs(np.log(S_in / S0))
    bound = np.array(
        [
            0.5 * float(kernel_bracket(G_sup, t, traj.alpha, traj.kernel)[1][0])
            + np.sqrt(traj.alpha)
            for t in times[within]
        ]
    )
    j = int(np.argmax(displacement - bound))
    return [
        Check.ge(
            "support_lower", float(np.min(S_in)), 0.125, ANCHOR_SUPPORT, text="S_alpha >= 1/8"
        ),
        Check.le(
            "support_upper", float(np.max(S_in)), 1.0 / 7.0 + 2.0 * eps, ANCHOR_SUPPORT,
            text="S_alpha <= 1/7 + 2 eps",
        ),
        Check.flag(
            "support_window",
            bool(np.all((S_in >= 0.1) & (S_in <= 1.0 / 6.0))),
            ANCHOR_SUPPORT,
            "1/10 <= S_alpha <= 1/6",
        ),
        Check.le(
            "support_displacement", float(displacement[j]), float(bound[j]), ANCHOR_DISPLACEMENT,
            text="|log(S(t)/S(0))| <= J_upper/2 + sqrt(alpha)",
        ),
    ]
