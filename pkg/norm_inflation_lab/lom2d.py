"""Leading order model of the 2d stratified system.

The model reduces to one radial unknown, I(t, R), the time integral of L(g). Everything else
follows from I in closed form:

    g      = g0 sin(2 beta0),  tan(beta0) = tan(beta) e^{-I/alpha}
    eta    = eta0 e^{I/(2 alpha)}
    xi     = 1 - (1 - xi0(R, beta0)) e^{-I/(2 alpha)}
    Omega  = g + eta0 int_0^t e^{I/(2 alpha)}

and I itself solves dI/dt = 4 int_R^inf (g0(s)/s) h(I(t, s)/alpha) ds with
h(x) = e^{-|x|}/(1 + e^{-|x|})^2.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .constants import C1, C2, EXP_GUARD, MIN_SNAPSHOTS, ConfigError, IntegrationError
from .fields import AnyField, Parity, RadialProfile, ScalarField, combine
from .grid import FloatArray, Grid, Spacing, build_grid
from .initial_data import DataParams, SizeConstants, loglog, make_g0_2d, size_constants
from .logger import logger
from .norms import calHk_norm, linf_norm
from .operators import op_L, tail_integral_on, tail_log_integral
from .report import Check, VerificationReport, worst


ANCHOR_BRACKET = 'eq. (g-upperandlower), "the following estimates hold"'
ANCHOR_SLOPE = 'lem. prop:LOM, eq. (Lg-formula), "List of known facts"'
ANCHOR_LOOP = 'eq. (def-g), "If we set"'
ANCHOR_FLOOR = 'prop. expl, "In particular, this yields that"'
ANCHOR_HEADLINE = 'thm. main, "such that the corresponding unique solution"'
ANCHOR_G = 'eq. (est:g-inf), "One has from the explicit for"'
ANCHOR_XI = 'rmk. explicitcsi, "does not blow up in"'
ANCHOR_OMEGA = 'rmk. Omega, "does not blow up and, in the time interval"'

DEFAULT_MAX_SUBSTEPS = 200_000


class XiMode(str, Enum):
    """How xi_app is evaluated."""

    EXPLICIT = "explicit-zero-data"
    TRANSPORTED = "transported"


@dataclass(frozen=True)
class LomState2d:
    """I at one time, with the data it was computed from."""

    t: float
    I: RadialProfile  # noqa: E741
    g0: RadialProfile
    eta0: RadialProfile
    alpha: float

    @property
    def grid(self) -> Grid:
        return self.I.grid


@dataclass(frozen=True)
class LomNorms:
    """Norms of the explicit fields at one stored time."""

    t: float
    eta_linf: float
    xi_linf: float
    g_linf: float
    omega_app_HN: float


@dataclass(frozen=True)
class LomTrajectory:
    """Time-ordered states of one LOM run, optionally with norm records."""

    states: tuple[LomState2d, ...]
    norms: tuple[LomNorms, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.states:
            raise IntegrationError("empty trajectory")
        times = self.times
        if times[0] != 0.0 or np.any(np.diff(times) <= 0.0):
            raise IntegrationError("trajectory times must start at 0 and increase strictly")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def times(self) -> FloatArray:
        return np.array([s.t for s in self.states])

    @property
    def I_matrix(self) -> FloatArray:
        """I snapshots stacked as (n_times, nR)."""
        return np.stack([s.I.values for s in self.states])

    @property
    def alpha(self) -> float:
        return self.states[0].alpha

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    @property
    def g0(self) -> RadialProfile:
        return self.states[0].g0

    @property
    def eta0(self) -> RadialProfile:
        return self.states[0].eta0

    def scaled(self, factor: float) -> LomTrajectory:
        """Same trajectory with I multiplied by ``factor`` (negative controls)."""
        states = tuple(
            LomState2d(s.t, s.I * factor, s.g0, s.eta0, s.alpha) for s in self.states
        )
        return LomTrajectory(states)

    def series_rows(self) -> list[dict[str, float]]:
        """Rows of the LOM CSV series, one per stored time."""
        if len(self.norms) != len(self.states):
            raise IntegrationError("norms not recorded; call record_norms first")
        G0 = tail_log_integral(self.g0).values
        rows = []
        for state, norms in zip(self.states, self.norms, strict=True):
            lower, upper = growth_bracket(G0, state.t, self.alpha)
            lo_margin, up_margin = _bracket_margins(state.I.values, lower, upper, G0)
            rows.append(
                {
                    "t": state.t,
                    "I_max": float(np.max(state.I.values)),
                    "eta_linf": norms.eta_linf,
                    "xi_linf": norms.xi_linf,
                    "g_linf": norms.g_linf,
                    "omega_app_HN": norms.omega_app_HN,
                    "bracket_lower_margin": lo_margin,
                    "bracket_upper_margin": up_margin,
                }
            )
        return rows


def h_kernel(x: FloatArray) -> FloatArray:
    """e^{-|x|}/(1 + e^{-|x|})^2, even and overflow free."""
    e = np.exp(-np.abs(x))
    return e / (1.0 + e) ** 2


def growth_bracket(
    G: FloatArray,
    t: float,
    alpha: float,
    rate: float = 1.0,
    c_lo: float = C1,
    c_hi: float = C2,
) -> tuple[FloatArray, FloatArray]:
    """Logarithmic bracket for dI/dt = int_R^inf w K(I/alpha), K between c_lo, c_hi e^{-rate x}.

    Args:
    ----
        G: Effective tail weight (prefactor times K(0) times int_R^inf w).
        t: Time.
        alpha: Scaling exponent.
        rate: Exponential decay rate of the kernel.
        c_lo: Lower kernel constant, relative to K(0).
        c_hi: Upper kernel constant, relative to K(0).

    Returns:
    -------
        (lower, upper) arrays shaped like ``G``.

    """
    G = np.asarray(G, dtype=np.float64)
    lower = (2.0 * alpha * c_lo / (rate * c_hi)) * np.log1p(rate * c_hi * t * G / (2.0 * alpha))
    upper = (2.0 * alpha * c_hi / (rate * c_lo)) * np.log1p(rate * c_lo * t * G / (2.0 * alpha))
    return lower, upper


def _bracket_margins(
    I: FloatArray, lower: FloatArray, upper: FloatArray, G: FloatArray  # noqa: E741
) -> tuple[float, float]:
    active = G > 0.0
    if not np.any(active):
        return 0.0, 0.0
    scale = np.maximum(upper[active], 1e-300)
    return (
        float(np.min((I[active] - lower[active]) / scale)),
        float(np.min((upper[active] - I[active]) / scale)),
    )


def _validate_times(times: FloatArray) -> FloatArray:
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0.0):
        raise IntegrationError("times must start at 0 and increase strictly")
    return t


def rk4_radial(
    rhs: Callable[[FloatArray], FloatArray],
    times: FloatArray,
    dt_max: float,
    nR: int,
    max_substeps: int,
) -> list[FloatArray]:
    """Classical RK4 from zero on the requested times, substepping at most ``dt_max``."""
    y = np.zeros(nR)
    out = [y.copy()]
    used = 0
    for t0, t1 in zip(times[:-1], times[1:], strict=True):
        span = t1 - t0
        n_sub = max(1, int(np.ceil(span / dt_max))) if np.isfinite(dt_max) else 1
        used += n_sub
        if used > max_substeps:
            raise IntegrationError(
                f"substep limit {max_substeps} exceeded at t={t0:.6g} "
                f"(dt_max={dt_max:.3e}, interval {span:.3e})"
            )
        dt = span / n_sub
        for _ in range(n_sub):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * dt * k1)
            k3 = rhs(y + 0.5 * dt * k2)
            k4 = rhs(y + dt * k3)
            y = y + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at t={t1:.6g}")
        out.append(y.copy())
    logger.debug(f"RK4 used {used} substeps over {times.size} stored times")
    return out


def evolve_I(
    g0: RadialProfile,
    alpha: float,
    times: FloatArray,
    eta0: RadialProfile | None = None,
    max_substeps: int = DEFAULT_MAX_SUBSTEPS,
) -> LomTrajectory:
    """Integrate the closed equation for I on the requested times.

    Args:
    ----
        g0: Vorticity profile, compactly supported inside R_max/2.
        alpha: Scaling exponent.
        times: Increasing times starting at 0.
        eta0: Density-gradient profile carried along for the explicit fields.
        max_substeps: Total RK4 substep budget.

    Returns:
    -------
        The trajectory.

    Raises:
    ------
        TruncationError: If g0 reaches R_max/2.
        IntegrationError: If the substep budget is exhausted.

    """
    t = _validate_times(times)
    grid = g0.grid
    G0 = tail_log_integral(g0).values
    g_max = float(np.max(np.abs(G0)))
    dt_max = alpha / (10.0 * g_max) if g_max > 0.0 else np.inf
    weights = g0.values[:, None]

    def rhs(I: FloatArray) -> FloatArray:  # noqa: E741
        return 4.0 * tail_integral_on(grid, weights * h_kernel(I / alpha)[:, None])[:, 0]

    logger.info(f"LOM 2d: alpha={alpha:g}, {t.size} times up to t={t[-1]:.6g}")
    snapshots = rk4_radial(rhs, t, dt_max, grid.nR, max_substeps)
    eta = eta0 if eta0 is not None else RadialProfile.zeros(grid)
    states = tuple(
        LomState2d(float(ti), RadialProfile(grid, I), g0, eta, alpha)
        for ti, I in zip(t, snapshots, strict=True)
    )
    return LomTrajectory(states)


def characteristic_angle(grid: Grid, exponent: FloatArray) -> FloatArray:
    """beta0 with tan(beta0) = tan(beta) e^{-exponent(R)}, on the (nR, n_beta) mesh."""
    beta = np.asarray(grid.beta_nodes)[None, :]
    shrink = np.exp(-np.clip(exponent, -EXP_GUARD, EXP_GUARD))[:, None]
    beta0 = np.arctan2(np.sin(beta) * shrink, np.cos(beta))
    beta0[:, -1] = np.pi / 2
    return np.asarray(beta0)


def eval_g(state: LomState2d) -> ScalarField:
    """g = g0 2 tan(beta) e^{-I/alpha}/(1 + tan^2(beta) e^{-2I/alpha})."""
    grid = state.grid
    beta0 = characteristic_angle(grid, state.I.values / state.alpha)
    values = state.g0.values[:, None] * np.sin(2.0 * beta0)
    values[:, 0] = 0.0
    values[:, -1] = 0.0
    return ScalarField(grid, values, Parity.SIN_EVEN)


def _growth_factor(I: FloatArray, alpha: float, support: FloatArray) -> FloatArray:  # noqa: E741
    exponent = I / (2.0 * alpha)
    if np.any(support) and float(np.max(exponent[support])) > EXP_GUARD:
        raise IntegrationError(
            f"I/(2 alpha) = {float(np.max(exponent[support])):.6g} exceeds {EXP_GUARD}; "
            "inflation left the floating range"
        )
    return np.exp(np.minimum(exponent, EXP_GUARD))


def eval_eta_app(state: LomState2d) -> ScalarField:
    """eta_app = eta0 e^{I/(2 alpha)}, radial."""
    eta0 = state.eta0.values
    factor = _growth_factor(state.I.values, state.alpha, eta0 != 0.0)
    return RadialProfile(state.grid, eta0 * factor).as_field()


def eval_xi_app(state: LomState2d, mode: XiMode = XiMode.EXPLICIT) -> AnyField:
    """xi_app for zero data, or transported from xi0 = (alpha/2) R eta0' sin(2 beta).

    The zero-data value 1 - e^{-I/(2 alpha)} is radial and lies in [0, 1).
    """
    grid = state.grid
    exponent = np.clip(state.I.values, 0.0, None) / (2.0 * state.alpha)
    radial = RadialProfile(grid, -np.expm1(-exponent))
    if XiMode(mode) is XiMode.EXPLICIT:
        return radial.as_field()
    beta0 = characteristic_angle(grid, state.I.values / state.alpha)
    amplitude = 0.5 * state.alpha * state.eta0.r_dr().values * np.exp(-exponent)
    values = amplitude[:, None] * np.sin(2.0 * beta0)
    values[:, -1] = 0.0
    transported = ScalarField(grid, values, Parity.SIN_EVEN)
    return combine(grid, [radial.as_field(), transported])


def eta_time_integrals(traj: LomTrajectory) -> FloatArray:
    """int_0^t e^{I/(2 alpha)} at every stored time, shape (n_times, nR)."""
    if len(traj) < MIN_SNAPSHOTS:
        raise IntegrationError(
            f"{len(traj)} snapshots; the time integral needs at least {MIN_SNAPSHOTS}"
        )
    support = traj.eta0.values != 0.0
    factors = np.stack([_growth_factor(s.I.values, traj.alpha, support) for s in traj.states])
    return np.asarray(cumulative_trapezoid(factors, x=traj.times, axis=0, initial=0.0))


def eval_omega_app(
    traj: LomTrajectory, index: int, integrals: FloatArray | None = None
) -> AnyField:
    """Omega_app = g + eta0 int_0^t e^{I/(2 alpha)} at stored time ``index``."""
    table = eta_time_integrals(traj) if integrals is None else integrals
    state = traj.states[index]
    accumulated = RadialProfile(traj.grid, traj.eta0.values * table[index])
    return combine(traj.grid, [eval_g(state), accumulated.as_field()])


def t_star(alpha: float, C_N1: float) -> float:
    """alpha log|log alpha| / (4 C_{N+1})."""
    if not 0.0 < alpha < np.exp(-1.0):
        raise ConfigError([f"alpha={alpha} must lie in (0, 1/e)"])
    if not abs(np.log(alpha)) > np.e:
        raise ConfigError([f"|log alpha| = {abs(np.log(alpha)):.6g} must exceed e"])
    if C_N1 <= 0.0:
        raise ConfigError([f"C_N1={C_N1} must be positive"])
    return float(alpha * np.log(abs(np.log(alpha))) / (4.0 * C_N1))


def record_norms(
    traj: LomTrajectory, k: int = 3, xi_mode: XiMode = XiMode.EXPLICIT
) -> LomTrajectory:
    """Attach per-time L-infinity norms and the H^k norm of Omega_app."""
    integrals = eta_time_integrals(traj)
    records = []
    for index, state in enumerate(traj.states):
        omega = eval_omega_app(traj, index, integrals)
        records.append(
            LomNorms(
                t=state.t,
                eta_linf=linf_norm(eval_eta_app(state)).value,
                xi_linf=linf_norm(eval_xi_app(state, xi_mode)).value,
                g_linf=linf_norm(eval_g(state)).value,
                omega_app_HN=calHk_norm(omega, k).value,
            )
        )
    return LomTrajectory(traj.states, tuple(records))


def closed_loop_residual(traj: LomTrajectory, t_end: float | None = None) -> float:
    """Relative sup distance between I and int_0^t L(g(I)) over stored times up to ``t_end``."""
    times = traj.times
    stop = times.size if t_end is None else int(np.searchsorted(times, t_end, side="right"))
    stop = max(stop, 2)
    rates = np.stack([op_L(eval_g(s)).values for s in traj.states[:stop]])
    rebuilt = cumulative_trapezoid(rates, x=times[:stop], axis=0, initial=0.0)
    stored = traj.I_matrix[:stop]
    scale = float(np.max(np.abs(stored)))
    if scale == 0.0:
        return float(np.max(np.abs(rebuilt)))
    return float(np.max(np.abs(rebuilt - stored)) / scale)


def initial_slope_error(traj: LomTrajectory) -> float:
    """sup |I(t_1)/t_1 - G0| / sup G0 from the first stored step."""
    G0 = tail_log_integral(traj.g0).values
    scale = float(np.max(np.abs(G0)))
    if len(traj) < 2 or scale == 0.0:
        return 0.0
    slope = traj.states[1].I.values / traj.states[1].t
    return float(np.max(np.abs(slope - G0)) / scale)


def inflation_ratio(state: LomState2d) -> float:
    """||eta_app(t)||_inf / ||eta0||_inf."""
    base = float(np.max(np.abs(state.eta0.values)))
    if base == 0.0:
        return 1.0
    factor = _growth_factor(state.I.values, state.alpha, state.eta0.values != 0.0)
    return float(np.max(np.abs(state.eta0.values * factor)) / base)


def headline_floor(alpha: float, C_N1: float) -> float:
    """(1 + |log|log alpha||/C_{N+1})^{1/4}."""
    return float((1.0 + loglog(alpha) / C_N1) ** 0.25)


def _bracket_checks(
    I: FloatArray, G0: FloatArray, t: float, alpha: float, slack: float  # noqa: E741
) -> tuple[Check, Check] | None:
    active = G0 > 0.0
    if not np.any(active):
        return None
    lower, upper = growth_bracket(G0[active], t, alpha)
    values = I[active]
    j_lo = int(np.argmin(values - lower))
    j_up = int(np.argmin(upper - values))
    return (
        Check.ge("I_lower", float(values[j_lo]), float(lower[j_lo]), ANCHOR_BRACKET, slack),
        Check.le("I_upper", float(values[j_up]), float(upper[j_up]), ANCHOR_BRACKET, slack),
    )


def _omega_check(
    eta0: FloatArray, G0: FloatArray, integral: FloatArray, t: float, alpha: float, slack: float
) -> Check:
    G_safe = np.where(G0 > 0.0, G0, 1.0)
    # (1 + x)^5 - 1 through expm1/log1p; tends to t as G0 -> 0
    excess = np.expm1(5.0 * np.log1p(t * G_safe / (2.0 * alpha)))
    per_unit = np.where(G0 > 0.0, (2.0 * alpha / (5.0 * G_safe)) * excess, t)
    bound = np.abs(eta0) * per_unit
    accumulated = np.abs(eta0) * integral
    j = int(np.argmax(accumulated - bound))
    return Check.le("omega_app_bound", float(accumulated[j]), float(bound[j]), ANCHOR_OMEGA, slack)


def _inflation_diagnostics(
    traj: LomTrajectory, ratios: list[float], G0: FloatArray, ts: float, C_N1: float
) -> tuple[dict[str, float | None], Check]:
    alpha = traj.alpha
    times = traj.times
    target = headline_floor(alpha, C_N1)
    reached = np.nonzero(np.asarray(ratios) >= target * (1.0 + 1e-3))[0]
    t_inflate = float(times[reached[0]]) if reached.size else None
    positive = traj.g0.values > 0.0
    C0 = float(np.max(G0[positive])) if np.any(positive) else 0.0
    diagnostics: dict[str, float | None] = {
        "headline_floor": target,
        "eta_ratio_at_t_star": float(np.interp(ts, times, ratios)),
        "eta_ratio_final": float(ratios[-1]),
        "t_inflate": t_inflate,
        "t_inflate_over_t_star": None if t_inflate is None else t_inflate / ts,
        "C0": C0,
        "C0_floor_at_t_star": float((1.0 + 2.0 * C2 * ts * C0 / alpha) ** (1.0 / C2)),
    }
    check = Check.ge(
        "headline_inflation",
        float(max(ratios)),
        target * (1.0 + 1e-3),
        ANCHOR_HEADLINE,
        text="max_t |eta_app|/|eta0| >= (1 + |log|log alpha||/C_{N+1})^{1/4} in the horizon",
    )
    return diagnostics, check


def check_growth_bounds(
    traj: LomTrajectory,
    consts: SizeConstants,
    slack: float = 1e-3,
    xi_mode: XiMode = XiMode.EXPLICIT,
    loop_tol: float = 1e-3,
    slope_tol: float = 5e-2,
) -> VerificationReport:
    """Verify the growth and boundedness inequalities of the 2d model along a trajectory.

    Every inequality is evaluated at every stored time and the worst time is reported. The
    headline inflation factor is required somewhere in the stored horizon; the time it takes,
    relative to t_star, is a diagnostic.
    """
    alpha = traj.alpha
    G0 = tail_log_integral(traj.g0).values
    eta0 = traj.eta0.values
    has_eta = bool(np.any(eta0 != 0.0))
    g0_sup = float(np.max(np.abs(traj.g0.values)))
    ts = t_star(alpha, consts.C_k1)
    integrals = eta_time_integrals(traj)

    families: dict[str, list[Check]] = {
        key: [] for key in ("lower", "upper", "floor", "g", "xi", "omega")
    }
    ratios = []
    for index, state in enumerate(traj.states):
        t = state.t
        I = state.I.values  # noqa: E741
        bracket = _bracket_checks(I, G0, t, alpha, slack)
        if bracket is not None:
            families["lower"].append(bracket[0])
            families["upper"].append(bracket[1])
        ratios.append(inflation_ratio(state))
        if has_eta:
            growth = (1.0 + 2.0 * t * np.clip(G0, 0.0, None) / alpha) ** 0.25
            floor = float(np.max(np.abs(eta0) * growth))
            eta_sup = linf_norm(eval_eta_app(state)).value
            families["floor"].append(Check.ge("eta_floor", eta_sup, floor, ANCHOR_FLOOR, slack))
        g_sup = linf_norm(eval_g(state)).value
        families["g"].append(Check.le("g_ceiling", g_sup, g0_sup, ANCHOR_G))
        xi_sup = linf_norm(eval_xi_app(state, xi_mode)).value
        families["xi"].append(Check.le("xi_ceiling", xi_sup, 3.0, ANCHOR_XI))
        families["omega"].append(_omega_check(eta0, G0, integrals[index], t, alpha, slack))

    checks = [
        worst(
            families["lower"], "I_bracket_lower", ANCHOR_BRACKET,
            "(alpha/2) log(1 + 2tG0/alpha) <= I",
        ),
        worst(
            families["upper"], "I_bracket_upper", ANCHOR_BRACKET,
            "I <= 8 alpha log(1 + tG0/(2 alpha))",
        ),
        Check.le(
            "initial_slope", initial_slope_error(traj), slope_tol, ANCHOR_SLOPE,
            text="sup|I(t1)/t1 - G0| / sup G0 <= tol",
        ),
        Check.le(
            "closed_loop_residual", closed_loop_residual(traj, ts), loop_tol, ANCHOR_LOOP,
            text="sup|int L(g(I)) - I| / sup I <= tol on [0, t_star]",
        ),
        worst(
            families["floor"], "eta_pointwise_floor", ANCHOR_FLOOR,
            "|eta_app|_inf >= sup_R eta0 (1 + 2tG0/alpha)^{1/4}",
        ),
        worst(families["g"], "g_ceiling", ANCHOR_G, "|g(t)|_inf <= |g0|_inf"),
        worst(families["xi"], "xi_ceiling", ANCHOR_XI, "|xi_app(t)|_inf < 3"),
        worst(
            families["omega"], "omega_app_bound", ANCHOR_OMEGA,
            "Omega_app - g <= eta0 (2 alpha/(5 G0)) ((1 + tG0/(2 alpha))^5 - 1)",
        ),
        Check.flag(
            "eta_monotone",
            bool(np.all(np.diff(ratios) >= -1e-12)),
            ANCHOR_FLOOR,
            "|eta_app(t)|_inf nondecreasing in t",
        ),
    ]

    diagnostics: dict[str, float | int | str | bool | None] = {"t_star": ts, "alpha": alpha}
    if has_eta and np.any(G0 > 0.0):
        extra, headline = _inflation_diagnostics(traj, ratios, G0, ts, consts.C_k1)
        diagnostics |= extra
        checks.append(headline)
    else:
        diagnostics |= {"eta_ratio_at_t_star": 1.0, "t_inflate_over_t_star": None}

    report = VerificationReport("lom2d").extend(checks, **diagnostics)
    for failed in report.failed_checks:
        logger.warning(f"check {failed.name} failed: lhs={failed.lhs:.6g}, rhs={failed.rhs:.6g}")
    return report


def refinement_study(
    p: DataParams,
    grid: Grid,
    snapshots: int,
    horizon_factor: float = 1.0,
    levels: int = 3,
    loop_tol: float = 1e-3,
    min_order: float = 1.8,
) -> tuple[list[dict[str, float | int | None]], VerificationReport]:
    """Rerun the model with h and dt halved together and measure how it settles.

    Level l has 2^l nR radial nodes and (snapshots - 1) 2^l + 1 output times, so on a
    uniform-R grid every coarse node is also a fine node. The closed-loop residual has to
    halve from one level to the next and the self-convergence order of I(t_star) on the
    coarse nodes has to reach ``min_order``.

    Args:
    ----
        p: Data parameters.
        grid: Coarsest grid; must be uniform in R.
        snapshots: Output times at the coarsest level.
        horizon_factor: Horizon in units of t_star.
        levels: Number of levels, at least 3.
        loop_tol: Bound on the closed-loop residual at the coarsest level.
        min_order: Required observed order of I(t_star).

    Returns:
    -------
        One row per level and the report.

    Raises:
    ------
        ConfigError: On a log-R grid or fewer than three levels.

    """
    if grid.spacing is not Spacing.UNIFORM_R:
        raise ConfigError(["refinement needs spacing uniform-R so that grids nest"])
    if levels < 3:
        raise ConfigError([f"levels={levels} below 3; an observed order needs three grids"])
    alpha = p.alpha
    ts = t_star(alpha, size_constants(p).C_k1)
    horizon = horizon_factor * ts

    residuals: list[float] = []
    finals: list[FloatArray] = []
    rows: list[dict[str, float | int | None]] = []
    for level in range(levels):
        scale = 2**level
        fine = build_grid(alpha, grid.R_max, grid.nR * scale, grid.n_beta, grid.spacing)
        n_times = (snapshots - 1) * scale + 1
        times = np.linspace(0.0, horizon, n_times)
        if ts < horizon:
            times = np.union1d(times, [ts])
        traj = evolve_I(make_g0_2d(p, fine), alpha, times)
        residuals.append(closed_loop_residual(traj, ts))
        at_ts = int(np.argmin(np.abs(traj.times - ts)))
        finals.append(np.asarray(traj.states[at_ts].I.values)[scale - 1 :: scale])
        rows.append(
            {
                "level": level,
                "nR": fine.nR,
                "snapshots": int(times.size),
                "h": fine.h_radial,
                "dt": horizon / (n_times - 1),
                "loop_residual": residuals[-1],
            }
        )
        logger.info(f"refinement level {level}: nR={fine.nR}, residual={residuals[-1]:.3e}")

    changes = [float(np.max(np.abs(a - b))) for a, b in zip(finals, finals[1:], strict=False)]
    orders = [
        np.inf if b == 0.0 else float(np.log2(a / b))
        for a, b in zip(changes, changes[1:], strict=False)
    ]
    for row, change in zip(rows, changes, strict=False):
        row["I_change"] = change
    for row, order in zip(rows, orders, strict=False):
        row["observed_order"] = order

    halving = [
        Check.le("loop_residual_halves", r1, 0.5 * r0, ANCHOR_LOOP)
        for r0, r1 in zip(residuals, residuals[1:], strict=False)
    ]
    order_checks = [Check.ge("I_observed_order", o, min_order, ANCHOR_SLOPE) for o in orders]
    checks = [
        Check.le(
            "loop_residual_reference", residuals[0], loop_tol, ANCHOR_LOOP,
            text="closed-loop residual at the coarsest level <= tol",
        ),
        worst(
            halving, "loop_residual_halves", ANCHOR_LOOP,
            "residual(h/2, dt/2) <= residual(h, dt)/2 at every level",
        ),
        worst(
            order_checks, "I_observed_order", ANCHOR_SLOPE,
            "log2 of successive changes of I(t_star) >= min_order",
        ),
    ]
    report = VerificationReport("convergence").extend(
        checks,
        t_star=ts,
        alpha=alpha,
        levels=levels,
        finest_nR=grid.nR * 2 ** (levels - 1),
        loop_residual_finest=residuals[-1],
        observed_order_min=min(orders),
    )
    for failed in report.failed_checks:
        logger.warning(f"check {failed.name} failed: lhs={failed.lhs:.6g}, rhs={failed.rhs:.6g}")
    return rows, report
