"""Full 2d Boussinesq system for (Omega, eta, xi) = (omega, d_x rho, d_y rho) in (R, beta).

Every term of the gradient system is kept: the transport field comes from the full stream
function, and the velocity gradients are assembled by the exact chain rule from
u1 = R^{1/a} b1, u2 = R^{1/a} b2. Time stepping is classical RK4 with a fixed fourth-order
hyperdiffusion of size h^4 in both directions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .constants import (
    BLOWUP_LIMIT,
    MAX_STENCIL_ORDER,
    CFLError,
    ConfigError,
    IntegrationError,
    LabError,
)
from .elliptic import solve_psi_2d
from .fields import (
    AnyField,
    PrefactoredField,
    cartesian_derivative,
    cos_beta,
    sin_beta,
)
from .grid import FloatArray, Grid, Spacing
from .initial_data import DataParams, make_eta0_2d, make_g0_2d, size_constants
from .logger import logger
from .lom2d import (
    XiMode,
    eta_time_integrals,
    eval_eta_app,
    eval_omega_app,
    eval_xi_app,
    evolve_I,
    t_star,
)
from .norms import calHk_norm, linf_norm
from .report import Check, VerificationReport, worst


ANCHOR_F0 = 'eq. (data eta rem), "We estimate the size of such error"'
ANCHOR_BOOTSTRAP = 'lem. bootstrap, "then actually"'
ANCHOR_TRANSFER = 'sec. last, "We finally have all the ingredients"'
ANCHOR_START = 'eq. (xi-initial), "the error at initial time"'
ANCHOR_HYPER = 'prop. rem, "smallness of the remainders"'

DEFAULT_CFL = 0.5
DEFAULT_HYPERDIFFUSION = 1.0
DEFAULT_MAX_STEPS = 100_000
# RK4 stability on the negative real axis is 2.78; 4th-order stencils reach |h^4 d^4| ~ 28.4
HYPER_STABILITY = 2.78 / (2.0 * 28.4)


@dataclass(frozen=True)
class FullState2d:
    """Vorticity and density gradient at time t."""

    t: float
    omega: AnyField
    eta: AnyField
    xi: AnyField
    alpha: float

    @property
    def grid(self) -> Grid:
        return self.omega.grid

    def sup(self) -> float:
        return max(float(linf_norm(f)) for f in (self.omega, self.eta, self.xi))


@dataclass(frozen=True)
class VelocityTerms:
    """Transport coefficients and the four Cartesian velocity gradients.

    The transport operator is radial * R d_R + angular * d_beta.
    """

    radial: AnyField
    angular: AnyField
    dxu1: AnyField
    dxu2: AnyField
    dyu1: AnyField
    dyu2: AnyField


@dataclass(frozen=True)
class RemainderSeries:
    """H^N sizes of Omega - Omega_app, eta - eta_app and xi - xi_app over time."""

    times: FloatArray
    F: FloatArray
    omega_r: FloatArray
    eta_r: FloatArray
    xi_r: FloatArray
    alpha: float
    cap: float
    hyperdiffusion: FloatArray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return int(self.times.size)

    def rows(self) -> list[dict[str, float]]:
        return [
            {
                "t": float(t),
                "F": float(F),
                "omega_r_HN": float(o),
                "eta_r_HN": float(e),
                "xi_r_HN": float(x),
                "sqrt_alpha_cap": self.cap,
            }
            for t, F, o, e, x in zip(
                self.times, self.F, self.omega_r, self.eta_r, self.xi_r, strict=True
            )
        ]


def _gradient(base: AnyField, which: str) -> AnyField:
    out = cartesian_derivative(PrefactoredField(base, 1), "x" if which == "x" else "y")
    if isinstance(out, PrefactoredField):
        raise IntegrationError("velocity gradient kept a radial prefactor")
    return out


def velocity_terms(psi: AnyField, alpha: float) -> VelocityTerms:
    """Transport coefficients and grad u from Psi.

    u1 = -R^{1/a}(2 sin(b) Psi + a sin(b) R Psi_R + cos(b) Psi_b) and
    u2 = R^{1/a}(2 cos(b) Psi + a cos(b) R Psi_R - sin(b) Psi_b); the prefactor is
    differentiated exactly, so every gradient is order zero in R^{1/a}.
    """
    grid = psi.grid
    sb, cb = sin_beta(grid), cos_beta(grid)
    psi_R = psi.r_dr()
    psi_b = psi.d_beta()
    u1 = -(sb * psi * 2.0 + sb * psi_R * alpha + cb * psi_b)
    u2 = cb * psi * 2.0 + cb * psi_R * alpha - sb * psi_b
    return VelocityTerms(
        radial=psi_b * (-alpha),
        angular=psi * 2.0 + psi_R * alpha,
        dxu1=_gradient(u1, "x"),
        dxu2=_gradient(u2, "x"),
        dyu1=_gradient(u1, "y"),
        dyu2=_gradient(u2, "y"),
    )


def transport(f: AnyField, vel: VelocityTerms) -> AnyField:
    """u . grad f = radial R f_R + angular f_b."""
    return vel.radial * f.r_dr() + vel.angular * f.d_beta()


def hyperdiffusion(f: AnyField, kappa: float) -> AnyField:
    """-kappa (h^4 d^4 in the uniform radial variable + h_b^4 d_b^4) f."""
    grid = f.grid
    hr4 = grid.h_radial**4
    hb4 = grid.h_beta**4
    return (f.d_s4() * hr4 + f.d_beta2().d_beta2() * hb4) * (-kappa)


def _abs_max(f: AnyField) -> FloatArray:
    return np.sum([np.abs(p.values) for p in f.parts], axis=0)


def cfl_limit(
    vel: VelocityTerms, grid: Grid, cfl: float = DEFAULT_CFL, kappa: float = 0.0
) -> float:
    """Largest stable step for the transport speeds in ``vel`` and the hyperdiffusion."""
    angular = float(np.max(_abs_max(vel.angular))) / grid.h_beta
    radial_speed = _abs_max(vel.radial)
    if grid.spacing is Spacing.UNIFORM_R:
        radial_speed = radial_speed * np.asarray(grid.R_nodes)[:, None]
    radial = float(np.max(radial_speed)) / grid.h_radial
    rate = angular + radial
    limit = cfl / rate if rate > 0.0 else np.inf
    if kappa > 0.0:
        limit = min(limit, HYPER_STABILITY / kappa)
    return float(limit)


Fields = tuple[AnyField, AnyField, AnyField]


def _rhs(
    fields: Fields, alpha: float, kappa: float, transport_only: bool
) -> tuple[Fields, VelocityTerms]:
    omega, eta, xi = fields
    vel = velocity_terms(solve_psi_2d(omega, alpha), alpha)
    d_omega = -transport(omega, vel)
    d_eta = -transport(eta, vel)
    d_xi = -transport(xi, vel)
    if not transport_only:
        d_omega = d_omega + eta
        d_eta = d_eta + vel.dxu2 - vel.dxu1 * eta - vel.dxu2 * xi
        d_xi = d_xi + vel.dyu2 - vel.dyu1 * eta - vel.dyu2 * xi
    if kappa > 0.0:
        d_omega = d_omega + hyperdiffusion(omega, kappa)
        d_eta = d_eta + hyperdiffusion(eta, kappa)
        d_xi = d_xi + hyperdiffusion(xi, kappa)
    return (d_omega, d_eta, d_xi), vel


def _axpy(fields: Fields, k: Fields, h: float) -> Fields:
    return (fields[0] + k[0] * h, fields[1] + k[1] * h, fields[2] + k[2] * h)


def _rk4(
    state: FullState2d, dt: float, k1: Fields, kappa: float, transport_only: bool
) -> FullState2d:
    y: Fields = (state.omega, state.eta, state.xi)
    a = state.alpha
    k2, _ = _rhs(_axpy(y, k1, 0.5 * dt), a, kappa, transport_only)
    k3, _ = _rhs(_axpy(y, k2, 0.5 * dt), a, kappa, transport_only)
    k4, _ = _rhs(_axpy(y, k3, dt), a, kappa, transport_only)
    new = tuple(
        y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0) for i in range(3)
    )
    out = FullState2d(state.t + dt, new[0], new[1], new[2], a)
    if out.sup() > BLOWUP_LIMIT:
        raise IntegrationError(f"solution exceeded {BLOWUP_LIMIT:g} at t={out.t:.6g}")
    return out


def step(
    state: FullState2d,
    dt: float,
    cfl: float = DEFAULT_CFL,
    kappa: float = DEFAULT_HYPERDIFFUSION,
    transport_only: bool = False,
) -> FullState2d:
    """One RK4 step; Psi is recomputed from Omega at every stage.

    Args:
    ----
        state: Current state.
        dt: Time step.
        cfl: Courant number used for the stability limit.
        kappa: Hyperdiffusion rate; the operator is scaled by h^4.
        transport_only: Drop every source term and keep pure transport.

    Returns:
    -------
        The state at t + dt.

    Raises:
    ------
        CFLError: If dt exceeds the stability limit.
        IntegrationError: If the solution blows up.

    """
    k1, vel = _rhs((state.omega, state.eta, state.xi), state.alpha, kappa, transport_only)
    limit = cfl_limit(vel, state.grid, cfl, kappa)
    if dt > limit:
        raise CFLError(dt, limit)
    return _rk4(state, dt, k1, kappa, transport_only)


def advance(
    state: FullState2d,
    t_target: float,
    cfl: float = DEFAULT_CFL,
    kappa: float = DEFAULT_HYPERDIFFUSION,
    max_steps: int = DEFAULT_MAX_STEPS,
    dt_scale: float = 1.0,
) -> tuple[FullState2d, int, float]:
    """Step up to ``t_target`` at the stability limit times ``dt_scale``.

    Returns
    -------
        The state, the number of steps and the accumulated sup of the hyperdiffusion
        contribution, sum of dt |H(f)|_inf over the three fields.

    """
    steps = 0
    hyper = 0.0
    while state.t < t_target * (1.0 - 1e-14):
        fields = (state.omega, state.eta, state.xi)
        k1, vel = _rhs(fields, state.alpha, kappa, False)
        dt = min(dt_scale * cfl_limit(vel, state.grid, cfl, kappa), t_target - state.t)
        if kappa > 0.0:
            hyper += dt * sum(float(linf_norm(hyperdiffusion(f, kappa))) for f in fields)
        state = _rk4(state, dt, k1, kappa, False)
        steps += 1
        if steps > max_steps:
            raise IntegrationError(f"more than {max_steps} steps before t={t_target:.6g}")
    return state, steps, hyper


def frozen_transport(f0: AnyField, vel: VelocityTerms, t_end: float, n_steps: int) -> AnyField:
    """Advect f0 by a fixed velocity with RK4, no sources and no hyperdiffusion."""
    f = f0
    dt = t_end / n_steps
    for _ in range(n_steps):
        k1 = -transport(f, vel)
        k2 = -transport(f + k1 * (0.5 * dt), vel)
        k3 = -transport(f + k2 * (0.5 * dt), vel)
        k4 = -transport(f + k3 * dt, vel)
        f = f + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
    return f


def initial_state(p: DataParams, grid: Grid) -> FullState2d:
    """Data of rho_0 = R^{1/a} eta0(R) cos(beta).

    eta = eta0 + a R eta0' cos^2(beta) and xi = (a/2) R eta0' sin(2 beta); Omega_0 = g0 sin(2 beta).
    """
    eta0 = make_eta0_2d(p, grid)
    half_slope = eta0.r_dr() * (0.5 * p.alpha)
    omega = make_g0_2d(p, grid).times_sin(2)
    eta = eta0.as_field() + half_slope.as_field() + half_slope.times_cos(2)
    xi = half_slope.times_sin(2)
    return FullState2d(0.0, omega, eta, xi, p.alpha)


def _remainder_norms(
    state: FullState2d, approx: Fields, N: int
) -> tuple[float, float, float]:
    omega_app, eta_app, xi_app = approx
    return (
        float(calHk_norm(state.omega - omega_app, N)),
        float(calHk_norm(state.eta - eta_app, N)),
        float(calHk_norm(state.xi - xi_app, N)),
    )


def run_remainder_experiment(
    p: DataParams,
    N: int,
    t_end: float | None,
    grid: Grid,
    snapshots: int = 33,
    cfl: float = DEFAULT_CFL,
    kappa: float = DEFAULT_HYPERDIFFUSION,
    corrupt_lom: float = 1.0,
    f_cap_multiplier: float = 1.0,
    dt_scale: float = 1.0,
) -> tuple[RemainderSeries, VerificationReport]:
    """Evolve the full system and the LOM from matching data and measure the remainder.

    Args:
    ----
        p: Data parameters.
        N: Regularity index of the H^N remainder norm, 3 or 4.
        t_end: Final time; None runs to t_star.
        grid: Grid shared by the full solver and the LOM.
        snapshots: Number of equally spaced output times (>= 32).
        cfl: Courant number.
        kappa: Hyperdiffusion rate.
        corrupt_lom: Factor applied to eta_app; 1 is the honest comparison.
        f_cap_multiplier: Scales the 3 sqrt(alpha) cap.
        dt_scale: Fraction of the stability limit used as the step.

    Returns:
    -------
        The (possibly partial) series and the report. A blow-up or solver failure ends the
        run early; the report then carries the error.

    """
    if N not in (3, 4) or N + 1 > MAX_STENCIL_ORDER:
        raise ConfigError([f"remainder order N={N} must be 3 or 4"])
    started = time.perf_counter()
    grid = grid.with_alpha(p.alpha)
    alpha = p.alpha
    consts = size_constants(p)
    ts = t_star(alpha, consts.C_k1)
    horizon = ts if t_end is None else float(t_end)
    times = np.linspace(0.0, horizon, snapshots)
    cap = f_cap_multiplier * 3.0 * np.sqrt(alpha)

    eta0 = make_eta0_2d(p, grid)
    traj = evolve_I(make_g0_2d(p, grid), alpha, times, eta0)
    integrals = eta_time_integrals(traj)
    C_meas = float(calHk_norm(eta0, N + 1))
    logger.info(
        f"remainder 2d: alpha={alpha:g}, N={N}, t_end={horizon:.6g} "
        f"(t_star={ts:.6g}), grid {grid.shape}"
    )

    def approx(i: int) -> Fields:
        s = traj.states[i]
        return (
            eval_omega_app(traj, i, integrals),
            eval_eta_app(s) * corrupt_lom,
            eval_xi_app(s, XiMode.TRANSPORTED),
        )

    state = initial_state(p, grid)
    rows: list[tuple[float, float, float]] = []
    eta_pairs: list[tuple[float, float]] = []
    hyper_series = [0.0]
    total_steps = 0
    error: str | None = None
    for i, t in enumerate(times):
        try:
            if i > 0:
                state, n, hyper = advance(state, float(t), cfl, kappa, dt_scale=dt_scale)
                total_steps += n
                hyper_series.append(hyper_series[-1] + hyper)
            app = approx(i)
            rows.append(_remainder_norms(state, app, N))
        except LabError as e:
            error = f"{type(e).__name__}: {e}"
            logger.error(f"remainder run aborted at t={t:.6g}: {error}")
            break
        eta_pairs.append((float(linf_norm(state.eta)), float(linf_norm(app[1]))))
        logger.debug(f"t={t:.6g}: F={sum(rows[-1]):.6g} after {total_steps} steps")

    done = len(rows)
    parts = np.array(rows) if rows else np.zeros((0, 3))
    series = RemainderSeries(
        times=times[:done],
        F=parts.sum(axis=1),
        omega_r=parts[:, 0],
        eta_r=parts[:, 1],
        xi_r=parts[:, 2],
        alpha=alpha,
        cap=float(cap),
        hyperdiffusion=np.array(hyper_series[:done]),
    )
    report = VerificationReport("remainder2d").extend(
        remainder_checks(series, 2.0 * alpha * C_meas, eta_pairs, ts),
        t_star=ts,
        C_N1_measured=C_meas,
        C_N1_formula=consts.C_k1,
        F0=float(series.F[0]) if done else None,
        F_t_star_over_sqrt_alpha=_value_at(series, ts) / np.sqrt(alpha) if done else None,
        steps=total_steps,
        hyperdiffusion_budget=float(series.hyperdiffusion[-1]) if done else None,
        largest_alpha_within_cap=alpha if done and bool(np.all(series.F <= cap)) else None,
    )
    if error is not None:
        report = report.with_error(error)
    for check in report.failed_checks:
        logger.warning(f"remainder check {check.name} failed: {check.inequality}")
    return series, report.with_runtime(time.perf_counter() - started)


def _value_at(series: RemainderSeries, t: float) -> float:
    return float(np.interp(t, series.times, series.F))


def remainder_checks(
    series: RemainderSeries,
    F0_bound: float,
    eta_pairs: list[tuple[float, float]],
    ts: float,
) -> list[Check]:
    """Initial size, bootstrap cap, transfer of inflation and hyperdiffusion budget."""
    if len(series) == 0:
        return [Check.flag("remainder_series", False, ANCHOR_BOOTSTRAP, "no remainder sample")]
    checks = [
        Check.le("F0_bound", float(series.F[0]), F0_bound, ANCHOR_F0),
        Check.le(
            "omega_r_initial",
            float(series.omega_r[0]),
            1e-10 * max(float(series.F[0]), 1.0),
            ANCHOR_START,
        ),
    ]
    window = series.times <= ts * (1.0 + 1e-12)
    checks.append(
        worst(
            [
                Check.le("bootstrap", float(F), series.cap, ANCHOR_BOOTSTRAP)
                for F in series.F[window]
            ],
            "bootstrap",
            ANCHOR_BOOTSTRAP,
            "F(t) <= 3 sqrt(alpha) on [0, t_star]",
        )
    )
    transfer = [
        Check.ge("inflation_transfer", eta, 0.5 * eta_app, ANCHOR_TRANSFER)
        for (eta, eta_app), F in zip(eta_pairs, series.F, strict=False)
        if F <= series.cap and eta_app >= 2.0 * series.cap
    ]
    checks.append(worst(transfer, "inflation_transfer", ANCHOR_TRANSFER))
    checks.append(
        Check.le(
            "hyperdiffusion_budget",
            float(series.hyperdiffusion[-1]),
            0.01 * series.cap,
            ANCHOR_HYPER,
        )
    )
    return checks
