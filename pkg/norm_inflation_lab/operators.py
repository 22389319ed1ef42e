"""Integral operators on radial profiles and fields.

All radial integrals are taken in s = log R, where the Biot-Savart kernels are
exponentials: L and L12 are tail integrals of ds, R^alpha is a causal exponential
convolution with rate 4/alpha. The exponential convolutions are integrated with
exponentially fitted weights, exact for piecewise-linear sources, so that rates in the
thousands (alpha = 1e-3) cost nothing in stability.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .constants import IntegrationError, TruncationError
from .fields import AnyField, Parity, RadialProfile, as_split
from .grid import FloatArray, Grid
from .logger import logger
from .norms import beta_project


SUPPORT_TOL = 1e-12


def _fitted_weights(mu: FloatArray, delta: float) -> tuple[FloatArray, FloatArray, FloatArray]:
    """decay, weight of the new node, weight of the old node for one step of length delta.

    For y' + mu y = f with f linear on the step,
    y_new = e^{-mu delta} y_old + (A - B) f_new + B f_old with
    A = (1 - e^{-x})/mu, B = (1 - e^{-x}(1 + x))/(mu^2 delta), x = mu delta.
    """
    x = mu * delta
    decay = np.exp(-x)
    small = np.abs(x) < 1e-3
    safe_mu = np.where(small, 1.0, mu)
    safe_x = np.where(small, 1.0, x)
    A = np.where(small, delta * (1.0 - x / 2.0 + x * x / 6.0), -np.expm1(-safe_x) / safe_mu)
    B = np.where(
        small,
        delta * (0.5 - x / 3.0 + x * x / 8.0 - x**3 / 30.0),
        (1.0 - np.exp(-safe_x) * (1.0 + safe_x)) / (safe_mu * safe_mu * delta),
    )
    return decay, A - B, B


def exponential_sweep(
    source: FloatArray,
    s: FloatArray,
    mu: FloatArray | float,
    y0: FloatArray | float = 0.0,
    reverse: bool = False,
) -> FloatArray:
    """Integrate y' + mu y = source along s (or dy/d(-s) + mu y = source when ``reverse``).

    Args:
    ----
        source: Samples of shape (n,) or (n, m); m independent rates along axis 1.
        s: Strictly increasing nodes of shape (n,).
        mu: Rate(s), scalar or shape (m,). Nonnegative rates are the stable direction.
        y0: Value at the first node of the sweep (s[0], or s[-1] when reversed).
        reverse: Sweep from the last node towards the first.

    Returns:
    -------
        y at every node, same shape as ``source``.

    """
    f = np.asarray(source, dtype=np.float64)
    nodes = np.asarray(s, dtype=np.float64)
    if reverse:
        f = f[::-1]
        nodes = -nodes[::-1]
    rates = np.asarray(mu, dtype=np.float64)
    y = np.empty_like(f)
    y[0] = y0
    steps = np.diff(nodes)
    for i in range(1, f.shape[0]):
        decay, w_new, w_old = _fitted_weights(rates, float(steps[i - 1]))
        y[i] = decay * y[i - 1] + w_new * f[i] + w_old * f[i - 1]
    return y[::-1] if reverse else y


def _check_support(f: RadialProfile) -> None:
    R = np.asarray(f.grid.R_nodes)
    scale = float(np.max(np.abs(f.values)))
    if scale == 0.0:
        return
    outside = np.abs(f.values[R > 0.5 * f.grid.R_max]) > SUPPORT_TOL * scale
    if np.any(outside):
        raise TruncationError(
            f"profile is nonzero beyond R_max/2 = {0.5 * f.grid.R_max:.6g}; enlarge R_max"
        )


def tail_log_integral(f: RadialProfile) -> RadialProfile:
    """G(R) = int_R^{R_max} f(s)/s ds by right-to-left cumulative trapezoid in log s.

    Raises
    ------
        TruncationError: If f does not vanish beyond R_max/2.

    """
    _check_support(f)
    s = np.asarray(f.grid.s_nodes)
    reversed_integral = cumulative_trapezoid(f.values[::-1], x=s[::-1], initial=0.0)
    return RadialProfile(f.grid, -reversed_integral[::-1])


def op_L(omega: AnyField) -> RadialProfile:
    """L(Omega)(R) = (1/pi) int_R^inf int_0^{2 pi} Omega sin(2 beta)/s dbeta ds."""
    return tail_log_integral(beta_project(omega, 2))


def l12_weight_integral(omega: AnyField) -> RadialProfile:
    """Angular integral of Omega sin(2 beta) cos(beta).

    Axisymmetric fields live in the two odd classes and are integrated as four copies of the
    stored quarter. Even-class parts, radial fields among them, contribute nothing.
    """
    grid = omega.grid
    beta = np.asarray(grid.beta_nodes)
    weight = np.sin(2.0 * beta) * np.cos(beta)
    out = np.zeros(grid.nR)
    for part in as_split(omega).parts:
        if part.parity in (Parity.SIN_ODD, Parity.COS_ODD):
            out += 4.0 * trapezoid(part.values * weight, x=beta, axis=1)
    return RadialProfile(grid, out)


def op_L12(omega: AnyField) -> RadialProfile:
    """L12(Omega)(R) = (3/(8 pi)) int_R^inf int Omega sin(2 beta) cos(beta)/s dbeta ds."""
    return tail_log_integral(l12_weight_integral(omega) * (3.0 / (8.0 * np.pi)))


def ralpha_profile(omega2: RadialProfile, alpha: float) -> RadialProfile:
    """R^alpha from the sin(2 beta) coefficient: R^{-4/a}/(4a) int_0^R s^{4/a} omega2 ds/s."""
    grid = omega2.grid
    mu = 4.0 / alpha
    s = np.asarray(grid.s_nodes)
    y = exponential_sweep(omega2.values, s, mu, y0=omega2.values[0] / mu)
    values = y / (4.0 * alpha)
    if not np.all(np.isfinite(values)):
        raise IntegrationError(f"R^alpha overflowed at alpha={alpha}")
    return RadialProfile(grid, values)


def op_Ralpha(omega: AnyField, alpha: float) -> RadialProfile:
    """R^alpha(Omega)(R) = R^{-4/a}/(4 a pi) int_0^R int s^{4/a} Omega sin(2 beta)/s dbeta ds.

    The s^{4/a} weight is never formed; the inner integral is the causal convolution
    int e^{-(4/a)(log R - log s)} Omega_2(s) dlog s, swept forward in log R.
    """
    if not 0.0 < alpha <= 0.25:
        raise IntegrationError(f"alpha={alpha} outside (0, 1/4]")
    logger.debug(f"R^alpha sweep with rate {4.0 / alpha:.6g} on {omega.grid.nR} nodes")
    return ralpha_profile(beta_project(omega, 2), alpha)


def tail_integral_on(grid: Grid, values: FloatArray) -> FloatArray:
    """Column-wise tail integral int_R^{R_max} v ds/s for v of shape (nR, m), no support check."""
    s = np.asarray(grid.s_nodes)
    reversed_integral = cumulative_trapezoid(values[::-1], x=s[::-1], axis=0, initial=0.0)
    return np.asarray(-reversed_integral[::-1])
