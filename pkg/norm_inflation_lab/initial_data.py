"""Families of initial data and their size constants."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import C_IMPL, SUPPORT_SCALE_3D, ConfigError
from .fields import AnyField, RadialProfile
from .grid import FloatArray, Grid
from .logger import logger


class Case3d(str, Enum):
    """Sign choice of the 3d data."""

    I = "i"  # noqa: E741
    II = "ii"
    NONE = "none"


@dataclass(frozen=True)
class DataParams:
    """Amplitude, scaling exponent and regularity index of a data family."""

    delta: float
    alpha: float
    k: int = 3
    case3d: Case3d = Case3d.NONE

    def __post_init__(self) -> None:
        problems = []
        if not 0.0 < self.delta < 1.0:
            problems.append(f"delta={self.delta} outside (0, 1)")
        if not 0.0 < self.alpha <= 0.25:
            problems.append(f"alpha={self.alpha} outside (0, 1/4]")
        elif self.alpha > self.delta**2:
            problems.append("alpha <= delta^2 violated")
        min_k = 3 if self.case3d is Case3d.NONE else 4
        if self.k < min_k:
            problems.append(f"k={self.k} below {min_k}")
        if problems:
            raise ConfigError(problems)


@dataclass(frozen=True)
class SizeConstants:
    """C_k and C_{k+1}."""

    C_k: float
    C_k1: float


@dataclass(frozen=True)
class SupportMeta:
    """Support bookkeeping of the 3d data, in the R = r^alpha variable."""

    epsilon: float
    S0_alpha: float
    S0_bracket: tuple[float, float]
    support: tuple[float, float]


def loglog(alpha: float) -> float:
    """|log|log alpha||, required to exceed 1."""
    value = abs(np.log(abs(np.log(alpha))))
    if not value > 1.0:
        raise ConfigError([f"|log|log alpha|| = {value:.6g} must exceed 1 (alpha={alpha})"])
    return float(value)


def bump(u: FloatArray) -> FloatArray:
    """Mollifier e * exp(-1/(1-u^2)) on (-1, 1), zero outside, max 1 at u = 0."""
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def bump_derivative(u: FloatArray, order: int) -> FloatArray:
    """Analytic derivatives of :func:`bump` in u, order 0, 1 or 2."""
    u = np.asarray(u, dtype=np.float64)
    phi = bump(u)
    if order == 0:
        return phi
    inside = np.abs(u) < 1.0
    w = np.where(inside, 1.0 - u**2, 1.0)
    q1 = -2.0 * u / w**2
    if order == 1:
        return np.where(inside, phi * q1, 0.0)
    if order == 2:
        q2 = -2.0 / w**2 - 8.0 * u**2 / w**3
        return np.where(inside, phi * (q1**2 + q2), 0.0)
    raise ValueError(f"order {order} not available")


def _smooth_step(t: FloatArray) -> FloatArray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
        b = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def plateau(u: FloatArray) -> FloatArray:
    """Smooth cutoff equal to 1 on [1/180, 1/90], supported in [0, 1/60]."""
    u = np.asarray(u, dtype=np.float64)
    rise = _smooth_step(u / (1.0 / 180.0))
    fall = _smooth_step((1.0 / 60.0 - u) / (1.0 / 60.0 - 1.0 / 90.0))
    return rise * fall


def smoothed_indicator(
    grid: Grid, lo: float = 1.0, hi: float = 2.0, ramp: float = 0.25
) -> RadialProfile:
    """Smooth function equal to 1 on [lo, hi], supported in [lo - ramp, hi + ramp]."""
    R = np.asarray(grid.R_nodes)
    rise = _smooth_step((R - lo + ramp) / ramp)
    fall = _smooth_step((hi + ramp - R) / ramp)
    return RadialProfile(grid, rise * fall)


def elliptic_test_vorticity(grid: Grid) -> AnyField:
    """Default vorticity of the elliptic check: f(R) (sin 2beta + sin 4beta / 2)."""
    f = smoothed_indicator(grid)
    return f.times_sin(2) + f.times_sin(4) * 0.5


def make_bump(grid: Grid, center: float, width: float) -> RadialProfile:
    """Bump with max 1 at ``center`` and support exactly [center - width, center + width]."""
    if width <= 0.0:
        raise ConfigError([f"bump width {width} must be positive"])
    return RadialProfile(grid, bump((np.asarray(grid.R_nodes) - center) / width))


def _phi_13(x: FloatArray) -> FloatArray:
    """The standard profile on [1, 3]."""
    return bump(np.asarray(x) - 2.0)


def make_eta0_2d(p: DataParams, grid: Grid) -> RadialProfile:
    """delta (phi(R) + L^{(1-k)/4} phi((R-1) L^{1/4})), L = |log|log alpha||."""
    L = loglog(p.alpha)
    R = np.asarray(grid.R_nodes)
    values = p.delta * (_phi_13(R) + L ** ((1 - p.k) / 4.0) * _phi_13((R - 1.0) * L**0.25))
    logger.debug(f"eta0 2d: delta={p.delta}, alpha={p.alpha}, k={p.k}, L={L:.6g}")
    return RadialProfile(grid, values)


def make_g0_2d(p: DataParams, grid: Grid) -> RadialProfile:
    """delta phi(R), nonnegative with support [1, 3]."""
    return RadialProfile(grid, p.delta * _phi_13(np.asarray(grid.R_nodes)))


def make_data_3d(p: DataParams, grid: Grid) -> tuple[RadialProfile, RadialProfile, SupportMeta]:
    """Swirl and vorticity profiles near R = 1/8.

    eta0 = delta L^{(1-k)/4} phi((R - 1/8)/eps) and g0 = +-delta plateau(R - 1/8 - eps), with
    eps = L^{-1/4}/112 so that every support sits inside [1/8 + eps, 1/7 + eps].
    """
    if p.case3d is Case3d.NONE:
        raise ConfigError(["3d data needs case3d in {i, ii}"])
    L = loglog(p.alpha)
    eps = L**-0.25 / SUPPORT_SCALE_3D
    R = np.asarray(grid.R_nodes)
    eta0 = p.delta * L ** ((1 - p.k) / 4.0) * _phi_13((R - 0.125) / eps)
    sign = 1.0 if p.case3d is Case3d.I else -1.0
    g0 = sign * p.delta * plateau(R - 0.125 - eps)
    lo = 0.125 + eps
    hi = 0.125 + max(3.0 * eps, eps + 1.0 / 60.0)
    meta = SupportMeta(
        epsilon=eps, S0_alpha=hi, S0_bracket=(0.125 + eps, 1.0 / 7.0 + eps), support=(lo, hi)
    )
    logger.debug(f"3d data case {p.case3d.value}: eps={eps:.6g}, support=[{lo:.6g}, {hi:.6g}]")
    return RadialProfile(grid, g0), RadialProfile(grid, eta0), meta


def size_constants(p: DataParams) -> SizeConstants:
    """C_k = C delta L^{1/4}, C_{k+1} = C delta L^{1/2}."""
    L = loglog(p.alpha)
    return SizeConstants(C_k=C_IMPL * p.delta * L**0.25, C_k1=C_IMPL * p.delta * L**0.5)
