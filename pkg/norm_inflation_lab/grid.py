"""Discretization of the scaled polar domain (R, beta) and the coordinate maps.

The scaled variables are R = r^alpha and beta = arctan(x/y). Only the quarter period
beta in [0, pi/2] is stored; the remaining periods are recovered from the parity class
of each field (see fields.py).

Radial derivatives are taken in the variable in which the grid is uniform: R itself for
``uniform-R`` grids and s = log R for ``log-R`` grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt

from .constants import ALPHA_MAX, MIN_NODES, GridError


FloatArray = npt.NDArray[np.float64]


class Spacing(str, Enum):
    """Radial node distribution."""

    UNIFORM_R = "uniform-R"
    LOG_R = "log-R"


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor grid on (0, R_max] x [0, pi/2] with the scaling exponent attached.

    Node arrays are read-only, so a grid can be shared freely between fields and workers.
    """

    alpha: float
    R_nodes: FloatArray
    beta_nodes: FloatArray
    spacing: Spacing

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= ALPHA_MAX:
            raise GridError(f"alpha={self.alpha} outside (0, {ALPHA_MAX}]")
        if self.R_nodes.ndim != 1 or self.beta_nodes.ndim != 1:
            raise GridError("node arrays must be one-dimensional")
        if self.R_nodes.size < MIN_NODES or self.beta_nodes.size < MIN_NODES:
            raise GridError(f"need at least {MIN_NODES} nodes in each direction")
        if self.R_nodes[0] <= 0.0 or np.any(np.diff(self.R_nodes) <= 0.0):
            raise GridError("R nodes must be positive and strictly increasing")
        if self.beta_nodes[0] != 0.0 or self.beta_nodes[-1] != np.pi / 2:
            raise GridError("beta nodes must include both endpoints 0 and pi/2")
        self.R_nodes.setflags(write=False)
        self.beta_nodes.setflags(write=False)

    @property
    def nR(self) -> int:
        return int(self.R_nodes.size)

    @property
    def n_beta(self) -> int:
        return int(self.beta_nodes.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nR, self.n_beta)

    @property
    def R_max(self) -> float:
        return float(self.R_nodes[-1])

    @property
    def h_beta(self) -> float:
        return float(self.beta_nodes[1] - self.beta_nodes[0])

    @property
    def s_nodes(self) -> FloatArray:
        """log R at the radial nodes."""
        return np.log(self.R_nodes)

    @property
    def h_radial(self) -> float:
        """Step of the uniform radial variable (R or log R)."""
        if self.spacing is Spacing.LOG_R:
            return float((np.log(self.R_nodes[-1]) - np.log(self.R_nodes[0])) / (self.nR - 1))
        return float(self.R_nodes[1] - self.R_nodes[0])

    def with_alpha(self, alpha: float) -> Grid:
        """Same nodes, different scaling exponent."""
        return Grid(alpha, self.R_nodes.copy(), self.beta_nodes.copy(), self.spacing)

    def mesh(self) -> tuple[FloatArray, FloatArray]:
        """(R, beta) arrays of shape (nR, n_beta)."""
        R, beta = np.meshgrid(self.R_nodes, self.beta_nodes, indexing="ij")
        return R, beta


def build_grid(
    alpha: float,
    R_max: float,
    nR: int,
    n_beta: int,
    spacing: Spacing | str = Spacing.UNIFORM_R,
) -> Grid:
    """Build the (R, beta) grid.

    Args:
    ----
        alpha: Scaling exponent in (0, 1/4].
        R_max: Radial truncation, must exceed 1.
        nR: Number of radial nodes (>= 8).
        n_beta: Number of beta nodes on [0, pi/2] including both endpoints (>= 8).
        spacing: ``uniform-R`` puts R_i = R_max (i+1)/nR; ``log-R`` is geometric from R_max/nR.

    Returns:
    -------
        The grid.

    Raises:
    ------
        GridError: If a precondition fails.

    """
    problems = []
    if not 0.0 < alpha <= ALPHA_MAX:
        problems.append(f"alpha={alpha} outside (0, {ALPHA_MAX}]")
    if not R_max > 1.0:
        problems.append(f"R_max={R_max} must exceed 1")
    if nR < MIN_NODES or n_beta < MIN_NODES:
        problems.append(f"node counts ({nR}, {n_beta}) below {MIN_NODES}")
    if problems:
        raise GridError("; ".join(problems))

    spacing = Spacing(spacing)
    if spacing is Spacing.LOG_R:
        R_nodes = np.geomspace(R_max / nR, R_max, nR)
    else:
        R_nodes = R_max * np.arange(1, nR + 1, dtype=np.float64) / nR
    R_nodes[-1] = R_max
    beta_nodes = np.linspace(0.0, np.pi / 2, n_beta)
    beta_nodes[0] = 0.0
    beta_nodes[-1] = np.pi / 2
    return Grid(float(alpha), R_nodes, beta_nodes, spacing)


def to_scaled(x: npt.ArrayLike, y: npt.ArrayLike, alpha: float) -> tuple[FloatArray, FloatArray]:
    """Map Cartesian (x, y) to (R, beta) with R = r^alpha and beta = arctan(x/y).

    Raises
    ------
        GridError: At the origin, where R = 0 is a coordinate singularity.

    """
    x_arr = np.asarray(x, dtype=np.float64)
    y_arr = np.asarray(y, dtype=np.float64)
    r = np.hypot(x_arr, y_arr)
    if np.any(r == 0.0):
        raise GridError("the origin has no scaled coordinates")
    return np.exp(alpha * np.log(r)), np.arctan2(x_arr, y_arr)


def from_scaled(
    R: npt.ArrayLike, beta: npt.ArrayLike, alpha: float
) -> tuple[FloatArray, FloatArray]:
    """Inverse of :func:`to_scaled`: x = r sin(beta), y = r cos(beta), r = R^{1/alpha}."""
    R_arr = np.asarray(R, dtype=np.float64)
    beta_arr = np.asarray(beta, dtype=np.float64)
    if np.any(R_arr <= 0.0):
        raise GridError("R must be positive")
    r = np.exp(np.log(R_arr) / alpha)
    return r * np.sin(beta_arr), r * np.cos(beta_arr)


# Finite differences along axis 0 on a uniform variable with spacing h.
# Fourth order in the interior, second order centered at nodes 1 and n-2, second order
# one-sided at the two ends.


def diff1(values: FloatArray, h: float) -> FloatArray:
    """First derivative along axis 0."""
    f = np.asarray(values, dtype=np.float64)
    out = np.empty_like(f)
    out[2:-2] = (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * h)
    out[1] = (f[2] - f[0]) / (2.0 * h)
    out[-2] = (f[-1] - f[-3]) / (2.0 * h)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return out


def diff2(values: FloatArray, h: float) -> FloatArray:
    """Second derivative along axis 0."""
    f = np.asarray(values, dtype=np.float64)
    out = np.empty_like(f)
    out[2:-2] = (-f[4:] + 16.0 * f[3:-1] - 30.0 * f[2:-2] + 16.0 * f[1:-3] - f[:-4]) / (
        12.0 * h * h
    )
    out[1] = (f[2] - 2.0 * f[1] + f[0]) / (h * h)
    out[-2] = (f[-1] - 2.0 * f[-2] + f[-3]) / (h * h)
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h)
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / (h * h)
    return out


def _radial_shape(values: FloatArray, grid: Grid) -> FloatArray:
    """R nodes broadcast against ``values`` (1d profile or 2d field)."""
    if values.ndim == 1:
        return np.asarray(grid.R_nodes)
    return np.asarray(grid.R_nodes)[:, None]


def radial_r_dr(values: FloatArray, grid: Grid) -> FloatArray:
    """R d/dR along axis 0."""
    du = diff1(values, grid.h_radial)
    if grid.spacing is Spacing.LOG_R:
        return du
    return _radial_shape(values, grid) * du


def radial_r2_drr(values: FloatArray, grid: Grid) -> FloatArray:
    """R^2 d^2/dR^2 along axis 0."""
    h = grid.h_radial
    if grid.spacing is Spacing.LOG_R:
        return diff2(values, h) - diff1(values, h)
    R = _radial_shape(values, grid)
    return R * R * diff2(values, h)


def radial_d_R(values: FloatArray, grid: Grid) -> FloatArray:
    """Plain d/dR along axis 0."""
    du = diff1(values, grid.h_radial)
    if grid.spacing is Spacing.LOG_R:
        return du / _radial_shape(values, grid)
    return du
