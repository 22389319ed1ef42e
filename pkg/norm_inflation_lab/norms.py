"""Norms on [0, inf) x [0, 2 pi] evaluated from quarter-period samples.

Parts of different parity are orthogonal over the full period, and each part's square
integrates to four times its quarter-period integral. The sup over the full period is the
max over the four reflected copies of the quarter, each a signed sum of the parts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import trapezoid

from .constants import MAX_STENCIL_ORDER, WEIGHT_LIMIT, NormError
from .fields import AnyField, Parity, RadialProfile, as_split
from .grid import FloatArray, Grid


class NormKind(str, Enum):
    """Which norm a :class:`NormResult` holds."""

    L2 = "L2"
    LINF = "Linf"
    CAL_H = "calH_k"
    CAL_W = "calW_k"
    WEIGHTED_L2_3D = "weightedL2_3d"


@dataclass(frozen=True)
class NormResult:
    """A computed norm value."""

    kind: NormKind
    k: int
    value: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.value) or self.value < 0.0:
            raise NormError(f"invalid {self.kind.value} norm value {self.value}")

    def __float__(self) -> float:
        return self.value


Normable = AnyField | RadialProfile


def _as_field(f: Normable) -> AnyField:
    if isinstance(f, RadialProfile):
        return f.as_field()
    return f


def quarter_integral(values: FloatArray, grid: Grid) -> float:
    """Trapezoid integral over the stored quarter period, measure dR dbeta."""
    inner = trapezoid(values, x=np.asarray(grid.beta_nodes), axis=1)
    return float(trapezoid(inner, x=np.asarray(grid.R_nodes)))


def _l2(f: AnyField) -> float:
    total = sum(4.0 * quarter_integral(p.values * p.values, f.grid) for p in f.parts)
    return float(np.sqrt(max(total, 0.0)))


def _sup(f: AnyField) -> float:
    if len(f.parts) == 1:
        return float(np.max(np.abs(f.parts[0].values)))
    return float(np.max(np.abs(full_period_values(f))))


def full_period_values(f: AnyField) -> FloatArray:
    """Samples on the four reflected copies of the quarter, stacked along axis 1."""
    copies = []
    for use_s0, use_s1 in ((False, False), (True, False), (False, True), (True, True)):
        total = np.zeros(f.grid.shape)
        for p in as_split(f).parts:
            sign = (p.parity.s0 if use_s0 else 1) * (p.parity.s1 if use_s1 else 1)
            total = total + sign * p.values
        copies.append(total)
    return np.concatenate(copies, axis=1)


def l2_norm(f: Normable) -> NormResult:
    return NormResult(NormKind.L2, 0, _l2(_as_field(f)))


def linf_norm(f: Normable) -> NormResult:
    """Max of |f| over the whole period."""
    return NormResult(NormKind.LINF, 0, _sup(_as_field(f)))


def _derivative_terms(f: AnyField, k: int) -> list[tuple[int, AnyField]]:
    """All d_R^i d_beta^{m-i} f with m <= k, paired with i."""
    if k > MAX_STENCIL_ORDER or k < 0:
        raise NormError(f"order k={k} outside [0, {MAX_STENCIL_ORDER}]")
    terms: list[tuple[int, AnyField]] = []
    beta_der = f
    for j in range(k + 1):
        radial = beta_der
        for i in range(k - j + 1):
            terms.append((i, radial))
            if i < k - j:
                radial = radial.d_R()
        if j < k:
            beta_der = beta_der.d_beta()
    return terms


def _sobolev(f: AnyField, k: int, norm: str) -> float:
    measure = _l2 if norm == "L2" else _sup
    R = np.asarray(f.grid.R_nodes)
    total = 0.0
    for i, term in _derivative_terms(f, k):
        total += measure(term)
        total += measure(term * RadialProfile(f.grid, R**i)) if i else measure(term)
    return total


def calHk_norm(f: Normable, k: int) -> NormResult:
    """sum_{m<=k} sum_{i<=m} ||d_R^i d_beta^{m-i} f||_2 + ||R^i d_R^i d_beta^{m-i} f||_2."""
    return NormResult(NormKind.CAL_H, k, _sobolev(_as_field(f), k, "L2"))


def calWk_norm(f: Normable, k: int) -> NormResult:
    """As :func:`calHk_norm` with sup norms."""
    return NormResult(NormKind.CAL_W, k, _sobolev(_as_field(f), k, "Linf"))


def weighted_L2_3d(f: AnyField, sigma: float, alpha: float) -> NormResult:
    """sqrt of the integral of f^2 (1+R)^4/R^4 sin(2 beta)^{-sigma} dR dbeta.

    ``alpha`` only fixes which of the two weights sigma = 99/100, 1 + alpha/10 is meant; it
    does not enter the weight itself.

    Raises
    ------
        NormError: If the weighted integrand is not integrable on the grid.

    """
    grid = f.grid
    if not (np.isclose(sigma, 0.99) or np.isclose(sigma, 1.0 + alpha / 10.0)):
        raise NormError(f"sigma={sigma} is neither 99/100 nor 1+alpha/10")
    R, beta = grid.mesh()
    s = np.sin(2.0 * beta)
    s[:, 0] = 0.0
    s[:, -1] = 0.0
    total = 0.0
    for part in as_split(f).parts:
        f2 = part.values * part.values
        scale = float(np.max(f2)) if f2.size else 0.0
        if scale == 0.0:
            continue
        on_axis = s == 0.0
        if np.any(f2[on_axis] > 1e-24 * scale):
            raise NormError("field does not vanish where the weight is singular")
        with np.errstate(divide="ignore", invalid="ignore"):
            weight = (1.0 + R) ** 4 / R**4 * np.where(on_axis, 1.0, s) ** (-sigma)
            integrand = np.where(on_axis, 0.0, f2 * weight)
        if not np.all(np.isfinite(integrand)) or np.max(integrand) > WEIGHT_LIMIT:
            raise NormError("nonintegrable weighted integrand")
        total += 4.0 * quarter_integral(integrand, grid)
    return NormResult(NormKind.WEIGHTED_L2_3D, 0, float(np.sqrt(total)))


def beta_project(f: AnyField, n: int) -> RadialProfile:
    """Coefficient of sin(n beta) in the expansion of f over the full period.

    Only the part with the parity of sin(n beta) contributes; its coefficient is
    (4/pi) times the quarter-period integral of f sin(n beta).
    """
    if n < 1:
        raise NormError(f"mode index n={n} must be >= 1")
    grid = f.grid
    beta = np.asarray(grid.beta_nodes)
    target = Parity.of_sine(n)
    out = np.zeros(grid.nR)
    for part in as_split(f).parts:
        if part.parity is target:
            out += (4.0 / np.pi) * trapezoid(part.values * np.sin(n * beta), x=beta, axis=1)
    return RadialProfile(grid, out)


def profile_l2(f: RadialProfile) -> float:
    """L^2(dR) norm of a radial profile."""
    return float(np.sqrt(trapezoid(f.values**2, x=np.asarray(f.grid.R_nodes))))

