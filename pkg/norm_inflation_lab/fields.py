"""Field containers on the quarter-period grid.

Every field carries a :class:`Parity`, the pair of signs it picks up under the two
reflections beta -> -beta and beta -> pi - beta. The parity fixes the ghost values used by
the beta stencils and lets norms over the full period [0, 2 pi] be computed exactly from
the quarter-period samples. Fields of mixed symmetry (the full 2d system lives in the
pi-periodic class sin 2m beta + cos 2m beta) are held as a :class:`SplitField`, a sum of
single-parity parts.

A :class:`PrefactoredField` records an explicit R^{q/alpha} factor symbolically, so the
Cartesian chain rule can cancel R^{1/alpha} against R^{-1/alpha} without under/overflow.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np

from .constants import EXP_GUARD, FieldError
from .grid import FloatArray, Grid, diff1, diff2, radial_d_R, radial_r2_drr, radial_r_dr


class Parity(Enum):
    """Signs (s0, s1) under beta -> -beta and beta -> pi - beta."""

    SIN_EVEN = (-1, -1)  # sin 2m beta
    COS_EVEN = (1, 1)  # cos 2m beta, radial functions
    COS_ODD = (1, -1)  # cos (2m+1) beta
    SIN_ODD = (-1, 1)  # sin (2m+1) beta

    @property
    def s0(self) -> int:
        return int(self.value[0])

    @property
    def s1(self) -> int:
        return int(self.value[1])

    def __mul__(self, other: Parity) -> Parity:
        return Parity((self.s0 * other.s0, self.s1 * other.s1))

    def flipped(self) -> Parity:
        """Parity of the beta-derivative."""
        return Parity((-self.s0, -self.s1))

    @classmethod
    def of_sine(cls, n: int) -> Parity:
        return cls.SIN_EVEN if n % 2 == 0 else cls.SIN_ODD

    @classmethod
    def of_cosine(cls, n: int) -> Parity:
        return cls.COS_EVEN if n % 2 == 0 else cls.COS_ODD


Scalar = float | int


def _check_grid(a: Grid, b: Grid) -> None:
    if a is b:
        return
    if (
        a.alpha != b.alpha
        or a.shape != b.shape
        or not np.array_equal(a.R_nodes, b.R_nodes)
        or not np.array_equal(a.beta_nodes, b.beta_nodes)
    ):
        raise FieldError("fields live on different grids")


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled function of R only."""

    grid: Grid
    values: FloatArray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (self.grid.nR,):
            raise FieldError(f"profile shape {values.shape} does not match nR={self.grid.nR}")
        if not np.all(np.isfinite(values)):
            raise FieldError("profile has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> RadialProfile:
        return cls(grid, np.zeros(grid.nR))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[FloatArray], FloatArray]) -> RadialProfile:
        return cls(grid, fn(np.asarray(grid.R_nodes)))

    def _other(self, other: RadialProfile | Scalar) -> FloatArray | float:
        if isinstance(other, RadialProfile):
            _check_grid(self.grid, other.grid)
            return other.values
        return float(other)

    def __add__(self, other: RadialProfile | Scalar) -> RadialProfile:
        return RadialProfile(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other: RadialProfile | Scalar) -> RadialProfile:
        return RadialProfile(self.grid, self.values - self._other(other))

    def __neg__(self) -> RadialProfile:
        return RadialProfile(self.grid, -self.values)

    def __mul__(self, other: RadialProfile | Scalar) -> RadialProfile:
        if isinstance(other, ScalarField | SplitField):
            return NotImplemented
        return RadialProfile(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def r_dr(self) -> RadialProfile:
        return RadialProfile(self.grid, radial_r_dr(self.values, self.grid))

    def d_R(self) -> RadialProfile:
        return RadialProfile(self.grid, radial_d_R(self.values, self.grid))

    def as_field(self) -> ScalarField:
        """The beta-independent field (parity COS_EVEN)."""
        return ScalarField(
            self.grid, np.repeat(self.values[:, None], self.grid.n_beta, axis=1), Parity.COS_EVEN
        )

    def times_mode(self, beta_values: FloatArray, parity: Parity) -> ScalarField:
        """Separable field profile(R) * b(beta)."""
        return ScalarField(self.grid, np.outer(self.values, beta_values), parity)

    def times_sin(self, n: int) -> ScalarField:
        return self.times_mode(np.sin(n * np.asarray(self.grid.beta_nodes)), Parity.of_sine(n))

    def times_cos(self, n: int) -> ScalarField:
        return self.times_mode(np.cos(n * np.asarray(self.grid.beta_nodes)), Parity.of_cosine(n))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Sampled function of (R, beta) on the quarter period, with its parity class."""

    grid: Grid
    values: FloatArray
    parity: Parity

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise FieldError(f"field shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise FieldError("field has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid, parity: Parity = Parity.SIN_EVEN) -> ScalarField:
        return cls(grid, np.zeros(grid.shape), parity)

    @classmethod
    def from_function(
        cls, grid: Grid, fn: Callable[[FloatArray, FloatArray], FloatArray], parity: Parity
    ) -> ScalarField:
        R, beta = grid.mesh()
        return cls(grid, np.broadcast_to(fn(R, beta), grid.shape), parity)

    @property
    def parts(self) -> tuple[ScalarField, ...]:
        return (self,)

    def with_values(self, values: FloatArray) -> ScalarField:
        return ScalarField(self.grid, values, self.parity)

    # arithmetic

    def __add__(self, other: AnyField) -> AnyField:
        return combine(self.grid, [*self.parts, *other.parts])

    def __sub__(self, other: AnyField) -> AnyField:
        return combine(self.grid, [*self.parts, *(-other).parts])

    def __neg__(self) -> ScalarField:
        return self.with_values(-self.values)

    def __mul__(self, other: AnyField | RadialProfile | Scalar) -> AnyField:
        if isinstance(other, int | float | np.floating):
            return self.with_values(self.values * float(other))
        if isinstance(other, RadialProfile):
            _check_grid(self.grid, other.grid)
            return self.with_values(self.values * other.values[:, None])
        if isinstance(other, ScalarField):
            _check_grid(self.grid, other.grid)
            return ScalarField(self.grid, self.values * other.values, self.parity * other.parity)
        return combine(self.grid, [self * p for p in other.parts])

    __rmul__ = __mul__

    # derivatives

    def _ghosted(self, width: int = 2) -> FloatArray:
        """Values extended by ``width`` reflected nodes on both beta ends."""
        f = self.values
        left = self.parity.s0 * f[:, width:0:-1]
        right = self.parity.s1 * f[:, -2 : -2 - width : -1]
        return np.concatenate([left, f, right], axis=1)

    def d_beta(self) -> ScalarField:
        """Fourth-order centered beta-derivative using reflection ghosts."""
        g = self._ghosted()
        h = self.grid.h_beta
        values = (-g[:, 4:] + 8.0 * g[:, 3:-1] - 8.0 * g[:, 1:-3] + g[:, :-4]) / (12.0 * h)
        return ScalarField(self.grid, values, self.parity.flipped())

    def d_beta2(self) -> ScalarField:
        g = self._ghosted()
        h = self.grid.h_beta
        values = (
            -g[:, 4:] + 16.0 * g[:, 3:-1] - 30.0 * g[:, 2:-2] + 16.0 * g[:, 1:-3] - g[:, :-4]
        ) / (12.0 * h * h)
        return self.with_values(values)

    def r_dr(self) -> ScalarField:
        return self.with_values(radial_r_dr(self.values, self.grid))

    def r2_drr(self) -> ScalarField:
        return self.with_values(radial_r2_drr(self.values, self.grid))

    def d_R(self) -> ScalarField:
        return self.with_values(radial_d_R(self.values, self.grid))

    def d_s4(self) -> ScalarField:
        """Fourth derivative in the uniform radial variable (for hyperdiffusion)."""
        h = self.grid.h_radial
        return self.with_values(diff2(diff2(self.values, h), h))

    def d_s(self) -> ScalarField:
        return self.with_values(diff1(self.values, self.grid.h_radial))


@dataclass(frozen=True, eq=False)
class SplitField:
    """Sum of single-parity fields with pairwise distinct parities."""

    grid: Grid
    parts: tuple[ScalarField, ...]

    def __post_init__(self) -> None:
        parities = [p.parity for p in self.parts]
        if not parities:
            raise FieldError("a split field needs at least one part")
        if len(set(parities)) != len(parities):
            raise FieldError("split field parts must have distinct parities")
        for part in self.parts:
            _check_grid(self.grid, part.grid)

    def part(self, parity: Parity) -> ScalarField:
        """The component of the given parity (zero if absent)."""
        for p in self.parts:
            if p.parity is parity:
                return p
        return ScalarField.zeros(self.grid, parity)

    def _map(self, fn: Callable[[ScalarField], ScalarField]) -> AnyField:
        return combine(self.grid, [fn(p) for p in self.parts])

    def __add__(self, other: AnyField) -> AnyField:
        return combine(self.grid, [*self.parts, *other.parts])

    def __sub__(self, other: AnyField) -> AnyField:
        return combine(self.grid, [*self.parts, *(-other).parts])

    def __neg__(self) -> SplitField:
        return SplitField(self.grid, tuple(-p for p in self.parts))

    def __mul__(self, other: AnyField | RadialProfile | Scalar) -> AnyField:
        if isinstance(other, ScalarField | SplitField):
            return combine(self.grid, [a * b for a in self.parts for b in other.parts])
        return combine(self.grid, [p * other for p in self.parts])

    __rmul__ = __mul__

    def d_beta(self) -> AnyField:
        return self._map(ScalarField.d_beta)

    def d_beta2(self) -> AnyField:
        return self._map(ScalarField.d_beta2)

    def r_dr(self) -> AnyField:
        return self._map(ScalarField.r_dr)

    def r2_drr(self) -> AnyField:
        return self._map(ScalarField.r2_drr)

    def d_R(self) -> AnyField:
        return self._map(ScalarField.d_R)

    def d_s4(self) -> AnyField:
        return self._map(ScalarField.d_s4)

    def d_s(self) -> AnyField:
        return self._map(ScalarField.d_s)

    def quarter_values(self) -> FloatArray:
        """Sum of the parts on the stored quarter period."""
        return np.sum([p.values for p in self.parts], axis=0)


AnyField = ScalarField | SplitField


def combine(grid: Grid, fields: Iterable[ScalarField | AnyField]) -> AnyField:
    """Sum fields, merging parts of equal parity."""
    sums: dict[Parity, FloatArray] = {}
    for field in fields:
        for part in field.parts:
            _check_grid(grid, part.grid)
            if part.parity in sums:
                sums[part.parity] = sums[part.parity] + part.values
            else:
                sums[part.parity] = np.array(part.values)
    if not sums:
        raise FieldError("cannot combine an empty list of fields")
    parts = tuple(ScalarField(grid, v, parity) for parity, v in sums.items())
    if len(parts) == 1:
        return parts[0]
    return SplitField(grid, parts)


def as_split(f: AnyField) -> SplitField:
    if isinstance(f, SplitField):
        return f
    return SplitField(f.grid, (f,))


def sin_beta(grid: Grid) -> ScalarField:
    return RadialProfile(grid, np.ones(grid.nR)).times_sin(1)


def cos_beta(grid: Grid) -> ScalarField:
    return RadialProfile(grid, np.ones(grid.nR)).times_cos(1)


# module-level wrappers


def d_beta(f: AnyField) -> AnyField:
    return f.d_beta()


def r_dr(f: AnyField) -> AnyField:
    return f.r_dr()


@dataclass(frozen=True, eq=False)
class PrefactoredField:
    """The function R^{power/alpha} * base, with the power kept symbolic."""

    base: AnyField
    power: int

    @property
    def grid(self) -> Grid:
        return self.base.grid

    def evaluate(self) -> AnyField:
        """Multiply the prefactor in, guarding against exponent overflow."""
        if self.power == 0:
            return self.base
        grid = self.grid
        exponent = self.power * np.log(np.asarray(grid.R_nodes)) / grid.alpha
        parts = []
        for part in self.base.parts:
            live = np.any(part.values != 0.0, axis=1)
            if np.any(exponent[live] > EXP_GUARD):
                raise FieldError(
                    f"prefactor R^({self.power}/alpha) overflows on the support of the field"
                )
            factor = np.where(live, np.exp(np.minimum(exponent, EXP_GUARD)), 0.0)
            parts.append(part.with_values(part.values * factor[:, None]))
        return combine(grid, parts)


def cartesian_derivative(
    f: AnyField | PrefactoredField, which: Literal["x", "y"]
) -> AnyField | PrefactoredField:
    """Cartesian derivative of the function represented by ``f``, in (R, beta) variables.

    Uses d_x = R^{-1/alpha}(cos(beta) alpha R d_R - sin(beta) d_beta) and
    d_y = R^{-1/alpha}(sin(beta) alpha R d_R + cos(beta) d_beta). For f = R^{q/alpha} b the
    prefactor is differentiated exactly:

        d_x f = R^{(q-1)/alpha} [cos(beta)(q b + alpha R d_R b) - sin(beta) d_beta b],

    and the result is a plain field when q = 1.
    """
    if isinstance(f, PrefactoredField):
        base, q = f.base, f.power
    else:
        base, q = f, 0
    grid = base.grid
    radial = base * float(q) + base.r_dr() * grid.alpha if q else base.r_dr() * grid.alpha
    angular = base.d_beta()
    sin_b, cos_b = sin_beta(grid), cos_beta(grid)
    if which == "x":
        out = cos_b * radial - sin_b * angular
    elif which == "y":
        out = sin_b * radial + cos_b * angular
    else:
        raise FieldError(f"unknown direction {which!r}")
    if q - 1 == 0:
        return out
    return PrefactoredField(out, q - 1)
