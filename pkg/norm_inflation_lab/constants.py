"""Constants module for norm_inflation_lab."""

from __future__ import annotations

from pathlib import Path


class LabError(Exception):
    """Base class for every error raised by the lab."""

    pass


class GridError(LabError):
    """Raised when a grid precondition is violated."""

    pass


class FieldError(LabError):
    """Raised on shape, parity or finiteness violations of a field."""

    pass


class NormError(LabError):
    """Raised when a norm cannot be evaluated (order too high, nonintegrable weight)."""

    pass


class TruncationError(LabError):
    """Raised when a profile reaches the uncertified part of the radial domain."""

    pass


class IntegrationError(LabError):
    """Raised when a time integration or quadrature cannot be completed."""

    pass


class CFLError(IntegrationError):
    """Raised when a requested time step exceeds the stability limit."""

    def __init__(self, dt: float, dt_max: float) -> None:
        """Record the offending and the suggested step."""
        self.dt = dt
        self.dt_max = dt_max
        super().__init__(f"time step {dt:.6g} exceeds the CFL limit; use dt <= {dt_max:.6g}")


class EllipticError(LabError):
    """Raised when an elliptic solve fails."""

    def __init__(self, message: str, mode: int | None = None) -> None:
        """Record the failing mode index, if any."""
        self.mode = mode
        if mode is not None:
            message = f"{message} (mode {mode})"
        super().__init__(message)


class ConfigError(LabError):
    """Raised when an experiment configuration is invalid.

    All violations found during validation are collected in ``problems``.
    """

    def __init__(self, problems: list[str]) -> None:
        """Join every violated invariant into the message."""
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# Base paths
PACKAGE_ROOT = Path(__file__).parent
DEFAULTS_FILE = PACKAGE_ROOT / "experiment_defaults.yaml"

# Numerics
ALPHA_MAX = 0.25
MIN_NODES = 8
MAX_STENCIL_ORDER = 6
EXP_GUARD = 700.0
BLOWUP_LIMIT = 1e12
WEIGHT_LIMIT = 1e12
MIN_SNAPSHOTS = 32

# Implementation constant in the size of the initial data
C_IMPL = 1.0

# Sharp bounds e^{-x} <= 4h(x) <= 4 e^{-x} of the 2d kernel
C1 = 1.0
C2 = 4.0

# The 3d support-shift scale: eps = |log|log a||^{-1/4} / SUPPORT_SCALE_3D
SUPPORT_SCALE_3D = 112.0
