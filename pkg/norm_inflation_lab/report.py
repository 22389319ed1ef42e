"""Verification reports: named inequality checks with margins."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any


Diagnostic = float | int | str | bool | None


def _finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None


@dataclass(frozen=True)
class Check:
    """One inequality lhs <= rhs (or lhs >= rhs), evaluated.

    ``margin`` is the signed relative distance to the bound; it is negative exactly when the
    inequality fails before slack is applied.
    """

    name: str
    inequality: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    anchor: str

    @classmethod
    def le(
        cls, name: str, lhs: float, rhs: float, anchor: str, slack: float = 0.0, text: str = ""
    ) -> Check:
        """lhs <= rhs (1 + slack)."""
        scale = max(abs(rhs), abs(lhs), 1e-300)
        margin = (rhs - lhs) / scale
        passed = bool(lhs <= rhs + slack * abs(rhs))
        return cls(name, text or f"{name}: lhs <= rhs", lhs, rhs, margin, passed, anchor)

    @classmethod
    def ge(
        cls, name: str, lhs: float, rhs: float, anchor: str, slack: float = 0.0, text: str = ""
    ) -> Check:
        """lhs >= rhs (1 - slack)."""
        scale = max(abs(rhs), abs(lhs), 1e-300)
        margin = (lhs - rhs) / scale
        passed = bool(lhs >= rhs - slack * abs(rhs))
        return cls(name, text or f"{name}: lhs >= rhs", lhs, rhs, margin, passed, anchor)

    @classmethod
    def flag(cls, name: str, ok: bool, anchor: str, text: str = "") -> Check:
        """A boolean property, reported as 1 >= 1 or 0 >= 1."""
        value = 1.0 if ok else 0.0
        return cls(name, text or name, value, 1.0, value - 1.0, bool(ok), anchor)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "inequality": self.inequality,
            "lhs": _finite_or_none(self.lhs),
            "rhs": _finite_or_none(self.rhs),
            "margin": _finite_or_none(self.margin),
            "pass": self.passed,
            "anchor": self.anchor,
        }


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one experiment: checks, config echo, diagnostics, runtime."""

    experiment: str
    config: dict[str, Any] = field(default_factory=dict)
    checks: tuple[Check, ...] = ()
    diagnostics: dict[str, Diagnostic] = field(default_factory=dict)
    runtime_seconds: float = 0.0
    error: str | None = None

    @property
    def passed(self) -> bool:
        """Overall pass: no error and every check passed."""
        return self.error is None and all(c.passed for c in self.checks)

    @property
    def failed_checks(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def extend(self, checks: list[Check], **diagnostics: Diagnostic) -> VerificationReport:
        return replace(
            self,
            checks=self.checks + tuple(checks),
            diagnostics={**self.diagnostics, **diagnostics},
        )

    def with_runtime(self, seconds: float) -> VerificationReport:
        return replace(self, runtime_seconds=seconds)

    def with_error(self, message: str) -> VerificationReport:
        return replace(self, error=message)

    def with_config(self, config: dict[str, Any]) -> VerificationReport:
        return replace(self, config=config)

    def to_dict(self) -> dict[str, Any]:
        diagnostics = {
            k: (_finite_or_none(v) if isinstance(v, float) else v)
            for k, v in self.diagnostics.items()
        }
        return {
            "experiment": self.experiment,
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
            "diagnostics": diagnostics,
            "pass": self.passed,
            "runtime_seconds": self.runtime_seconds,
            "error": self.error,
        }


def worst(checks: list[Check], name: str, anchor: str, text: str = "") -> Check:
    """Collapse a family of per-time checks into the one with the smallest margin."""
    if not checks:
        return Check.flag(name, True, anchor, text or f"{name}: no samples")
    failing = [c for c in checks if not c.passed]
    pick = min(failing or checks, key=lambda c: c.margin)
    return replace(pick, name=name, inequality=text or pick.inequality, anchor=anchor)
