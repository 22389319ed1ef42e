"""Experiment configuration: packaged defaults, TOML experiment files and validation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import toml
from dynaconf import Dynaconf

from .constants import ALPHA_MAX, DEFAULTS_FILE, MIN_NODES, MIN_SNAPSHOTS, ConfigError
from .grid import Grid, Spacing, build_grid
from .initial_data import Case3d, DataParams
from .logger import logger


settings = Dynaconf(
    envvar_prefix="NIL",
    settings_files=[str(DEFAULTS_FILE)],
    environments=False,
    merge_enabled=True,
)

EXPERIMENTS = ("lom2d", "lom3d", "elliptic-check", "remainder2d", "convergence", "sweep")
SWEEPABLE = ("lom2d", "lom3d", "remainder2d")

# file keys, matching the CLI
KNOWN_KEYS = frozenset(
    {
        "experiment",
        "alpha",
        "alpha_list",
        "delta",
        "k",
        "N",
        "nR",
        "n_beta",
        "R_max",
        "spacing",
        "t_end",
        "t_star",
        "snapshots",
        "horizon_factor",
        "case3d",
        "output_dir",
        "bracket_slack",
        "f_cap_multiplier",
        "corrupt_lom",
        "workers",
        "sweep_of",
        "kernel_resolution",
        "cfl",
        "hyperdiffusion",
        "levels",
    }
)
_CANONICAL = {key.lower(): key for key in KNOWN_KEYS}


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description with every default filled in."""

    experiment: str
    alpha: float | None = None
    alpha_list: tuple[float, ...] = ()
    delta: float = 0.1
    k: int = 3
    N: int = 3
    nR: int = 2048
    n_beta: int = 64
    R_max: float = 8.0
    spacing: str = Spacing.UNIFORM_R.value
    t_end: float | None = None
    t_star: bool = True
    snapshots: int = 512
    horizon_factor: float = 32.0
    case3d: str = Case3d.I.value
    output_dir: Path = field(default_factory=lambda: Path("results"))
    bracket_slack: float = 1e-3
    f_cap_multiplier: float = 1.0
    corrupt_lom: float = 1.0
    workers: int = 1
    sweep_of: str = "lom2d"
    kernel_resolution: int = 4096
    cfl: float = 0.5
    hyperdiffusion: float = 1.0
    levels: int = 3

    def data_params(self) -> DataParams:
        if self.alpha is None:
            raise ConfigError([f"{self.experiment} needs a single alpha"])
        case = Case3d(self.case3d) if self.experiment == "lom3d" else Case3d.NONE
        return DataParams(delta=self.delta, alpha=self.alpha, k=self.k, case3d=case)

    def grid(self, alpha: float | None = None) -> Grid:
        a = alpha if alpha is not None else self.alpha
        if a is None:
            raise ConfigError(["a grid needs alpha"])
        return build_grid(a, self.R_max, self.nR, self.n_beta, self.spacing)

    def children(self) -> list[ExperimentConfig]:
        """One config per alpha for a sweep; the config itself otherwise."""
        if self.experiment != "sweep":
            return [self]
        return [
            replace(
                self,
                experiment=self.sweep_of,
                alpha=a,
                alpha_list=(),
                output_dir=self.output_dir / f"alpha_{a:g}",
            )
            for a in self.alpha_list
        ]

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["output_dir"] = str(self.output_dir)
        out["alpha_list"] = list(self.alpha_list)
        return out


def _section(name: str) -> dict[str, Any]:
    """Defaults of one section with keys mapped back to their canonical spelling."""
    raw = settings.get(name.replace("-", "_")) or {}
    return {_CANONICAL.get(str(k).lower(), str(k)): v for k, v in dict(raw).items()}


def defaults_for(experiment: str, sweep_of: str | None = None) -> dict[str, Any]:
    """Shared defaults overlaid with the experiment's own section."""
    values = _section("shared")
    if experiment == "sweep":
        values |= _section("sweep")
        values |= _section(sweep_of or values.get("sweep_of", "lom2d"))
        values["experiment"] = "sweep"
        if sweep_of is not None:
            values["sweep_of"] = sweep_of
    else:
        values |= _section(experiment)
    return values


def _read_source(source: str | Path) -> dict[str, Any]:
    if isinstance(source, Path):
        try:
            text = source.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError([f"cannot read config {source}: {e}"]) from e
    else:
        text = source
    try:
        return dict(toml.loads(text))
    except toml.TomlDecodeError as e:
        raise ConfigError([f"malformed config: {e}"]) from e


def _coerce(values: dict[str, Any], problems: list[str]) -> dict[str, Any]:
    """Types of the dataclass fields; unconvertible values become problems."""
    kinds = {
        "alpha": float,
        "delta": float,
        "R_max": float,
        "t_end": float,
        "horizon_factor": float,
        "bracket_slack": float,
        "f_cap_multiplier": float,
        "corrupt_lom": float,
        "cfl": float,
        "hyperdiffusion": float,
        "k": int,
        "N": int,
        "nR": int,
        "n_beta": int,
        "snapshots": int,
        "workers": int,
        "kernel_resolution": int,
        "levels": int,
        "t_star": bool,
        "experiment": str,
        "spacing": str,
        "case3d": str,
        "sweep_of": str,
    }
    out = dict(values)
    for key, kind in kinds.items():
        if key not in out or out[key] is None:
            continue
        try:
            out[key] = kind(out[key])
        except (TypeError, ValueError):
            problems.append(f"{key}={out[key]!r} is not a valid {kind.__name__}")
            del out[key]
    if "alpha_list" in out:
        try:
            out["alpha_list"] = tuple(float(a) for a in out["alpha_list"])
        except (TypeError, ValueError):
            problems.append(f"alpha_list={out['alpha_list']!r} is not a list of numbers")
            out["alpha_list"] = ()
    if "output_dir" in out:
        out["output_dir"] = Path(out["output_dir"])
    return out


def _check_alpha(alpha: float, delta: float, needs_loglog: bool, problems: list[str]) -> None:
    if alpha > delta**2:
        problems.append("alpha <= delta^2 violated")
    if not 0.0 < alpha <= ALPHA_MAX:
        problems.append(f"alpha={alpha} outside (0, {ALPHA_MAX}]")
        return
    if needs_loglog and not abs(np.log(alpha)) > np.e:
        problems.append(f"alpha={alpha} needs |log alpha| > e for |log|log alpha|| > 1")


def validate(cfg: ExperimentConfig) -> list[str]:
    """Every violated invariant of ``cfg``, in a stable order."""
    problems: list[str] = []
    if cfg.experiment not in EXPERIMENTS:
        problems.append(f"unknown experiment {cfg.experiment!r}; expected one of {EXPERIMENTS}")
    if cfg.experiment == "sweep" and cfg.sweep_of not in SWEEPABLE:
        problems.append(f"sweep_of={cfg.sweep_of!r} must be one of {SWEEPABLE}")
    if not 0.0 < cfg.delta < 1.0:
        problems.append(f"delta={cfg.delta} outside (0, 1)")

    target = cfg.sweep_of if cfg.experiment == "sweep" else cfg.experiment
    needs_loglog = target != "elliptic-check"
    if cfg.experiment in ("sweep", "elliptic-check"):
        if not cfg.alpha_list:
            problems.append(f"{cfg.experiment} needs a non-empty alpha_list")
        for a in cfg.alpha_list:
            if cfg.experiment == "elliptic-check":
                if not 0.0 < a <= ALPHA_MAX:
                    problems.append(f"alpha={a} outside (0, {ALPHA_MAX}]")
            else:
                _check_alpha(a, cfg.delta, needs_loglog, problems)
    elif cfg.alpha is None:
        problems.append(f"{cfg.experiment} needs alpha")
    else:
        _check_alpha(cfg.alpha, cfg.delta, needs_loglog, problems)

    if cfg.snapshots < MIN_SNAPSHOTS:
        problems.append(f"snapshots={cfg.snapshots} below {MIN_SNAPSHOTS}")
    if cfg.nR < MIN_NODES or cfg.n_beta < MIN_NODES:
        problems.append(f"grid ({cfg.nR}, {cfg.n_beta}) below {MIN_NODES} nodes")
    if not cfg.R_max > 1.0:
        problems.append(f"R_max={cfg.R_max} must exceed 1")
    if cfg.spacing not in {s.value for s in Spacing}:
        problems.append(f"spacing={cfg.spacing!r} must be uniform-R or log-R")
    for name in ("bracket_slack", "f_cap_multiplier", "horizon_factor", "cfl", "corrupt_lom"):
        if not getattr(cfg, name) > 0.0:
            problems.append(f"{name}={getattr(cfg, name)} must be positive")
    if cfg.hyperdiffusion < 0.0:
        problems.append(f"hyperdiffusion={cfg.hyperdiffusion} must be nonnegative")
    if cfg.t_end is not None and not cfg.t_end > 0.0:
        problems.append(f"t_end={cfg.t_end} must be positive")
    if target == "remainder2d" and cfg.N not in (3, 4):
        problems.append(f"N={cfg.N} must be 3 or 4")
    if target == "lom3d":
        if cfg.case3d not in (Case3d.I.value, Case3d.II.value):
            problems.append(f"case3d={cfg.case3d!r} must be i or ii")
        if cfg.k < 4:
            problems.append(f"k={cfg.k} below 4 for 3d data")
    elif cfg.k < 3:
        problems.append(f"k={cfg.k} below 3")
    if cfg.experiment == "convergence":
        if cfg.levels < 3:
            problems.append(f"levels={cfg.levels} below 3")
        if cfg.spacing != Spacing.UNIFORM_R.value:
            problems.append("convergence needs spacing uniform-R")
    if cfg.workers < 1:
        problems.append(f"workers={cfg.workers} must be at least 1")
    if cfg.kernel_resolution < 256:
        problems.append(f"kernel_resolution={cfg.kernel_resolution} below 256")
    return problems


def parse_config(
    source: str | Path | None = None, overrides: dict[str, Any] | None = None
) -> ExperimentConfig:
    """Read, default and validate an experiment configuration.

    Args:
    ----
        source: Path of a TOML file, or TOML text. None means an empty document.
        overrides: Values that win over the file, e.g. from the command line. None values
            are ignored.

    Returns:
    -------
        The validated configuration.

    Raises:
    ------
        ConfigError: Listing unknown keys and every violated invariant.

    """
    document = _read_source(source) if source is not None else {}
    given = {**document, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    problems = [f"unknown key {key!r}" for key in sorted(given) if key not in KNOWN_KEYS]
    given = {k: v for k, v in given.items() if k in KNOWN_KEYS}
    if "experiment" not in given:
        raise ConfigError([*problems, "missing key 'experiment'"])

    experiment = str(given["experiment"])
    base = defaults_for(experiment, given.get("sweep_of"))
    merged = _coerce({**base, **given}, problems)
    merged = {k: v for k, v in merged.items() if k in KNOWN_KEYS}
    if "t_end" in given:
        merged["t_star"] = bool(given.get("t_star", False))
    try:
        cfg = ExperimentConfig(**merged)
    except TypeError as e:
        raise ConfigError([*problems, str(e)]) from e
    problems += validate(cfg)
    if problems:
        logger.debug(f"config rejected: {problems}")
        raise ConfigError(problems)
    logger.debug(f"config accepted: {cfg.experiment}, alpha={cfg.alpha}")
    return cfg
