"""Experiment orchestration: run one configured experiment and persist its artifacts.

Every run writes ``<experiment>_series.csv`` and ``<experiment>_report.json`` into the
configured output directory. A sweep runs one child experiment per alpha in its own
``alpha_<a>`` subdirectory and adds ``sweep_summary.csv`` plus ``sweep_report.json``.
"""

from __future__ import annotations

import csv
import json
import math
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .config import ExperimentConfig
from .constants import LabError
from .elliptic import verify_elliptic_estimates
from .full2d import run_remainder_experiment
from .initial_data import (
    elliptic_test_vorticity,
    make_data_3d,
    make_eta0_2d,
    make_g0_2d,
    size_constants,
)
from .logger import logger
from .lom2d import check_growth_bounds, evolve_I, record_norms, refinement_study, t_star
from .lom3d import build_kernel, check_growth_bounds_3d, evolve_J, evolve_support, record_norms_3d
from .report import Check, VerificationReport

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_ERROR = 2

LOM_COLUMNS = (
    "t",
    "I_max",
    "eta_linf",
    "xi_linf",
    "g_linf",
    "omega_app_HN",
    "bracket_lower_margin",
    "bracket_upper_margin",
)
LOM3D_COLUMNS = (*LOM_COLUMNS, "S_alpha")
REMAINDER_COLUMNS = ("t", "F", "omega_r_HN", "eta_r_HN", "xi_r_HN", "sqrt_alpha_cap")
ELLIPTIC_COLUMNS = ("alpha", "err_bb", "err_Rb", "psi2_bb", "psi2_RR", "hardy")
CONVERGENCE_COLUMNS = (
    "level",
    "nR",
    "snapshots",
    "h",
    "dt",
    "loop_residual",
    "I_change",
    "observed_order",
)
SUMMARY_COLUMNS = (
    "alpha",
    "passed",
    "exit_code",
    "eta_ratio_at_t_star",
    "t_inflate_over_t_star",
    "F_t_star_over_sqrt_alpha",
    "eta_ratio_increasing",
    "F_trend_ok",
)

ANCHOR_SWEEP = 'thm. main, "such that, for any"'
ANCHOR_ETA_TREND = 'sec. last, "We can then use Proposition"'
ANCHOR_F_TREND = 'eq. (boot), "We recall that the initial condition satisfies"'

Row = dict[str, Any]
Runner = Callable[[ExperimentConfig], tuple[list[Row], VerificationReport]]


@dataclass(frozen=True)
class RunResult:
    """What one run left on disk, and how it ended."""

    report: VerificationReport
    rows: list[Row]
    series_path: Path
    report_path: Path

    @property
    def exit_code(self) -> int:
        if self.report.error is not None:
            return EXIT_ERROR
        return EXIT_PASSED if self.report.passed else EXIT_FAILED


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float | np.floating):
        return format(float(value), ".17g")
    return str(value)


def write_series(rows: Sequence[Row], path: Path, columns: Sequence[str]) -> Path:
    """Write rows as RFC-4180 CSV with a fixed header; floats keep 17 significant digits."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(row.get(column)) for column in columns])
    logger.debug(f"wrote {len(rows)} rows to {path}")
    return path


def write_report(report: VerificationReport, path: Path) -> Path:
    """Write the report as UTF-8 JSON with sorted keys."""
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    logger.debug(f"wrote report to {path}")
    return path


def _lom_times(cfg: ExperimentConfig, ts: float) -> np.ndarray:
    """Equally spaced snapshots on the horizon, with t_star itself always included."""
    horizon = cfg.horizon_factor * ts if cfg.t_star or cfg.t_end is None else cfg.t_end
    times = np.linspace(0.0, horizon, cfg.snapshots)
    if ts <= horizon:
        times = np.union1d(times, [ts])
    return times


def _run_lom2d(cfg: ExperimentConfig) -> tuple[list[Row], VerificationReport]:
    p = cfg.data_params()
    grid = cfg.grid()
    consts = size_constants(p)
    times = _lom_times(cfg, t_star(p.alpha, consts.C_k1))
    traj = evolve_I(make_g0_2d(p, grid), p.alpha, times, make_eta0_2d(p, grid))
    if cfg.corrupt_lom != 1.0:
        logger.warning(f"LOM deliberately corrupted by factor {cfg.corrupt_lom}")
        traj = traj.scaled(cfg.corrupt_lom)
    traj = record_norms(traj, cfg.k)
    report = check_growth_bounds(traj, consts, slack=cfg.bracket_slack)
    return traj.series_rows(), report


def _run_lom3d(cfg: ExperimentConfig) -> tuple[list[Row], VerificationReport]:
    p = cfg.data_params()
    grid = cfg.grid()
    consts = size_constants(p)
    g0, eta_bar, meta = make_data_3d(p, grid)
    times = _lom_times(cfg, t_star(p.alpha, consts.C_k1))
    kernel = build_kernel(cfg.kernel_resolution, p.case3d)
    traj = evolve_J(g0, p.alpha, times, p.case3d, eta_bar, kernel)
    if cfg.corrupt_lom != 1.0:
        logger.warning(f"LOM deliberately corrupted by factor {cfg.corrupt_lom}")
        traj = traj.scaled(cfg.corrupt_lom)
    traj = record_norms_3d(traj, cfg.k)
    traj = traj.with_support(evolve_support(traj, meta.S0_alpha))
    report = check_growth_bounds_3d(traj, consts, meta, slack=cfg.bracket_slack)
    return traj.series_rows(), report


def _run_elliptic(cfg: ExperimentConfig) -> tuple[list[Row], VerificationReport]:
    ladder = sorted(cfg.alpha_list, reverse=True)
    omega = elliptic_test_vorticity(cfg.grid(ladder[0]))
    report = verify_elliptic_estimates(omega, ladder)
    rows = [
        {"alpha": a, **{c: report.diagnostics.get(f"{c}@{a:g}") for c in ELLIPTIC_COLUMNS[1:]}}
        for a in ladder
    ]
    return rows, report


def _run_remainder(cfg: ExperimentConfig) -> tuple[list[Row], VerificationReport]:
    p = cfg.data_params()
    series, report = run_remainder_experiment(
        p,
        cfg.N,
        None if cfg.t_star else cfg.t_end,
        cfg.grid(),
        snapshots=cfg.snapshots,
        cfl=cfg.cfl,
        kappa=cfg.hyperdiffusion,
        corrupt_lom=cfg.corrupt_lom,
        f_cap_multiplier=cfg.f_cap_multiplier,
    )
    return series.rows(), report


def _run_convergence(cfg: ExperimentConfig) -> tuple[list[Row], VerificationReport]:
    return refinement_study(
        cfg.data_params(),
        cfg.grid(),
        cfg.snapshots,
        horizon_factor=cfg.horizon_factor,
        levels=cfg.levels,
    )


RUNNERS: dict[str, tuple[Runner, tuple[str, ...]]] = {
    "lom2d": (_run_lom2d, LOM_COLUMNS),
    "lom3d": (_run_lom3d, LOM3D_COLUMNS),
    "elliptic-check": (_run_elliptic, ELLIPTIC_COLUMNS),
    "remainder2d": (_run_remainder, REMAINDER_COLUMNS),
    "convergence": (_run_convergence, CONVERGENCE_COLUMNS),
}


def run_single(cfg: ExperimentConfig) -> RunResult:
    """Run one non-sweep experiment and write its series and report.

    A LabError raised by a module is logged and recorded in the report; the series written
    is then header-only.
    """
    runner, columns = RUNNERS[cfg.experiment]
    started = time.perf_counter()
    logger.info(f"running {cfg.experiment} into {cfg.output_dir}")
    try:
        rows, report = runner(cfg)
    except LabError as e:
        logger.error(f"{cfg.experiment} failed: {type(e).__name__}: {e}")
        rows = []
        report = VerificationReport(cfg.experiment).with_error(f"{type(e).__name__}: {e}")
    report = report.with_config(cfg.to_dict()).with_runtime(time.perf_counter() - started)

    series_path = write_series(rows, cfg.output_dir / f"{cfg.experiment}_series.csv", columns)
    report_path = write_report(report, cfg.output_dir / f"{cfg.experiment}_report.json")
    result = RunResult(report, rows, series_path, report_path)
    logger.info(f"{cfg.experiment} finished with exit code {result.exit_code}")
    return result


def _child(cfg: ExperimentConfig) -> Row:
    """Worker body of a sweep: run one alpha and return its summary row."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "config.yaml").write_text(
        yaml.safe_dump(cfg.to_dict(), sort_keys=True), encoding="utf-8"
    )
    result = run_single(cfg)
    diagnostics = result.report.diagnostics
    return {
        "alpha": cfg.alpha,
        "passed": result.report.passed,
        "exit_code": result.exit_code,
        "eta_ratio_at_t_star": diagnostics.get("eta_ratio_at_t_star"),
        "t_inflate_over_t_star": diagnostics.get("t_inflate_over_t_star"),
        "F_t_star_over_sqrt_alpha": diagnostics.get("F_t_star_over_sqrt_alpha"),
    }


def _is_number(value: Any) -> bool:
    return isinstance(value, int | float) and not isinstance(value, bool) and math.isfinite(value)


def _trend_flags(rows: list[Row]) -> list[Row]:
    """Compare each row with the next larger alpha; rows are ordered by decreasing alpha."""
    out = []
    for index, row in enumerate(rows):
        flags: Row = {"eta_ratio_increasing": None, "F_trend_ok": None}
        if index > 0:
            prev = rows[index - 1]
            a, b = prev["eta_ratio_at_t_star"], row["eta_ratio_at_t_star"]
            if _is_number(a) and _is_number(b):
                flags["eta_ratio_increasing"] = b > a
            a, b = prev["F_t_star_over_sqrt_alpha"], row["F_t_star_over_sqrt_alpha"]
            if _is_number(a) and _is_number(b):
                flags["F_trend_ok"] = b <= a * (1.0 + 1e-9)
        out.append({**row, **flags})
    return out


def sweep(cfg: ExperimentConfig) -> RunResult:
    """Run the child experiments of a sweep, in parallel when ``workers > 1``."""
    started = time.perf_counter()
    children = sorted(cfg.children(), key=lambda c: -(c.alpha or 0.0))
    logger.info(
        f"sweep of {cfg.sweep_of} over {len(children)} alphas with {cfg.workers} worker(s)"
    )
    if cfg.workers > 1 and len(children) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_child, children))
    else:
        rows = [_child(child) for child in children]
    rows = _trend_flags(rows)

    checks = [
        Check.flag(
            "children_passed",
            all(row["passed"] for row in rows),
            ANCHOR_SWEEP,
            "every child report passes",
        )
    ]
    if cfg.sweep_of == "lom2d":
        flags = [row["eta_ratio_increasing"] for row in rows[1:]]
        checks.append(
            Check.flag(
                "eta_ratio_trend",
                all(flag is True for flag in flags),
                ANCHOR_ETA_TREND,
                "|eta_app(t_star)|/|eta0| increases along the ladder",
            )
        )
    if cfg.sweep_of == "remainder2d":
        flags = [row["F_trend_ok"] for row in rows[1:]]
        checks.append(
            Check.flag(
                "F_trend",
                all(flag is True for flag in flags),
                ANCHOR_F_TREND,
                "F(t_star)/sqrt(alpha) non-increasing as alpha decreases",
            )
        )
    failed = [row["alpha"] for row in rows if row["exit_code"] == EXIT_ERROR]
    report = VerificationReport("sweep").extend(
        checks, children=len(rows), children_with_errors=len(failed)
    )
    if failed:
        report = report.with_error(f"child runs raised errors at alpha={failed}")
    report = report.with_config(cfg.to_dict()).with_runtime(time.perf_counter() - started)

    series_path = write_series(rows, cfg.output_dir / "sweep_summary.csv", SUMMARY_COLUMNS)
    report_path = write_report(report, cfg.output_dir / "sweep_report.json")
    return RunResult(report, rows, series_path, report_path)


def run(cfg: ExperimentConfig) -> RunResult:
    """Run ``cfg`` and write its artifacts; ``exit_code`` of the result is the CLI status."""
    if cfg.experiment == "sweep":
        return sweep(cfg)
    return run_single(cfg)
