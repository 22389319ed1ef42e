"""Tests for experiment orchestration and the result files."""

import csv
import json
from pathlib import Path

import pytest
import yaml

from norm_inflation_lab.config import ExperimentConfig, parse_config
from norm_inflation_lab.report import VerificationReport
from norm_inflation_lab.runner import (
    CONVERGENCE_COLUMNS,
    ELLIPTIC_COLUMNS,
    EXIT_ERROR,
    EXIT_FAILED,
    LOM_COLUMNS,
    SUMMARY_COLUMNS,
    _format,
    _trend_flags,
    run,
    write_report,
    write_series,
)


def _lom2d(out: Path, **extra) -> ExperimentConfig:
    values = {
        "experiment": "lom2d",
        "alpha": 1e-3,
        "nR": 128,
        "n_beta": 16,
        "snapshots": 32,
        "horizon_factor": 2.0,
        "output_dir": str(out),
    }
    return parse_config(None, {**values, **extra})


def _read_csv(path: Path) -> list[list[str]]:
    with path.open(encoding="utf-8", newline="") as handle:
        return list(csv.reader(handle))


class TestWriters:
    """Test the CSV and JSON writers."""

    def test_format(self):
        assert _format(None) == ""
        assert _format(True) == "true"
        assert _format(0.1) == "0.10000000000000001"
        assert _format(3) == "3"

    def test_header_only(self, tmp_path: Path):
        path = write_series([], tmp_path / "empty.csv", ("t", "F"))
        assert path.read_text(encoding="utf-8") == "t,F\n"

    def test_missing_values_are_empty(self, tmp_path: Path):
        path = write_series([{"t": 0.5}], tmp_path / "rows.csv", ("t", "F"))
        assert _read_csv(path) == [["t", "F"], ["0.5", ""]]

    def test_report_is_strict_json(self, tmp_path: Path):
        report = VerificationReport("lom2d").extend([], bad=float("inf"))
        path = write_report(report, tmp_path / "nested" / "report.json")
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["diagnostics"]["bad"] is None
        assert list(data) == sorted(data)


class TestTrendFlags:
    """Test the per-row sweep trend flags."""

    def test_flags(self):
        rows = [
            {"eta_ratio_at_t_star": 1.2, "F_t_star_over_sqrt_alpha": 0.5},
            {"eta_ratio_at_t_star": 1.5, "F_t_star_over_sqrt_alpha": 0.4},
            {"eta_ratio_at_t_star": 1.4, "F_t_star_over_sqrt_alpha": None},
        ]
        flagged = _trend_flags(rows)
        assert flagged[0]["eta_ratio_increasing"] is None
        assert flagged[1]["eta_ratio_increasing"] is True
        assert flagged[1]["F_trend_ok"] is True
        assert flagged[2]["eta_ratio_increasing"] is False
        assert flagged[2]["F_trend_ok"] is None


class TestSingleRuns:
    """Test single experiment runs end to end on small grids."""

    def test_lom2d_artifacts(self, tmp_path: Path):
        result = run(_lom2d(tmp_path))
        assert result.series_path == tmp_path / "lom2d_series.csv"
        table = _read_csv(result.series_path)
        assert tuple(table[0]) == LOM_COLUMNS
        assert len(table) == len(result.rows) + 1
        assert len(result.rows) >= 32
        data = json.loads(result.report_path.read_text(encoding="utf-8"))
        assert data["experiment"] == "lom2d"
        assert data["config"]["alpha"] == 1e-3
        assert data["pass"] is (result.exit_code == 0)

    def test_standard_lom2d_passes(self, tmp_path: Path):
        """The default lom2d run at alpha = 1e-3, delta = 0.1 exits with code 0."""
        cfg = parse_config(
            None,
            {"experiment": "lom2d", "alpha": 1e-3, "delta": 0.1, "output_dir": str(tmp_path)},
        )
        assert cfg.nR == 2048
        result = run(cfg)
        assert result.exit_code == 0, [c.name for c in result.report.failed_checks]

    def test_series_is_deterministic(self, tmp_path: Path):
        first = run(_lom2d(tmp_path / "a"))
        second = run(_lom2d(tmp_path / "b"))
        assert first.series_path.read_bytes() == second.series_path.read_bytes()

    def test_corrupted_model_fails(self, tmp_path: Path):
        result = run(_lom2d(tmp_path, corrupt_lom=1.5))
        assert result.exit_code == EXIT_FAILED
        assert not result.report.passed

    def test_error_still_writes_report(self, tmp_path: Path):
        """With R_max = 4 the data reach R_max/2 and the run stops with exit code 2."""
        result = run(_lom2d(tmp_path, R_max=4.0))
        assert result.exit_code == EXIT_ERROR
        assert result.series_path.read_text(encoding="utf-8") == ",".join(LOM_COLUMNS) + "\n"
        data = json.loads(result.report_path.read_text(encoding="utf-8"))
        assert data["error"].startswith("TruncationError")
        assert data["pass"] is False

    def test_elliptic_rows(self, tmp_path: Path):
        cfg = parse_config(
            None,
            {
                "experiment": "elliptic-check",
                "alpha_list": [1e-2, 1e-1],
                "nR": 256,
                "n_beta": 17,
                "output_dir": str(tmp_path),
            },
        )
        result = run(cfg)
        table = _read_csv(result.series_path)
        assert tuple(table[0]) == ELLIPTIC_COLUMNS
        assert [row["alpha"] for row in result.rows] == [1e-1, 1e-2]
        assert all(row["hardy"] is not None for row in result.rows)


class TestSweep:
    """Test a sequential sweep."""

    @pytest.fixture
    def result(self, tmp_path: Path):
        cfg = parse_config(
            None,
            {
                "experiment": "sweep",
                "sweep_of": "lom2d",
                "alpha_list": [1e-4, 1e-3],
                "nR": 128,
                "n_beta": 16,
                "snapshots": 32,
                "horizon_factor": 2.0,
                "output_dir": str(tmp_path),
            },
        )
        return run(cfg)

    def test_summary(self, result, tmp_path: Path):
        table = _read_csv(tmp_path / "sweep_summary.csv")
        assert tuple(table[0]) == SUMMARY_COLUMNS
        assert [row["alpha"] for row in result.rows] == [1e-3, 1e-4]
        assert result.rows[1]["eta_ratio_increasing"] in (True, False)

    def test_children_on_disk(self, result, tmp_path: Path):
        for alpha in ("0.001", "0.0001"):
            child = tmp_path / f"alpha_{alpha}"
            assert (child / "lom2d_series.csv").exists()
            assert (child / "lom2d_report.json").exists()
            config = yaml.safe_load((child / "config.yaml").read_text(encoding="utf-8"))
            assert config["experiment"] == "lom2d"
            assert config["alpha"] == float(alpha)

    def test_report(self, result, tmp_path: Path):
        data = json.loads((tmp_path / "sweep_report.json").read_text(encoding="utf-8"))
        names = [c["name"] for c in data["checks"]]
        assert names == ["children_passed", "eta_ratio_trend"]
        assert data["diagnostics"]["children"] == 2


class TestConvergence:
    """Test the refinement experiment with its packaged defaults."""

    @pytest.fixture(scope="class")
    def result(self, tmp_path_factory: pytest.TempPathFactory):
        out = tmp_path_factory.mktemp("convergence")
        values = {"experiment": "convergence", "alpha": 1e-3, "output_dir": str(out)}
        return run(parse_config(None, values))

    def test_passes(self, result):
        assert result.exit_code == 0, [c.name for c in result.report.failed_checks]
        names = [c.name for c in result.report.checks]
        assert names == ["loop_residual_reference", "loop_residual_halves", "I_observed_order"]
        assert result.report.diagnostics["observed_order_min"] >= 1.8

    def test_series(self, result):
        table = _read_csv(result.series_path)
        assert tuple(table[0]) == CONVERGENCE_COLUMNS
        assert [row[1] for row in table[1:]] == ["256", "512", "1024"]
        assert table[-1][CONVERGENCE_COLUMNS.index("I_change")] == ""
