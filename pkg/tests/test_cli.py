"""Tests for CLI commands and options."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import pytest
from typer.testing import CliRunner

from norm_inflation_lab.logger import debug_log_path, disable_file_logging, enable_file_logging
from norm_inflation_lab.main import app


runner = CliRunner()
logger = logging.getLogger(__name__)

SMALL_LOM2D = """\
experiment = "lom2d"
alpha = 1.0e-3
nR = 128
n_beta = 16
snapshots = 32
horizon_factor = 2.0
"""


@pytest.fixture
def small_config(temp_output_dir: Path) -> Path:
    path = temp_output_dir / "small.toml"
    path.write_text(SMALL_LOM2D, encoding="utf-8")
    return path


class TestCLIHelp:
    """Test the command listing and per-command help."""

    def test_app_help(self):
        result = runner.invoke(app, ["--help"])
        assert result.exit_code == 0
        for command in ("lom2d", "lom3d", "elliptic-check", "remainder2d", "convergence", "sweep"):
            assert command in result.output

    def test_lom2d_help(self):
        result = runner.invoke(app, ["lom2d", "--help"])
        assert result.exit_code == 0
        assert "--alpha" in result.output
        assert "--debug-corrupt-lom" in result.output

    def test_sweep_help(self):
        result = runner.invoke(app, ["sweep", "--help"])
        assert result.exit_code == 0
        assert "--alpha-list" in result.output
        assert "--workers" in result.output

    def test_convergence_help(self):
        result = runner.invoke(app, ["convergence", "--help"])
        assert result.exit_code == 0
        assert "--levels" in result.output


class TestCLIErrors:
    """Test exit codes for bad input."""

    def test_invalid_alpha(self, temp_output_dir: Path):
        """alpha = 0.5 exceeds delta^2 and is refused before anything runs."""
        result = runner.invoke(app, ["lom2d", "--alpha", "0.5"])
        assert result.exit_code == 2
        assert "config:" in result.output
        assert not (temp_output_dir / "results").exists()

    def test_missing_alpha(self, temp_output_dir: Path):
        result = runner.invoke(app, ["lom2d"])
        assert result.exit_code == 2
        assert "alpha" in result.output

    def test_bad_alpha_list(self, temp_output_dir: Path):
        result = runner.invoke(app, ["elliptic-check", "--alpha-list", "0.1,abc"])
        assert result.exit_code == 2

    def test_missing_config_file(self, temp_output_dir: Path):
        result = runner.invoke(app, ["lom2d", "--config", "absent.toml"])
        assert result.exit_code == 2


class TestCLIRuns:
    """Test small runs through the command line."""

    def test_lom2d_from_config(self, small_config: Path, temp_output_dir: Path):
        out = temp_output_dir / "run"
        result = runner.invoke(app, ["lom2d", "--config", str(small_config), "--out", str(out)])
        assert result.exit_code in (0, 1)
        assert (out / "lom2d_series.csv").exists()
        data = json.loads((out / "lom2d_report.json").read_text(encoding="utf-8"))
        assert data["pass"] is (result.exit_code == 0)
        assert "initial_slope" in result.output

    def test_corrupted_model_exits_one(self, small_config: Path, temp_output_dir: Path):
        out = temp_output_dir / "corrupt"
        result = runner.invoke(
            app,
            ["lom2d", "--config", str(small_config), "--out", str(out), "--debug-corrupt-lom"],
        )
        assert result.exit_code == 1
        data = json.loads((out / "lom2d_report.json").read_text(encoding="utf-8"))
        assert data["config"]["corrupt_lom"] == 1.5


class TestDebugLogging:
    """Test debug logging functionality."""

    def test_debug_flag_enables_logging(
        self,
        small_config: Path,
        temp_output_dir: Path,
        monkeypatch: pytest.MonkeyPatch,
        caplog: pytest.LogCaptureFixture,
    ):
        monkeypatch.setenv("XDG_CACHE_HOME", str(temp_output_dir / "cache"))
        try:
            result = runner.invoke(
                app, ["lom2d", "--config", str(small_config), "--out", "run", "--debug"]
            )
        finally:
            disable_file_logging()
        assert result.exit_code in (0, 1)
        assert "Debug logging enabled" in caplog.text
        assert (temp_output_dir / "cache" / "norm-inflation-lab" / "experiments.log").exists()


class TestDebugLogPath:
    """Test where the DEBUG file sink writes."""

    def test_follows_xdg_cache_home(self, temp_output_dir: Path, monkeypatch: pytest.MonkeyPatch):
        monkeypatch.setenv("XDG_CACHE_HOME", str(temp_output_dir))
        expected = temp_output_dir / "norm-inflation-lab" / "experiments.log"
        assert debug_log_path() == expected

    def test_enable_is_idempotent(self, temp_output_dir: Path, monkeypatch: pytest.MonkeyPatch):
        monkeypatch.setenv("XDG_CACHE_HOME", str(temp_output_dir))
        try:
            first = enable_file_logging()
            assert enable_file_logging() == first
            assert first.parent.is_dir()
        finally:
            disable_file_logging()
