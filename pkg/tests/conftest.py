"""Pytest configuration and fixtures for norm-inflation-lab."""

import logging
import os
import tempfile
from collections.abc import Generator
from pathlib import Path

import pytest
from loguru import logger

from norm_inflation_lab.grid import Grid, build_grid
from norm_inflation_lab.initial_data import DataParams


class PropagateHandler(logging.Handler):
    """A handler that routes Loguru messages to Python's standard logging."""

    def emit(self, record):
        """Route Loguru messages to Python's standard logging."""
        logging.getLogger(record.name).handle(record)


# hook into pytest to propagate Loguru logs to Python's logging so that caplog can capture them
@pytest.fixture(scope="session", autouse=True)
def _setup_loguru_to_python_logging():
    """Propagate Loguru logs to Python's logging so that caplog can capture them."""
    logger.remove()
    logger.add(PropagateHandler(), level="DEBUG")
    logging.basicConfig(level=logging.DEBUG)

    yield

    logger.remove()


@pytest.fixture
def temp_output_dir() -> Generator[Path, None, None]:
    """Create a temporary working directory for experiment outputs.

    Yields
    ------
        Path: Path to the temporary directory, also the current directory

    """
    with tempfile.TemporaryDirectory() as tmpdir:
        original_cwd = os.getcwd()
        os.chdir(tmpdir)
        yield Path(tmpdir)
        os.chdir(original_cwd)


@pytest.fixture
def uniform_grid() -> Grid:
    """Small uniform-R grid at alpha = 1e-3."""
    return build_grid(1e-3, 8.0, 256, 17, "uniform-R")


@pytest.fixture
def log_grid() -> Grid:
    """Small log-R grid at alpha = 1e-2."""
    return build_grid(1e-2, 8.0, 256, 33, "log-R")


@pytest.fixture
def params_2d() -> DataParams:
    """2d data parameters in the admissible range."""
    return DataParams(delta=0.1, alpha=1e-3, k=3)
