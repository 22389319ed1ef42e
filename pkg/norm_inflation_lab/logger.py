"""Loguru sinks for experiment runs: a colored stdout sink and an optional DEBUG file."""

import os
import sys
from pathlib import Path

from loguru import logger


LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)

logger.remove()
logger.add(sys.stdout, colorize=True, format=LOG_FORMAT, level="INFO")

_file_sink: int | None = None


def debug_log_path() -> Path:
    """experiments.log under $XDG_CACHE_HOME (or ~/.cache)/norm-inflation-lab."""
    root = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(root) / "norm-inflation-lab" / "experiments.log"


def enable_file_logging() -> Path:
    """Add the DEBUG file sink once; later calls return the same path."""
    global _file_sink

    path = debug_log_path()
    if _file_sink is None:
        path.parent.mkdir(parents=True, exist_ok=True)
        _file_sink = logger.add(
            path, format=LOG_FORMAT, level="DEBUG", rotation="10 MB", retention="7 days"
        )
    return path


def disable_file_logging() -> None:
    global _file_sink

    if _file_sink is not None:
        logger.remove(_file_sink)
        _file_sink = None


if os.environ.get("NIL_DEBUG", "").lower() in ("1", "true", "yes"):
    enable_file_logging()
