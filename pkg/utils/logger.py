"""
Logging configuration utilities.
"""

import logging
import sys
from typing import Optional, Union

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def parse_level(level: Union[int, str]) -> int:
    """Map "DEBUG", "info", 10 ... to a logging level."""
    if isinstance(level, int):
        return level
    value = logging.getLevelName(level.strip().upper())
    if not isinstance(value, int):
        raise ValueError(f"unknown log level: {level!r}")
    return value


def setup_logger(level: Union[int, str] = logging.WARNING, log_file: Optional[str] = None) -> None:
    """
    Setup logging configuration for the application.

    Console output goes to stderr; stdout is reserved for reports.

    Args:
        level: Logging level (e.g., logging.INFO, "DEBUG")
        log_file: Optional path to log file. If None, logs to stderr.
    """
    formatter = logging.Formatter(LOG_FORMAT)

    if log_file:
        handler = logging.FileHandler(log_file)
    else:
        handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    logging.basicConfig(level=parse_level(level), handlers=[handler], format=LOG_FORMAT, force=True)
