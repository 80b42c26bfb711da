"""
Environment-driven settings.

Values come from the process environment, optionally seeded from a .env file
in the working directory. Command-line flags override them.
"""

import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv


def _int_setting(key: str, default: int, minimum: int) -> int:
    raw = os.getenv(key)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError as e:
        raise ValueError(f"{key} must be an integer, got {raw!r}") from e
    if value < minimum:
        raise ValueError(f"{key} must be at least {minimum}, got {value}")
    return value


def _flag_setting(key: str) -> bool:
    return os.getenv(key, "").strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class LabSettings:
    threads: int = 1
    log_level: str = "WARNING"
    log_file: Optional[str] = None
    trace_console: bool = False
    purity_bound: int = 50
    prime_bound: int = 7
    precision: int = 16
    seed: int = 0


def load_settings(load_env_file: bool = True) -> LabSettings:
    """
    Read ALAB_* settings.

    Raises:
        ValueError: If a numeric key holds something else, naming the key
    """
    if load_env_file:
        load_dotenv(override=True)
    return LabSettings(
        threads=_int_setting("ALAB_THREADS", 1, 1),
        log_level=os.getenv("ALAB_LOG_LEVEL", "WARNING"),
        log_file=os.getenv("ALAB_LOG_FILE") or None,
        trace_console=_flag_setting("ALAB_TRACE_CONSOLE"),
        purity_bound=_int_setting("ALAB_PURITY_BOUND", 50, 2),
        prime_bound=_int_setting("ALAB_PRIME_BOUND", 7, 2),
        precision=_int_setting("ALAB_PRECISION", 16, 1),
        seed=_int_setting("ALAB_SEED", 0, 0),
    )
