"""
Unified logging helpers.

All modules log through get_logger(); the console handler writes to stderr so
stdout only carries command results.
"""

from __future__ import annotations

import logging
import sys
import time
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Optional

LOGGER_NAME = "snnsim"

# Timing lines carry this tag so output comparisons can drop them.
TIMING_TAG = "[timing]"

_logger: Optional[logging.Logger] = None


def setup_logging(verbose: bool = False, log_dir: Optional[Path] = None) -> logging.Logger:
    """
    Set up the snnsim logger.

    Args:
        verbose: If True, enable DEBUG level logging
        log_dir: Optional directory for a daily log file. If None, console only.

    Returns:
        Configured logger instance
    """
    global _logger

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False

    if logger.handlers:
        for handler in logger.handlers:
            if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
                handler.setLevel(logging.DEBUG if verbose else logging.INFO)
        _logger = logger
        return logger

    # Format: [YYYY-MM-DD HH:MM:SS] LEVEL: message
    formatter = logging.Formatter(
        '[%(asctime)s] %(levelname)s: %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.DEBUG if verbose else logging.INFO)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_dir:
        log_dir.mkdir(parents=True, exist_ok=True)
        log_file = log_dir / f"snnsim_{datetime.now().strftime('%Y%m%d')}.log"
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    _logger = logger
    return logger


def get_logger() -> logging.Logger:
    """Get the configured logger instance, creating the default one if needed."""
    global _logger
    if _logger is None:
        setup_logging()
    return _logger


def is_verbose() -> bool:
    """True when the logger is configured for DEBUG output."""
    return get_logger().isEnabledFor(logging.DEBUG)


@contextmanager
def timed_step(step_name: str):
    """Context manager that logs the wall-clock duration of a step."""
    logger = get_logger()
    logger.debug(f"{TIMING_TAG} start {step_name}")
    start_time = time.perf_counter()
    try:
        yield
    finally:
        elapsed = time.perf_counter() - start_time
        logger.info(f"{TIMING_TAG} {step_name} took {elapsed:.2f}s")
