"""
Environment and project path helpers.

The MNIST directory comes from SNNSIM_DATA_DIR (or DATA_DIR), after loading a
.env file from the project root when python-dotenv finds one; otherwise it is
<project root>/data.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

try:
    from dotenv import load_dotenv
    DOTENV_AVAILABLE = True
except ImportError:
    DOTENV_AVAILABLE = False

# Markers that identify the project root
_PROJECT_MARKERS = ("pyproject.toml", ".git")

DATA_DIR_ENV_KEYS = ("SNNSIM_DATA_DIR", "DATA_DIR")

_dotenv_loaded = False


def parse_int_env(key: str, default: int = 0) -> int:
    """Parse integer environment variable, falling back to default on junk."""
    value = os.environ.get(key)
    if value is None:
        return default
    try:
        return int(value)
    except (ValueError, TypeError):
        return default


def parse_bool_env(key: str, default: bool = False) -> bool:
    """Parse boolean environment variable."""
    value = os.environ.get(key, str(default)).lower().strip()
    return value in ("true", "1", "yes", "on")


def get_project_root(current_file: Optional[str] = None) -> Path:
    """
    Get the project root directory (the one containing pyproject.toml).

    Args:
        current_file: Path to the current file (use __file__). If None, use cwd.

    Returns:
        Path to project root; cwd when no marker is found.
    """
    path = Path(current_file).resolve() if current_file else Path.cwd().resolve()
    if path.is_file():
        path = path.parent

    for candidate in (path, *path.parents):
        if any((candidate / marker).exists() for marker in _PROJECT_MARKERS):
            return candidate
    return Path.cwd().resolve()


def load_project_env() -> None:
    """Load <project root>/.env once, without overriding variables already set."""
    global _dotenv_loaded
    if _dotenv_loaded or not DOTENV_AVAILABLE:
        return
    env_path = get_project_root(__file__) / ".env"
    if env_path.exists():
        load_dotenv(env_path, override=False)
    _dotenv_loaded = True


def get_data_dir() -> Path:
    """
    Get the MNIST data directory.

    Uses SNNSIM_DATA_DIR or DATA_DIR if set; otherwise <project root>/data.
    """
    load_project_env()
    for key in DATA_DIR_ENV_KEYS:
        value = os.environ.get(key)
        if value and value.strip():
            return Path(value.strip()).expanduser().resolve()
    return (get_project_root(__file__) / "data").resolve()
