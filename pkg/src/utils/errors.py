"""
Error types and the error-handling decorator used across snnsim.

Every error raised on purpose by the library derives from SnnSimError, so the
CLI can map it to an exit status without swallowing programming errors.
"""

from __future__ import annotations

from functools import wraps
from typing import Any, Callable, Optional

from .logging_helpers import get_logger


class SnnSimError(Exception):
    """Base class for all snnsim errors."""


class ContractViolation(SnnSimError, ValueError):
    """A precondition of an operation does not hold (bad format, bad state, bad dims)."""


class ConfigurationError(SnnSimError):
    """Run configuration, model artifacts or datasets are unusable."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseError(SnnSimError, ValueError):
    """Malformed IDX byte stream; `offset` is the byte offset where decoding failed."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


class NetworkFormatError(SnnSimError, ValueError):
    """Malformed or inconsistent network weight file."""


def exit_status_for(error: BaseException) -> int:
    """Exit status the CLI uses for an error: 2 for usage/config problems, 1 otherwise."""
    if isinstance(error, (ConfigurationError, FileNotFoundError)):
        return 2
    return 1


def handle_errors(
    reraise: bool = False,
    default_return: Any = None,
    log_error: bool = True,
):
    """
    Decorator for error handling around top-level commands.

    Only SnnSimError and OSError are handled; anything else is a bug and propagates.

    Args:
        reraise: If True, re-raise the exception after logging
        default_return: Value to return on error (if not reraise). If callable,
            it is called with the exception and its result is returned.
        log_error: If True, log the error
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except (SnnSimError, OSError) as e:
                if log_error:
                    get_logger().error(f"{func.__name__}: {e}")
                if reraise:
                    raise
                if callable(default_return):
                    return default_return(e)
                return default_return
        return wrapper
    return decorator
