"""
Timing and logging wrappers for use cases and worker jobs.
"""

import functools
import time
from typing import Callable, ParamSpec, TypeVar

from udpx.core.base import ProcessingResult
from udpx.core.logger import get_logger

P = ParamSpec("P")
R = TypeVar("R")


def format_duration(seconds: float) -> str:
    """5.0 seconds, 1m 5.0s, 1h 2m 5.0s."""
    if seconds < 60:
        return f"{seconds:.1f} seconds"
    minutes, rest = divmod(seconds, 60)
    if minutes < 60:
        return f"{int(minutes)}m {rest:.1f}s"
    hours, minutes = divmod(int(minutes), 60)
    return f"{hours}h {minutes}m {rest:.1f}s"


def time_operation(verbose: bool = False):
    """
    Measure the wrapped call; a returned ProcessingResult gets duration_seconds.

    With verbose the duration (or the failure) is logged at debug level.
    """

    def decorator(func: Callable[P, R]) -> Callable[P, R]:
        @functools.wraps(func)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
            logger = get_logger(func.__module__)
            start = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                if verbose:
                    elapsed = format_duration(time.perf_counter() - start)
                    logger.debug(f"{func.__qualname__} failed after {elapsed}: {e}")
                raise
            duration = time.perf_counter() - start
            if isinstance(result, ProcessingResult):
                result.duration_seconds = duration
                if verbose:
                    logger.debug(result.summary())
            elif verbose:
                logger.debug(f"{func.__qualname__} took {format_duration(duration)}")
            return result

        return wrapper

    return decorator


def log_operation(level: str = "INFO", include_result: bool = False):
    """Log entry and exit of the wrapped call at the given level; failures at error."""

    def decorator(func: Callable[P, R]) -> Callable[P, R]:
        @functools.wraps(func)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
            logger = get_logger(func.__module__)
            log = getattr(logger, level.lower(), logger.info)
            log(f"{func.__qualname__} started")
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                logger.error(f"{func.__qualname__} failed: {e}")
                raise
            log(f"{func.__qualname__} finished" + (f": {result}" if include_result else ""))
            return result

        return wrapper

    return decorator
