"""
Logging configuration and utilities.

This module provides centralized logging configuration using loguru, plus the
JSON-lines metrics stream that training and self-training write to.
"""

import json
import sys
import threading
from pathlib import Path
from typing import IO, Any, Dict, List, Optional, Union

from loguru import logger

_CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{extra[component]}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
    "<level>{message}</level>"
)
_FILE_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | "
    "{extra[component]}:{function}:{line} - {message}"
)

logger.configure(extra={"component": "udpx"})


def setup_logging(
    verbose: bool = False, log_file: Optional[Path] = None, level: str = "INFO"
) -> None:
    """
    Set up global logging configuration.

    Args:
        verbose: Enable verbose logging
        log_file: Path to log file (optional)
        level: Logging level
    """
    logger.remove()

    log_level = "DEBUG" if verbose else level

    logger.add(sys.stderr, level=log_level, format=_CONSOLE_FORMAT, colorize=True)

    if log_file:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            log_file,
            level=log_level,
            format=_FILE_FORMAT,
            rotation="10 MB",
            retention="30 days",
            compression="zip",
        )


def get_logger(name: Optional[str] = None, verbose: bool = False) -> "logger":
    """
    Get a logger bound to a component name.

    Sinks are configured once by setup_logging; this only tags records.

    Args:
        name: Component name shown in log lines
        verbose: Kept for call-site symmetry with setup_logging

    Returns:
        Bound loguru logger
    """
    return logger.bind(component=name or "udpx")


class MetricsStream:
    """
    JSON-lines metrics writer.

    Each record is written as one compact JSON object per line to every
    attached target (open text streams or file paths). Records are also kept
    in memory so callers can inspect the history after a run.
    """

    def __init__(self, *targets: Union[IO[str], str, Path]):
        self._lock = threading.Lock()
        self._streams: List[IO[str]] = []
        self._owned: List[IO[str]] = []
        self.records: List[Dict[str, Any]] = []
        for target in targets:
            self.attach(target)

    def attach(self, target: Union[IO[str], str, Path]) -> None:
        """Add a stream or a file path (appended to) as an output target."""
        if isinstance(target, (str, Path)):
            path = Path(target)
            path.parent.mkdir(parents=True, exist_ok=True)
            stream = open(path, "a", encoding="utf-8")
            self._owned.append(stream)
            self._streams.append(stream)
        else:
            self._streams.append(target)

    def emit(self, record: Dict[str, Any]) -> None:
        """Write one record."""
        line = json.dumps(record, sort_keys=True, default=_json_default)
        with self._lock:
            self.records.append(record)
            for stream in self._streams:
                stream.write(line + "\n")
                stream.flush()

    def close(self) -> None:
        """Close file targets opened by this stream."""
        for stream in self._owned:
            stream.close()
        self._owned.clear()

    def __enter__(self) -> "MetricsStream":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()


def _json_default(obj: Any) -> Any:
    """Serialize numpy scalars and paths."""
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")
