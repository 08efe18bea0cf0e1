"""
Exception to ProcessingResult mapping shared by every command.

Each exception family gets a message prefix; the most specific registered
type along the exception's MRO wins.
"""

import traceback
from typing import Callable, Dict, Optional, Type

from udpx.core.base import EXIT_DATA_ERROR, ProcessingResult
from udpx.core.exceptions import (
    AlphabetError,
    ConfigError,
    DataFormatError,
    GradientError,
    ModelError,
    ShapeError,
    TrainingError,
    TreeError,
    UdpxError,
)
from udpx.core.logger import get_logger

Handler = Callable[..., ProcessingResult]

MESSAGE_PREFIXES: Dict[Type[Exception], str] = {
    DataFormatError: "Invalid data",
    TreeError: "Invalid data",
    AlphabetError: "Invalid data",
    UdpxError: "Invalid data",
    ConfigError: "Invalid configuration",
    ModelError: "Model error",
    ShapeError: "Model error",
    GradientError: "Training failed",
    TrainingError: "Training failed",
}


def _prefixed(prefix: str) -> Handler:
    def handle(error: Exception, context: str, **kwargs) -> ProcessingResult:
        return ProcessingResult.error_result(
            f"{prefix}: {error}", errors=[f"{type(error).__name__} in {context}: {error}"]
        )

    return handle


def _file_not_found(error: FileNotFoundError, context: str, **kwargs) -> ProcessingResult:
    path = getattr(error, "filename", None)
    return ProcessingResult.error_result(
        f"File not found: {path}" if path else str(error),
        errors=[f"FileNotFoundError in {context}: {error}"],
    )


def _permission_denied(error: PermissionError, context: str, **kwargs) -> ProcessingResult:
    path = getattr(error, "filename", None)
    return ProcessingResult.error_result(
        f"Permission denied: {path}" if path else "Permission denied",
        errors=[f"PermissionError in {context}: {error}"],
    )


def _unexpected(error: Exception, context: str, **kwargs) -> ProcessingResult:
    return ProcessingResult.error_result(
        f"Unexpected error: {type(error).__name__}: {error}",
        errors=[f"{type(error).__name__} in {context}: {error}"],
        exit_code=EXIT_DATA_ERROR,
    )


class ErrorHandler:
    """Turns exceptions into results with a message and an exit code."""

    def __init__(self, logger_name: str = "ErrorHandler", verbose: bool = False):
        self.verbose = verbose
        self.logger = get_logger(logger_name, verbose=verbose)
        self.error_handlers: Dict[Type[Exception], Handler] = {
            FileNotFoundError: _file_not_found,
            PermissionError: _permission_denied,
        }
        for error_type, prefix in MESSAGE_PREFIXES.items():
            self.error_handlers[error_type] = _prefixed(prefix)

    def handle_error(
        self, error: Exception, context: str = "", return_result: bool = True, **kwargs
    ) -> Optional[ProcessingResult]:
        """
        Log the error and build its result.

        Args:
            error: Exception to handle
            context: Command or operation it came from
            return_result: Return the result (False only logs)
        """
        self.logger.error(f"Error in {context}: {error}")
        if self.verbose:
            self.logger.debug(traceback.format_exc())
        result = self._lookup(type(error))(error, context, **kwargs)
        return result if return_result else None

    def _lookup(self, error_type: Type[Exception]) -> Handler:
        for klass in error_type.__mro__:
            if klass in self.error_handlers:
                return self.error_handlers[klass]
        return _unexpected

    def register_handler(self, exception_type: Type[Exception], handler: Handler) -> None:
        self.error_handlers[exception_type] = handler


_error_handler: Optional[ErrorHandler] = None


def get_error_handler(verbose: bool = False) -> ErrorHandler:
    """Process-wide handler, created on first use."""
    global _error_handler
    if _error_handler is None:
        _error_handler = ErrorHandler(verbose=verbose)
    return _error_handler
