"""
Outcome of a use case as seen by the CLI.

Exit codes: 0 success, 1 bad data or a failed run, 2 bad usage (raised by
click itself, never stored in a result).
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE_ERROR = 2


class ProcessingResult(BaseModel):
    """What a train, parse or self-train run produced, or why it failed."""

    success: bool
    message: str
    output_path: Optional[Path] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)
    errors: List[str] = Field(default_factory=list)
    duration_seconds: Optional[float] = None
    exit_code: int = EXIT_OK

    @classmethod
    def success_result(
        cls,
        message: str,
        output_path: Optional[Union[str, Path]] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> "ProcessingResult":
        return cls(
            success=True,
            message=message,
            output_path=Path(output_path) if output_path else None,
            metadata=metadata or {},
        )

    @classmethod
    def error_result(
        cls, message: str, errors: Optional[List[str]] = None, exit_code: int = EXIT_DATA_ERROR
    ) -> "ProcessingResult":
        return cls(success=False, message=message, errors=errors or [], exit_code=exit_code)

    def add_error(self, error: str) -> None:
        """Record a failure discovered after the fact; the result becomes a data error."""
        self.errors.append(error)
        self.success = False
        if self.exit_code == EXIT_OK:
            self.exit_code = EXIT_DATA_ERROR

    def has_errors(self) -> bool:
        return bool(self.errors)

    def summary(self) -> str:
        """One line for logs: status, message, error count and duration."""
        parts = ["ok" if self.success else "failed", self.message]
        if self.errors:
            parts.append(f"{len(self.errors)} error(s)")
        if self.duration_seconds is not None:
            parts.append(f"{self.duration_seconds:.2f}s")
        return " | ".join(parts)
