"""
Exception hierarchy for udpx.

Every error raised on purpose by the package derives from UdpxError so the
CLI can tell data/model problems (exit 1) from programming errors.
"""

from typing import Optional, Sequence, Tuple


class UdpxError(Exception):
    """Base class for all udpx errors."""


class DataFormatError(UdpxError, ValueError):
    """Malformed input file or stream."""

    def __init__(
        self,
        message: str,
        line_number: Optional[int] = None,
        source: Optional[str] = None,
    ):
        self.line_number = line_number
        self.source = source
        location = ""
        if source:
            location += f"{source}:"
        if line_number is not None:
            location += f"line {line_number}: "
        elif source:
            location += " "
        super().__init__(f"{location}{message}")


class TreeError(UdpxError, ValueError):
    """Head assignment that is not a single arborescence rooted at 0."""


class AlphabetError(UdpxError, ValueError):
    """Vocabulary construction or lookup problem."""


class ShapeError(UdpxError, ValueError):
    """Incompatible array shapes passed to a numerical op."""

    def __init__(self, op: str, *shapes: Sequence[int], detail: str = ""):
        self.op = op
        self.shapes: Tuple[Tuple[int, ...], ...] = tuple(tuple(s) for s in shapes)
        rendered = ", ".join(str(s) for s in self.shapes)
        message = f"{op}: incompatible shapes {rendered}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class GradientError(UdpxError, FloatingPointError):
    """Non-finite gradient found during an optimizer step."""

    def __init__(self, parameter: str):
        self.parameter = parameter
        super().__init__(f"non-finite gradient in parameter '{parameter}'")


class ModelError(UdpxError):
    """Model construction, loading or compatibility problem."""


class ConfigError(UdpxError, ValueError):
    """Invalid configuration file or value."""


class TrainingError(UdpxError):
    """Training cannot proceed (empty data, bad losses, ...)."""
