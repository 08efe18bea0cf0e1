"""
Rich progress bars for epochs, rounds and corpus annotation.

A disabled tracker swallows every call, so loops update it unconditionally.
"""

from contextlib import contextmanager
from typing import Dict, Iterator, Optional

from rich.console import Console
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
    TimeElapsedColumn,
)

from udpx.core.logger import get_logger

console = Console(stderr=True)


def format_status(values: Dict[str, Optional[float]]) -> str:
    """'loss 0.4213  dev_uas 0.9100'; None values are left out."""
    return "  ".join(f"{key} {value:.4f}" for key, value in values.items() if value is not None)


class ProgressTracker:
    """Bar with a step counter and the latest metric values."""

    def __init__(self, description: str, total: Optional[int] = None, enabled: bool = True):
        self.description = description
        self.total = total
        self.enabled = enabled
        self.completed = 0
        self.status = ""
        self.logger = get_logger("ProgressTracker")
        self.progress: Optional[Progress] = None
        self.task_id = None

    def __enter__(self) -> "ProgressTracker":
        if self.enabled:
            self.progress = Progress(
                SpinnerColumn(),
                TextColumn("[progress.description]{task.description}"),
                BarColumn(),
                MofNCompleteColumn(),
                TimeElapsedColumn(),
                TextColumn("{task.fields[status]}"),
                console=console,
            )
            self.progress.start()
            self.task_id = self.progress.add_task(self.description, total=self.total, status="")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.progress:
            self.progress.stop()
        if self.enabled:
            self.logger.debug(f"{self.description}: {self.completed} step(s) {self.status}".strip())

    def update(self, advance: int = 1, **metrics: Optional[float]) -> None:
        """Advance the bar; keyword metrics replace the status text."""
        self.completed += advance
        if metrics:
            self.status = format_status(metrics)
        if self.progress and self.task_id is not None:
            self.progress.update(self.task_id, advance=advance, status=self.status)


@contextmanager
def track_progress(
    description: str, total: Optional[int] = None, enabled: bool = True
) -> Iterator[ProgressTracker]:
    """
    Usage:
        with track_progress("Training", total=max_epochs, enabled=config.progress) as tracker:
            for epoch in ...:
                tracker.update(1, loss=loss, dev_uas=uas)
    """
    with ProgressTracker(description, total, enabled=enabled) as tracker:
        yield tracker
