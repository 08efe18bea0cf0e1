"""
Common error handlers for CLI commands.

This module provides standardized error handling patterns
for all CLI commands to ensure consistency.
"""

import typer
from rich.console import Console
from rich.panel import Panel

from udpx.core.base import EXIT_OK, ProcessingResult
from udpx.core.decorators import format_duration
from udpx.core.error_handler import get_error_handler

console = Console(stderr=True)


def handle_cli_error(error: Exception, context: str = "", show_traceback: bool = False) -> None:
    """
    Standardized error handler for CLI commands.

    Args:
        error: The exception that occurred
        context: Additional context about the operation
        show_traceback: Whether to show full traceback
    """
    result = get_error_handler(verbose=show_traceback).handle_error(error, context)
    title = f"Error in {context}" if context else "Error"

    body = f"[red]✗[/red] {result.message}"
    if show_traceback and result.errors:
        body += "\n\n" + "\n".join(result.errors)
    console.print(Panel(body, title=title, border_style="red"))

    raise typer.Exit(result.exit_code)


def handle_result(result: ProcessingResult, title: str) -> None:
    """Print a success panel, or exit with the result's code on failure."""
    if result.success:
        lines = [f"[green]✓[/green] {result.message}"]
        if result.output_path:
            lines.append(f"Output: {result.output_path}")
        if result.duration_seconds is not None:
            lines.append(f"Took {format_duration(result.duration_seconds)}")
        console.print(Panel("\n".join(lines), title=title, border_style="green"))
        return

    console.print(Panel(f"[red]✗[/red] {result.message}", title=title, border_style="red"))
    raise typer.Exit(result.exit_code if result.exit_code != EXIT_OK else 1)

