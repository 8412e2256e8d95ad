"""
Console Management - Shared Rich consoles for results and diagnostics.

Results (tables, summaries) go to standard output; progress, log records
and error lines go to standard error so piped output stays clean.
"""

from typing import Optional

from rich.console import Console
from rich.text import Text
from rich.theme import Theme


SENTIFUSE_THEME = Theme(
    {
        "title": "bold cyan",
        "success": "green",
        "warning": "yellow",
        "error": "bold red",
        "muted": "dim",
        "metric": "bold magenta",
    }
)

_console: Optional[Console] = None
_error_console: Optional[Console] = None


def setup_console(force_terminal: Optional[bool] = None, width: Optional[int] = None) -> Console:
    """(Re)create the stdout and stderr consoles."""
    global _console, _error_console
    _console = Console(theme=SENTIFUSE_THEME, force_terminal=force_terminal, width=width)
    _error_console = Console(theme=SENTIFUSE_THEME, stderr=True, force_terminal=force_terminal, width=width)
    return _console


def get_console() -> Console:
    if _console is None:
        setup_console()
    return _console  # type: ignore[return-value]


def get_error_console() -> Console:
    if _error_console is None:
        setup_console()
    return _error_console  # type: ignore[return-value]


def display_success(message: str) -> None:
    """Result line on standard output; ``message`` is printed literally."""
    get_console().print(Text(message, style="success"), soft_wrap=True)


def display_info(message: str) -> None:
    get_console().print(Text(message), soft_wrap=True)


__all__ = ["SENTIFUSE_THEME", "setup_console", "get_console", "get_error_console", "display_success", "display_info"]
