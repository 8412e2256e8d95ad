"""
Error Handler - One-line diagnostics and exit-code mapping.

Every failure a command can hit ends here: the handler prints a single
``error: <message>`` line on standard error (plus the traceback in debug
mode) and tells the caller which exit code to use.
"""

import logging
import traceback
from typing import Optional

import click
import numpy as np

from sentifuse.core.exceptions import SentiFuseError
from sentifuse.ui.console import get_error_console


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class ErrorHandler:
    """Formats errors consistently and maps them to exit codes."""

    def __init__(self, show_traceback: bool = False):
        self.show_traceback = show_traceback

    def exit_code_for(self, error: BaseException) -> int:
        if isinstance(error, SentiFuseError):
            return error.exit_code
        if isinstance(error, (click.UsageError, click.BadParameter)):
            return EXIT_USAGE
        if isinstance(error, (FloatingPointError, OverflowError, np.linalg.LinAlgError)):
            return EXIT_NUMERIC
        if isinstance(error, OSError):
            return EXIT_DATA
        return EXIT_USAGE

    def describe(self, error: BaseException) -> str:
        if isinstance(error, SentiFuseError):
            return error.message
        if isinstance(error, click.ClickException):
            return error.format_message()
        return str(error) or error.__class__.__name__

    def handle_error(self, error: BaseException, context: Optional[str] = None) -> int:
        """
        Print the diagnostic line for ``error``.

        Args:
            error: Exception to report
            context: Optional prefix naming the failing stage

        Returns:
            Exit code for the process
        """
        console = get_error_console()
        message = " ".join(self.describe(error).split())
        if context:
            message = f"{context}: {message}"
        console.print(f"error: {message}", markup=False, highlight=False, soft_wrap=True)
        if self.show_traceback:
            console.print(
                "".join(traceback.format_exception(type(error), error, error.__traceback__)),
                markup=False,
                highlight=False,
                soft_wrap=True,
            )
        logger.debug(f"{type(error).__name__} mapped to exit code {self.exit_code_for(error)}")
        return self.exit_code_for(error)


_error_handler = ErrorHandler()


def set_debug(enabled: bool) -> None:
    _error_handler.show_traceback = enabled


def handle_error(error: BaseException, context: Optional[str] = None) -> int:
    """Report ``error`` with the global handler; returns the exit code."""
    return _error_handler.handle_error(error, context)


def display_warning(message: str) -> None:
    get_error_console().print(f"[warning]warning:[/warning] {message}", soft_wrap=True)


__all__ = [
    "EXIT_OK",
    "EXIT_USAGE",
    "EXIT_DATA",
    "EXIT_NUMERIC",
    "ErrorHandler",
    "set_debug",
    "handle_error",
    "display_warning",
]
