"""
UI Layer - Rich consoles, progress display and error reporting.
"""

from sentifuse.ui.console import display_info, display_success, get_console, get_error_console, setup_console
from sentifuse.ui.error_handler import ErrorHandler, display_warning, handle_error, set_debug
from sentifuse.ui.progress import epoch_progress, status_spinner

__all__ = [
    # Console Management
    "get_console",
    "get_error_console",
    "setup_console",
    "display_success",
    "display_info",
    # Error Handling
    "ErrorHandler",
    "handle_error",
    "display_warning",
    "set_debug",
    # Progress
    "status_spinner",
    "epoch_progress",
]
