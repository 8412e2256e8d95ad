"""
CLI Context - Global command state and error reporting for commands.

Holds the configuration manager loaded for the current command and the
debug flag set by the root callback, so command modules need not pass
them around.
"""

from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

import typer

from sentifuse.core import ConfigManager
from sentifuse.ui import handle_error


# Global command state
_config_manager: Optional[ConfigManager] = None
_debug: bool = False


def get_config_manager() -> ConfigManager:
    """Get the configuration manager of the running command."""
    if _config_manager is None:
        raise RuntimeError("Configuration manager not initialized")
    return _config_manager


def set_config_manager(config_manager: Optional[ConfigManager]) -> None:
    global _config_manager
    _config_manager = config_manager


def config_option() -> Optional[Path]:
    """The shared ``--config`` option."""
    return typer.Option(
        None,
        "--config",
        "-c",
        help="Run configuration (TOML or JSON); built-in defaults when omitted",
        dir_okay=False,
    )


def load_config_manager(config_path: Optional[Path]) -> ConfigManager:
    """Load ``config_path`` (defaults when None) and make it the global manager."""
    manager = ConfigManager(config_path)
    set_config_manager(manager)
    return manager


def is_debug() -> bool:
    return _debug


def set_debug_mode(enabled: bool) -> None:
    global _debug
    _debug = enabled


@contextmanager
def reported_errors(context: Optional[str] = None) -> Iterator[None]:
    """
    Turn any failure inside the block into its diagnostic line and exit code.
    """
    try:
        yield
    except (typer.Exit, typer.Abort):
        raise
    except KeyboardInterrupt:
        raise
    except Exception as e:
        raise typer.Exit(handle_error(e, context))


__all__ = [
    "config_option",
    "get_config_manager",
    "set_config_manager",
    "load_config_manager",
    "is_debug",
    "set_debug_mode",
    "reported_errors",
]
