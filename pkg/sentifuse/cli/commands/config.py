"""
Configuration Command - Inspect run configuration keys.
"""

from pathlib import Path
from typing import Any, Optional

import typer
from rich.markup import escape
from rich.table import Table

from sentifuse.cli.context import config_option, load_config_manager, reported_errors
from sentifuse.core.config_schemas import iter_config_keys
from sentifuse.ui import display_success, get_console


# Create config command group
app = typer.Typer(
    name="config",
    help="Inspect run configuration",
    no_args_is_help=True,
)


def _render(value: Any) -> str:
    return "-" if value is None else escape(str(value))


@app.command(name="show")
def show_config(config: Optional[Path] = config_option()) -> None:
    """
    List every configuration key with its default.

    With --config the resolved value of each key is shown as well.
    """
    with reported_errors("config show"):
        manager = load_config_manager(config) if config is not None else None
        table = Table(title="Configuration keys", show_lines=False)
        table.add_column("key", style="title", no_wrap=True)
        table.add_column("default")
        if manager is not None:
            table.add_column("value")
        table.add_column("description", style="muted")
        for key, default, description in iter_config_keys():
            row = [key, _render(default)]
            if manager is not None:
                row.append(_render(manager.get_setting(key)))
            row.append(escape(description))
            table.add_row(*row)
        get_console().print(table)


@app.command(name="validate")
def validate_config(config: Path = typer.Option(..., "--config", "-c", help="Run configuration to check", dir_okay=False)) -> None:
    """Load and validate a configuration file."""
    with reported_errors("config validate"):
        manager = load_config_manager(config)
        display_success(f"{config} is valid (work_dir {manager.work_dir})")


__all__ = ["app", "show_config", "validate_config"]
