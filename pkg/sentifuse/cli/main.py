"""
CLI Main Application - Typer app entry point and exit-code mapping.

Run parameters come from the configuration file; flags only pick the
command, the config path and output locations. Every failure becomes a
single ``error: <message>`` line on standard error and a documented exit
code (0 success, 1 usage, 2 data, 3 numeric).
"""

import logging
import sys
from typing import List, Optional

import click
import typer
from rich.logging import RichHandler

from sentifuse import __version__
from sentifuse.cli.commands import baseline, compare, config, evaluate, featurize, prepare, run, synth, train
from sentifuse.cli.context import set_debug_mode
from sentifuse.core.config_schemas import describe_config_keys
from sentifuse.ui import get_console, get_error_console, handle_error, set_debug
from sentifuse.ui.error_handler import EXIT_OK


def _config_epilog() -> str:
    # \b keeps click from re-wrapping the key listing.
    return "Configuration keys (key = default  # description):\n\n\b\n" + describe_config_keys()


# Create main Typer application
app = typer.Typer(
    name="sentifuse",
    help="Multimodal emotion classification: featurize, fuse, train and evaluate.",
    epilog=_config_epilog(),
    no_args_is_help=True,
    rich_markup_mode=None,
    context_settings={"help_option_names": ["-h", "--help"]},
)


def _version_callback(value: bool) -> None:
    if value:
        get_console().print(f"sentifuse {__version__}", highlight=False)
        raise typer.Exit()


@app.callback()
def main(
    version: bool = typer.Option(
        False,
        "--version",
        "-V",
        help="Show version information and exit",
        is_flag=True,
        is_eager=True,
        callback=_version_callback,
    ),
    debug: bool = typer.Option(
        False,
        "--debug",
        help="Enable debug logging and tracebacks",
        is_flag=True,
    ),
) -> None:
    """
    SentiFuse - multimodal late-fusion emotion classification.

    Typical flow: synth (or your own manifests) -> featurize -> prepare ->
    train -> evaluate, or `run` for all of it; `baseline` and `compare`
    set the fused model against simpler ones.
    """
    _setup_logging(debug)
    set_debug(debug)
    set_debug_mode(debug)


def _setup_logging(debug: bool = False) -> None:
    """
    Set up application logging.

    Args:
        debug: Enable debug logging
    """
    level = logging.DEBUG if debug else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[
            RichHandler(
                console=get_error_console(),
                show_time=debug,
                show_path=debug,
                markup=False,
                rich_tracebacks=debug,
            )
        ],
        force=True,
    )

    # Reduce noise from third-party libraries
    logging.getLogger("matplotlib").setLevel(logging.WARNING)


def _register_commands() -> None:
    """Register commands with the main app."""
    app.command(name="synth")(synth.synth_command)
    app.command(name="featurize")(featurize.featurize_command)
    app.command(name="prepare")(prepare.prepare_command)
    app.command(name="train")(train.train_command)
    app.command(name="evaluate")(evaluate.evaluate_command)
    app.command(name="baseline")(baseline.baseline_command)
    app.command(name="compare")(compare.compare_command)
    app.command(name="run")(run.run_command)
    app.add_typer(config.app, name="config", help="Inspect run configuration")


# Register commands at module level to ensure they're available for help
_register_commands()


def cli_main(argv: Optional[List[str]] = None) -> None:
    """
    Main CLI entry point for the sentifuse command.

    Exits with the code of the outcome; click usage errors exit 1.
    """
    try:
        result = app(args=argv, prog_name="sentifuse", standalone_mode=False)
        code = result if isinstance(result, int) else EXIT_OK
    except click.exceptions.Abort:
        get_error_console().print("error: aborted", markup=False, highlight=False)
        code = 130
    except click.ClickException as e:
        code = handle_error(e)
    except KeyboardInterrupt:
        get_error_console().print("error: interrupted", markup=False, highlight=False)
        code = 130
    except Exception as e:
        code = handle_error(e, "unexpected error")
    sys.exit(code)


# Export main components
__all__ = [
    "app",
    "cli_main",
]
