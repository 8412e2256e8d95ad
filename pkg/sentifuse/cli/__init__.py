"""
CLI Layer - Command-line interface and pipeline orchestration.

The Typer application lives in ``main``; ``pipeline`` holds the stages
the commands drive.
"""

from sentifuse.cli.main import app, cli_main

__all__ = ["app", "cli_main"]
