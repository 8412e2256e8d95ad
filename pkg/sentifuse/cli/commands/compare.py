"""
Compare Command - Rank finished runs in a Markdown table.
"""

from pathlib import Path
from typing import List, Optional

import typer

from sentifuse.cli.context import reported_errors
from sentifuse.cli.pipeline import compare_runs, comparison_markdown
from sentifuse.core.utils import atomic_write_text
from sentifuse.ui import display_success, get_console


def compare_command(
    runs: List[Path] = typer.Option(..., "--runs", help="Run directory holding report.json (repeatable)", file_okay=False),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Also write the table to this file", dir_okay=False),
) -> None:
    """Print accuracy, weighted F1 and macro AUC per run, best accuracy first."""
    with reported_errors("compare"):
        table = comparison_markdown(compare_runs(runs))
        get_console().print(table, markup=False, highlight=False, end="")
        if out is not None:
            atomic_write_text(out, table)
            display_success(f"Comparison written to {out}")


__all__ = ["compare_command"]
