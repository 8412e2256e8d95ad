"""
Evaluate Command - Score a saved checkpoint on the test split.
"""

from pathlib import Path
from typing import Optional

import typer

from sentifuse.cli.context import config_option, load_config_manager, reported_errors
from sentifuse.cli.pipeline import evaluate_checkpoint
from sentifuse.training.metrics import EvalReport
from sentifuse.ui import display_success, get_console


def show_report(report: EvalReport) -> None:
    """Headline metrics of ``report`` on standard output."""
    console = get_console()
    console.print(f"[title]{report.variant or 'model'}[/title] on {report.n_samples} test rows")
    console.print(f"  accuracy     [metric]{report.accuracy:.4f}[/metric]")
    console.print(f"  weighted F1  [metric]{report.scores.weighted_f1:.4f}[/metric]")
    console.print(f"  macro AUC    [metric]{report.macro_auc:.4f}[/metric]")
    console.print(f"  log loss     [metric]{report.log_loss:.4f}[/metric]")


def evaluate_command(
    config: Optional[Path] = config_option(),
    checkpoint: Path = typer.Option(..., "--checkpoint", help="ckpt_best.bin inside a run directory", dir_okay=False),
    out: Optional[Path] = typer.Option(
        None, "--out", "-o", help="Report directory; the checkpoint's run directory when omitted", file_okay=False
    ),
) -> None:
    """Write report.json, confusion matrix and ROC/PR curves for a checkpoint."""
    with reported_errors("evaluate"):
        manager = load_config_manager(config)
        report = evaluate_checkpoint(manager, checkpoint, out)
        show_report(report)
        display_success(f"Report written to {out or checkpoint.parent}")


__all__ = ["show_report", "evaluate_command"]
