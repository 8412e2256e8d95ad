"""
Baseline Command - Train and evaluate one comparison model.

Unimodal baselines use a single enriched encoder plus the head, early
fusion one dense network over the concatenated plain features, and
simple late fusion the fused architecture over plain features.
"""

from pathlib import Path
from typing import Optional

import typer

from sentifuse.cli.commands.evaluate import show_report
from sentifuse.cli.commands.train import show_training
from sentifuse.cli.context import config_option, load_config_manager, reported_errors
from sentifuse.cli.pipeline import run_baseline
from sentifuse.ui import display_success, epoch_progress


def baseline_command(
    which: str = typer.Option(..., "--which", help="text, audio, video, early or late-simple"),
    config: Optional[Path] = config_option(),
) -> None:
    """Train and evaluate a baseline into runs/<which>."""
    with reported_errors("baseline"):
        manager = load_config_manager(config)
        with epoch_progress(manager.config.train.epochs, which) as on_epoch:
            outcome = run_baseline(manager, which, on_epoch)
        show_training(outcome)
        if outcome.report is not None:
            show_report(outcome.report)
        display_success(f"Run written to {outcome.run_dir}")


__all__ = ["baseline_command"]
