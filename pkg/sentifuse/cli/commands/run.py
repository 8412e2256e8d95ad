"""
Run Command - The whole pipeline for the configured variant.
"""

from pathlib import Path
from typing import Optional

from sentifuse.cli.commands.evaluate import show_report
from sentifuse.cli.commands.train import show_training
from sentifuse.cli.context import config_option, load_config_manager, reported_errors
from sentifuse.cli.pipeline import featurize, prepare, train_and_evaluate
from sentifuse.ui import display_success, epoch_progress, status_spinner


def run_command(config: Optional[Path] = config_option()) -> None:
    """featurize all, prepare, train and evaluate experiment.variant."""
    with reported_errors("run"):
        manager = load_config_manager(config)
        cfg = manager.config
        with status_spinner("Featurizing text, audio and video..."):
            featurize(manager, "all")
        with status_spinner("Preparing dataset..."):
            prepare(manager)
        with epoch_progress(cfg.train.epochs, cfg.experiment.variant) as on_epoch:
            outcome = train_and_evaluate(manager, cfg.experiment.variant, on_epoch)
        show_training(outcome)
        if outcome.report is not None:
            show_report(outcome.report)
        display_success(f"Run written to {outcome.run_dir}")


__all__ = ["run_command"]
