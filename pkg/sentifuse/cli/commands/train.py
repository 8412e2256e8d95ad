"""
Train Command - Train the configured model variant.
"""

from pathlib import Path
from typing import Optional

from sentifuse.cli.context import config_option, load_config_manager, reported_errors
from sentifuse.cli.pipeline import RunOutcome, train_variant
from sentifuse.ui import display_info, display_success, epoch_progress


def show_training(outcome: RunOutcome) -> None:
    history = outcome.history
    if history is not None:
        display_info(
            f"{len(history)} epochs, best epoch {history.best_epoch} (val loss {history.best_val_loss:.4f})"
        )
        if history.stopped_epoch is not None:
            display_info(f"Early stop after epoch {history.stopped_epoch}")


def train_command(config: Optional[Path] = config_option()) -> None:
    """
    Train experiment.variant on the prepared dataset.

    The run directory receives the resolved config, seed, model
    description, best checkpoint and history.csv.
    """
    with reported_errors("train"):
        manager = load_config_manager(config)
        cfg = manager.config
        with epoch_progress(cfg.train.epochs, cfg.experiment.variant) as on_epoch:
            outcome = train_variant(manager, cfg.experiment.variant, on_epoch)
        show_training(outcome)
        display_success(f"Run written to {outcome.run_dir}")


__all__ = ["show_training", "train_command"]
