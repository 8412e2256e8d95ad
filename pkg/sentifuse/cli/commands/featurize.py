"""
Featurize Command - Fit and apply one modality's feature pipeline.
"""

from pathlib import Path
from typing import Optional

import typer

from sentifuse.cli.context import config_option, load_config_manager, reported_errors
from sentifuse.cli.pipeline import featurize
from sentifuse.ui import display_info, display_success, status_spinner


MODALITY_CHOICES = ("text", "audio", "video", "all")


def featurize_command(
    modality: str = typer.Argument(..., help="text, audio, video or all"),
    config: Optional[Path] = config_option(),
) -> None:
    """
    Extract features for a modality.

    Transformers are fitted on the training split only; the feature CSVs
    and fitted transformer JSON land in <work_dir>/features.
    """
    with reported_errors("featurize"):
        manager = load_config_manager(config)
        with status_spinner(f"Featurizing {modality}..."):
            written = featurize(manager, modality)
        for role, path in written.items():
            display_info(f"{role}: {path}")
        display_success(f"Features written to {manager.work_dir / 'features'}")


__all__ = ["MODALITY_CHOICES", "featurize_command"]
