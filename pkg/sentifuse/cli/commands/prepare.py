"""
Prepare Command - Join modalities, tag splits and oversample the training rows.
"""

from pathlib import Path
from typing import Optional

from sentifuse.cli.context import config_option, load_config_manager, reported_errors
from sentifuse.cli.pipeline import ENRICHED, prepare
from sentifuse.core.models import SPLIT_TAGS
from sentifuse.ui import display_info, display_success, status_spinner


def prepare_command(config: Optional[Path] = config_option()) -> None:
    """Build the tagged, rebalanced dataset from the featurized modalities."""
    with reported_errors("prepare"):
        manager = load_config_manager(config)
        with status_spinner("Preparing dataset..."):
            prepared = prepare(manager)
        ds = prepared[ENRICHED]
        for tag in SPLIT_TAGS:
            display_info(f"{tag}: {ds.split(tag).rows} rows")
        display_success(f"Dataset written to {manager.work_dir / 'dataset'}")


__all__ = ["prepare_command"]
