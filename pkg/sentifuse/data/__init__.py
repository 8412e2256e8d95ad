"""
Data Preparation - Resampling and the synthetic corpus generator.
"""

from sentifuse.data.resample import (
    nested_holdout_split,
    oversample_to_targets,
    rebalance_training_split,
    remap_labels,
    stratified_split,
)
from sentifuse.data.synthgen import SynthSpec, generate

__all__ = [
    "remap_labels",
    "stratified_split",
    "nested_holdout_split",
    "oversample_to_targets",
    "rebalance_training_split",
    "SynthSpec",
    "generate",
]
