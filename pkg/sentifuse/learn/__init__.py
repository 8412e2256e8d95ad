"""
Learners - Gradient-boosted trees, the neural fusion model and its checkpoints.
"""

from sentifuse.learn.checkpoint import load_checkpoint, save_checkpoint
from sentifuse.learn.gbdt import GbdtModel, gbdt_fit, gbdt_leaf_indices, gbdt_predict_proba
from sentifuse.learn.neural import (
    AdamState,
    FusionModel,
    ModelSpec,
    adam_step,
    backward,
    forward,
    init_model,
    loss,
    predict_proba,
)

__all__ = [
    # Boosted trees
    "GbdtModel",
    "gbdt_fit",
    "gbdt_predict_proba",
    "gbdt_leaf_indices",
    # Neural model
    "ModelSpec",
    "FusionModel",
    "init_model",
    "forward",
    "loss",
    "backward",
    "AdamState",
    "adam_step",
    "predict_proba",
    # Checkpoints
    "save_checkpoint",
    "load_checkpoint",
]
