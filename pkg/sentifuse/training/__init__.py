"""
Training and Evaluation - Training loop, callbacks, metrics and diagnostic export.
"""

from sentifuse.training.export import export_history, export_report, export_training
from sentifuse.training.metrics import (
    EvalReport,
    confusion_matrix,
    evaluate,
    log_loss,
    pr_curve,
    prf_scores,
    roc_auc,
)
from sentifuse.training.trainer import EarlyStopping, ReduceLROnPlateau, TrainHistory, train_loop

__all__ = [
    "EarlyStopping",
    "ReduceLROnPlateau",
    "TrainHistory",
    "train_loop",
    "EvalReport",
    "evaluate",
    "confusion_matrix",
    "prf_scores",
    "log_loss",
    "roc_auc",
    "pr_curve",
    "export_training",
    "export_report",
    "export_history",
]
