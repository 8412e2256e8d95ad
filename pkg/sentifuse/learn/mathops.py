"""
Shared probability helpers used by the GBDT, the neural model and the metrics.
"""

import numpy as np

from sentifuse.core.exceptions import ValidationError


PROB_FLOOR = 1e-12


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def check_labels(labels: np.ndarray, n_classes: int) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        bad = int(y[(y < 0) | (y >= n_classes)][0])
        raise ValidationError(
            f"label {bad} outside [0, {n_classes})", field_name="labels", invalid_value=bad
        )
    return y


def mean_nll(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean of -log p[true class], probabilities clamped at 1e-12."""
    p = np.asarray(probs, dtype=np.float64)
    y = check_labels(labels, p.shape[1])
    if y.shape[0] != p.shape[0]:
        raise ValidationError(f"{y.shape[0]} labels for {p.shape[0]} probability rows", field_name="labels")
    if y.shape[0] == 0:
        raise ValidationError("empty input", field_name="labels")
    picked = np.maximum(p[np.arange(y.shape[0]), y], PROB_FLOOR)
    return float(-np.mean(np.log(picked)))


def predict_labels(probs: np.ndarray) -> np.ndarray:
    """Argmax per row; ties go to the lowest class id."""
    return np.argmax(np.asarray(probs), axis=1).astype(np.int64)


__all__ = ["PROB_FLOOR", "softmax", "check_labels", "mean_nll", "predict_labels"]
