"""
Evaluation Metrics - Confusion matrix, P/R/F1, log loss, ROC-AUC and PR curves.

All metrics derive from one array of predicted probabilities. Predicted
labels are the per-row argmax with ties going to the lowest class id.
AUC is the Mann-Whitney pairwise statistic (ties count one half),
computed exactly with sorted negatives instead of an O(P*N) loop.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from sentifuse.core.exceptions import DataError, ValidationError
from sentifuse.learn.mathops import check_labels, mean_nll, predict_labels
from sentifuse.learn.neural import Batch, FusionModel, predict_proba


logger = logging.getLogger(__name__)

REPORT_SCHEMA = "sentifuse-report"
REPORT_SCHEMA_VERSION = 1


def confusion_matrix(y_true: Sequence[int], y_pred: Sequence[int], n_classes: int) -> np.ndarray:
    """
    K x K counts; entry [i, j] counts samples of true class i predicted as j.

    Raises:
        ValidationError: A label outside [0, n_classes), or length mismatch
    """
    t = check_labels(np.asarray(y_true), n_classes)
    p = check_labels(np.asarray(y_pred), n_classes)
    if t.shape != p.shape:
        raise ValidationError(f"{t.shape[0]} true labels for {p.shape[0]} predictions", field_name="y_pred")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def accuracy_from_confusion(cm: np.ndarray) -> float:
    total = int(cm.sum())
    return float(np.trace(cm)) / total if total else 0.0


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(num.shape, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


@dataclass(frozen=True)
class PrfScores:
    """Per-class precision, recall, F1 and support with aggregates."""

    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray

    def _weighted(self, values: np.ndarray) -> float:
        total = self.support.sum()
        return float((values * self.support).sum() / total) if total else 0.0

    @property
    def weighted_precision(self) -> float:
        return self._weighted(self.precision)

    @property
    def weighted_recall(self) -> float:
        return self._weighted(self.recall)

    @property
    def weighted_f1(self) -> float:
        return self._weighted(self.f1)

    @property
    def macro_precision(self) -> float:
        return float(np.mean(self.precision))

    @property
    def macro_recall(self) -> float:
        return float(np.mean(self.recall))

    @property
    def macro_f1(self) -> float:
        return float(np.mean(self.f1))


def prf_scores(cm: np.ndarray) -> PrfScores:
    """Precision/recall/F1 per class; any zero denominator yields 0."""
    cm = np.asarray(cm, dtype=np.int64)
    diag = np.diag(cm).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    actual = cm.sum(axis=1).astype(np.float64)
    precision = _safe_ratio(diag, predicted)
    recall = _safe_ratio(diag, actual)
    f1 = _safe_ratio(2.0 * precision * recall, precision + recall)
    return PrfScores(precision, recall, f1, actual.astype(np.int64))


def log_loss(probs: np.ndarray, y_true: Sequence[int]) -> float:
    """Same definition as the training loss: mean -log p, clamped at 1e-12."""
    return mean_nll(probs, np.asarray(y_true))


def binary_auc(scores: np.ndarray, positive: np.ndarray) -> Optional[float]:
    """Pairwise AUC of ``scores`` for a boolean ``positive`` mask; None when undefined."""
    pos = np.asarray(scores, dtype=np.float64)[positive]
    neg = np.sort(np.asarray(scores, dtype=np.float64)[~positive])
    if pos.size == 0 or neg.size == 0:
        return None
    below = np.searchsorted(neg, pos, side="left")
    at_or_below = np.searchsorted(neg, pos, side="right")
    # Twice the Mann-Whitney U, an exact integer.
    doubled = int(np.sum(2 * below + (at_or_below - below)))
    return doubled / (2 * pos.size * neg.size)


def _threshold_counts(scores: np.ndarray, positive: np.ndarray):
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    hits = positive[order].astype(np.int64)
    last = np.r_[np.flatnonzero(np.diff(sorted_scores) != 0), sorted_scores.size - 1]
    tps = np.cumsum(hits)[last]
    fps = (last + 1) - tps
    return sorted_scores[last], tps, fps


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


@dataclass(frozen=True)
class PrCurve:
    thresholds: np.ndarray
    recall: np.ndarray
    precision: np.ndarray


def roc_curve(scores: np.ndarray, positive: np.ndarray) -> Optional[RocCurve]:
    """Points at every distinct threshold, descending, starting from (0, 0)."""
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    auc = binary_auc(scores, positive)
    if auc is None:
        return None
    thresholds, tps, fps = _threshold_counts(scores, positive)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    return RocCurve(
        np.r_[math.inf, thresholds],
        np.r_[0.0, fps / n_neg],
        np.r_[0.0, tps / n_pos],
        auc,
    )


@dataclass(frozen=True)
class RocReport:
    per_class: List[Optional[float]]
    curves: List[Optional[RocCurve]]
    macro: float


def roc_auc(probs: np.ndarray, y_true: Sequence[int]) -> RocReport:
    """
    One-vs-rest ROC per class and the macro mean over classes where AUC is defined.

    Raises:
        ValidationError: AUC is undefined for every class
    """
    p = np.asarray(probs, dtype=np.float64)
    y = check_labels(np.asarray(y_true), p.shape[1])
    per_class: List[Optional[float]] = []
    curves: List[Optional[RocCurve]] = []
    for c in range(p.shape[1]):
        curve = roc_curve(p[:, c], y == c)
        curves.append(curve)
        per_class.append(None if curve is None else curve.auc)
        if curve is None:
            logger.warning(f"AUC undefined for class {c} (needs positives and negatives); excluded from macro AUC")
    defined = [a for a in per_class if a is not None]
    if not defined:
        raise ValidationError("AUC undefined: no class has both positives and negatives", field_name="y_true")
    return RocReport(per_class, curves, float(np.mean(defined)))


def pr_curve(probs: np.ndarray, y_true: Sequence[int], c: int) -> PrCurve:
    """
    (recall, precision) at every distinct score threshold of class ``c``, highest first.

    Raises:
        ValidationError: Class ``c`` has no positive sample
    """
    p = np.asarray(probs, dtype=np.float64)
    y = check_labels(np.asarray(y_true), p.shape[1])
    positive = y == c
    n_pos = int(positive.sum())
    if n_pos == 0:
        raise ValidationError(f"class {c} has no positive samples", field_name="y_true", invalid_value=c)
    thresholds, tps, fps = _threshold_counts(p[:, c], positive)
    return PrCurve(thresholds, tps / n_pos, tps / (tps + fps))


@dataclass
class EvalReport:
    """Everything ``evaluate`` measures on one split."""

    n_classes: int
    accuracy: float
    confusion: np.ndarray
    scores: PrfScores
    log_loss: float
    roc: RocReport
    pr_curves: List[Optional[PrCurve]]
    class_names: List[str] = field(default_factory=list)
    variant: Optional[str] = None
    train_accuracy: Optional[float] = None
    val_accuracy: Optional[float] = None

    @property
    def n_samples(self) -> int:
        return int(self.confusion.sum())

    @property
    def macro_auc(self) -> float:
        return self.roc.macro

    def to_dict(self) -> Dict[str, Any]:
        names = self.class_names or [str(c) for c in range(self.n_classes)]
        per_class = [
            {
                "class": c,
                "name": names[c],
                "precision": float(self.scores.precision[c]),
                "recall": float(self.scores.recall[c]),
                "f1": float(self.scores.f1[c]),
                "support": int(self.scores.support[c]),
                "auc": self.roc.per_class[c],
            }
            for c in range(self.n_classes)
        ]
        return {
            "schema": REPORT_SCHEMA,
            "version": REPORT_SCHEMA_VERSION,
            "variant": self.variant,
            "n_samples": self.n_samples,
            "accuracy": self.accuracy,
            "train_accuracy": self.train_accuracy,
            "val_accuracy": self.val_accuracy,
            "log_loss": self.log_loss,
            "macro_auc": self.roc.macro,
            "weighted": {
                "precision": self.scores.weighted_precision,
                "recall": self.scores.weighted_recall,
                "f1": self.scores.weighted_f1,
            },
            "macro": {
                "precision": self.scores.macro_precision,
                "recall": self.scores.macro_recall,
                "f1": self.scores.macro_f1,
            },
            "per_class": per_class,
            "confusion_matrix": self.confusion.tolist(),
        }


def report_from_probabilities(
    probs: np.ndarray,
    y_true: Sequence[int],
    class_names: Optional[Sequence[str]] = None,
    variant: Optional[str] = None,
) -> EvalReport:
    """
    Build the full report from predicted probabilities.

    Raises:
        DataError: No rows to evaluate
    """
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y_true, dtype=np.int64)
    if y.size == 0:
        raise DataError("empty test split")
    n_classes = p.shape[1]
    cm = confusion_matrix(y, predict_labels(p), n_classes)
    pr_curves: List[Optional[PrCurve]] = []
    for c in range(n_classes):
        if np.any(y == c):
            pr_curves.append(pr_curve(p, y, c))
        else:
            logger.warning(f"No positives for class {c}; PR curve skipped")
            pr_curves.append(None)
    return EvalReport(
        n_classes=n_classes,
        accuracy=accuracy_from_confusion(cm),
        confusion=cm,
        scores=prf_scores(cm),
        log_loss=log_loss(p, y),
        roc=roc_auc(p, y),
        pr_curves=pr_curves,
        class_names=list(class_names) if class_names else [],
        variant=variant,
    )


def evaluate(
    model: FusionModel,
    test: Batch,
    class_names: Optional[Sequence[str]] = None,
    variant: Optional[str] = None,
) -> EvalReport:
    """Score ``test`` in eval mode and compute every metric from one probability pass."""
    if test.rows == 0:
        raise DataError("empty test split")
    return report_from_probabilities(predict_proba(model, test), test.labels, class_names, variant)


__all__ = [
    "REPORT_SCHEMA",
    "confusion_matrix",
    "accuracy_from_confusion",
    "PrfScores",
    "prf_scores",
    "log_loss",
    "binary_auc",
    "RocCurve",
    "PrCurve",
    "RocReport",
    "roc_curve",
    "roc_auc",
    "pr_curve",
    "EvalReport",
    "report_from_probabilities",
    "evaluate",
]
