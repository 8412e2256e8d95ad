"""
Diagnostic Export - History, report and curve files for a finished run.

Writes history.csv, confusion.csv, roc_<c>.csv, pr_<c>.csv and
report.json, plus one SVG per curve. SVGs are rendered by matplotlib's
SVG backend with a fixed hash salt and no date metadata, so identical
inputs give byte-identical files.
"""

import io
import logging
from pathlib import Path
from typing import List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from sentifuse.core.models import FeatureMatrix  # noqa: E402
from sentifuse.core.tables import save_table  # noqa: E402
from sentifuse.core.utils import PathLike, atomic_write_bytes, atomic_write_json, ensure_directory  # noqa: E402
from sentifuse.training.metrics import EvalReport  # noqa: E402
from sentifuse.training.trainer import HISTORY_COLUMNS, TrainHistory  # noqa: E402


logger = logging.getLogger(__name__)

SVG_RC = {
    "svg.hashsalt": "sentifuse",
    "svg.fonttype": "none",
    "figure.figsize": (6.0, 4.0),
    "font.size": 9,
}
REPORT_NAME = "report.json"
HISTORY_NAME = "history.csv"


def history_table(history: TrainHistory, include_timing: bool = False) -> FeatureMatrix:
    rows = []
    for record in history.records:
        row = list(record.as_row())
        if not include_timing:
            row[-1] = 0.0
        rows.append(row)
    values = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(HISTORY_COLUMNS))
    return FeatureMatrix(values, HISTORY_COLUMNS)


def _save_svg(fig, path: Path) -> Path:
    buffer = io.BytesIO()
    fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    return atomic_write_bytes(path, buffer.getvalue())


def plot_lines(
    path: Path,
    series: Sequence[tuple],
    title: str,
    xlabel: str,
    ylabel: str,
    diagonal: bool = False,
) -> Path:
    """One line per (x, y, label) triple."""
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots()
        for x, y, label in series:
            ax.plot(x, y, label=label, linewidth=1.2)
        if diagonal:
            ax.plot([0, 1], [0, 1], linestyle="--", color="grey", linewidth=0.8)
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if len(series) > 1:
            ax.legend()
        fig.tight_layout()
        return _save_svg(fig, path)


def plot_confusion(path: Path, cm: np.ndarray, class_names: Sequence[str]) -> Path:
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots()
        ax.imshow(cm, interpolation="nearest", cmap="Blues")
        ticks = np.arange(cm.shape[0])
        ax.set_xticks(ticks)
        ax.set_yticks(ticks)
        ax.set_xticklabels(class_names, rotation=45, ha="right")
        ax.set_yticklabels(class_names)
        threshold = cm.max() / 2.0 if cm.size else 0
        for i in range(cm.shape[0]):
            for j in range(cm.shape[1]):
                ax.text(j, i, str(int(cm[i, j])), ha="center", va="center",
                        color="white" if cm[i, j] > threshold else "black")
        ax.set_xlabel("Predicted label")
        ax.set_ylabel("True label")
        ax.set_title("Confusion matrix")
        fig.tight_layout()
        return _save_svg(fig, path)


def export_training(history: TrainHistory, out_dir: PathLike, include_timing: bool = False, svg: bool = True) -> List[Path]:
    """Write history.csv plus the loss and accuracy curves."""
    out = ensure_directory(out_dir)
    written: List[Path] = []
    if not len(history):
        return written
    table = history_table(history, include_timing)
    written.append(save_table(table, out / HISTORY_NAME))
    if svg:
        epochs = table.values[:, 0]
        written.append(plot_lines(
            out / "loss.svg",
            [(epochs, table.values[:, 1], "train"), (epochs, table.values[:, 3], "validation")],
            "Loss", "epoch", "loss",
        ))
        written.append(plot_lines(
            out / "accuracy.svg",
            [(epochs, table.values[:, 2], "train"), (epochs, table.values[:, 4], "validation")],
            "Accuracy", "epoch", "accuracy",
        ))
    return written


def export_report(
    report: EvalReport,
    out_dir: PathLike,
    history: Optional[TrainHistory] = None,
    svg: bool = True,
) -> List[Path]:
    """
    Write report.json, the confusion matrix and per-class ROC/PR curves.

    Args:
        report: Evaluation report
        out_dir: Destination directory
        history: Adds a "training" summary to report.json when given
        svg: Render SVG plots as well as CSVs

    Returns:
        Paths written
    """
    out = ensure_directory(out_dir)
    written: List[Path] = []
    names = report.class_names or [str(c) for c in range(report.n_classes)]

    confusion = FeatureMatrix(report.confusion.astype(np.float64), tuple(f"pred_{c}" for c in range(report.n_classes)))
    written.append(save_table(confusion, out / "confusion.csv", labels=list(range(report.n_classes)), label_column="true"))
    if svg:
        written.append(plot_confusion(out / "confusion.svg", report.confusion, names))

    for c, curve in enumerate(report.roc.curves):
        if curve is None:
            continue
        points = FeatureMatrix(np.column_stack([curve.thresholds, curve.fpr, curve.tpr]), ("threshold", "fpr", "tpr"))
        written.append(save_table(points, out / f"roc_{c}.csv"))
        if svg:
            written.append(plot_lines(
                out / f"roc_{c}.svg", [(curve.fpr, curve.tpr, names[c])],
                f"ROC {names[c]} (AUC {curve.auc:.4f})", "false positive rate", "true positive rate", diagonal=True,
            ))

    for c, pr in enumerate(report.pr_curves):
        if pr is None:
            continue
        points = FeatureMatrix(np.column_stack([pr.thresholds, pr.recall, pr.precision]), ("threshold", "recall", "precision"))
        written.append(save_table(points, out / f"pr_{c}.csv"))
        if svg:
            written.append(plot_lines(
                out / f"pr_{c}.svg", [(pr.recall, pr.precision, names[c])],
                f"Precision-recall {names[c]}", "recall", "precision",
            ))

    document = report.to_dict()
    if history is not None:
        document["training"] = history.to_dict()
    written.append(atomic_write_json(out / REPORT_NAME, document))
    return written


def export_history(
    history: Optional[TrainHistory],
    report: EvalReport,
    out_dir: PathLike,
    include_timing: bool = False,
    svg: bool = True,
) -> List[Path]:
    """
    Write every diagnostic file of a run into ``out_dir``.

    Args:
        history: Training history; skipped when None (evaluation of a loaded checkpoint)
        report: Evaluation report
        out_dir: Destination directory
        include_timing: Write measured epoch seconds instead of 0
        svg: Render SVG plots as well as CSVs

    Returns:
        Paths written

    Raises:
        DataError: The directory cannot be created or written
    """
    written: List[Path] = []
    if history is not None:
        written.extend(export_training(history, out_dir, include_timing, svg))
    written.extend(export_report(report, out_dir, history, svg))
    logger.info(f"Exported {len(written)} files to {out_dir}")
    return written


__all__ = [
    "REPORT_NAME",
    "HISTORY_NAME",
    "history_table",
    "plot_lines",
    "plot_confusion",
    "export_training",
    "export_report",
    "export_history",
]
