"""
Trainer - Mini-batch Adam training with early stopping and plateau LR decay.

The loop shuffles the training rows each epoch from a seeded substream,
steps Adam on every batch (the last partial batch included), scores the
validation split in eval mode and lets two independent callbacks react
to the validation loss. The weights with the lowest validation loss seen
are restored when training ends.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from sentifuse.core.config_schemas import TrainConfig
from sentifuse.core.exceptions import DataError, NumericError
from sentifuse.core.rng import SeededRng
from sentifuse.core.utils import PathLike
from sentifuse.learn.checkpoint import save_checkpoint
from sentifuse.learn.mathops import mean_nll, predict_labels
from sentifuse.learn.neural import AdamState, Batch, FusionModel, adam_step, backward, forward, predict_proba


logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc", "lr", "seconds")


class EarlyStopping:
    """
    Stop after ``patience`` epochs without a val-loss decrease larger than
    ``min_delta``.
    """

    def __init__(self, patience: int = 5, min_delta: float = 1e-4):
        self.patience = patience
        self.min_delta = min_delta
        self.best_loss = math.inf
        self.best_epoch = 0
        self.counter = 0
        self.stopped_epoch: Optional[int] = None

    def step(self, val_loss: float, epoch: int) -> bool:
        """Record one epoch; returns True when training should stop."""
        if val_loss < self.best_loss - self.min_delta:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.counter = 0
            return False
        self.counter += 1
        if self.counter >= self.patience:
            self.stopped_epoch = epoch
            return True
        return False


class ReduceLROnPlateau:
    """
    Multiply the learning rate by ``factor`` after ``patience`` stagnant
    epochs, never going below ``min_lr``. The stagnation counter restarts
    on improvement and after every reduction.
    """

    def __init__(self, patience: int = 3, factor: float = 0.5, min_lr: float = 1e-6, min_delta: float = 1e-4):
        self.patience = patience
        self.factor = factor
        self.min_lr = min_lr
        self.min_delta = min_delta
        self.best_loss = math.inf
        self.counter = 0
        self.reductions: List[int] = []

    def step(self, val_loss: float, lr: float, next_epoch: int = 0) -> float:
        """Record one epoch; returns the learning rate for the next one."""
        if val_loss < self.best_loss - self.min_delta:
            self.best_loss = val_loss
            self.counter = 0
            return lr
        self.counter += 1
        if self.counter < self.patience:
            return lr
        self.counter = 0
        new_lr = max(lr * self.factor, self.min_lr)
        if new_lr < lr:
            self.reductions.append(next_epoch)
            logger.info(f"Learning rate reduced to {new_lr:.3g} from epoch {next_epoch}")
        return new_lr


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    lr: float
    seconds: float

    def as_row(self) -> Tuple[float, ...]:
        return (self.epoch, self.train_loss, self.train_acc, self.val_loss, self.val_acc, self.lr, self.seconds)


@dataclass
class TrainHistory:
    """One record per completed epoch plus callback outcomes."""

    records: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = math.inf
    stopped_epoch: Optional[int] = None
    lr_reductions: List[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def val_losses(self) -> List[float]:
        return [r.val_loss for r in self.records]

    @property
    def learning_rates(self) -> List[float]:
        return [r.lr for r in self.records]

    def to_dict(self) -> Dict:
        return {
            "epochs": len(self.records),
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
            "stopped_epoch": self.stopped_epoch,
            "lr_reductions": list(self.lr_reductions),
        }


def batch_accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(predict_labels(probs) == labels)) if labels.size else 0.0


def train_loop(
    model: FusionModel,
    datasets: Mapping[str, Batch],
    cfg: Optional[TrainConfig] = None,
    rng: Optional[SeededRng] = None,
    checkpoint_path: Optional[PathLike] = None,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> Tuple[FusionModel, TrainHistory]:
    """
    Train ``model`` in place on ``datasets["train"]``, monitoring ``datasets["val"]``.

    Args:
        model: Freshly initialized model
        datasets: "train" and "val" batches
        cfg: Optimizer and callback settings
        rng: Stream for shuffling and dropout; derived from ``cfg.seed`` when omitted
        checkpoint_path: Written every time the validation loss reaches a new minimum
        on_epoch: Called with each completed epoch record

    Returns:
        The model holding its best weights, and the history

    Raises:
        DataError: Missing or empty train/val split
        NumericError: Non-finite loss or gradient
    """
    cfg = cfg or TrainConfig()
    train = datasets.get("train")
    val = datasets.get("val")
    if train is None or train.rows == 0:
        raise DataError("empty training split")
    if val is None or val.rows == 0:
        raise DataError("empty validation split")
    rng = rng or SeededRng(cfg.seed or 0)

    state = AdamState(lr=cfg.lr)
    stopper = EarlyStopping(cfg.early_stop_patience, cfg.min_delta)
    plateau = ReduceLROnPlateau(cfg.plateau_patience, cfg.plateau_factor, cfg.min_lr, cfg.min_delta)
    history = TrainHistory()
    best_snapshot = model.snapshot()
    lr = cfg.lr

    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        state.lr = lr
        order = rng.spawn("shuffle").spawn(epoch).permutation(train.rows)
        dropout_rng = rng.spawn("dropout").spawn(epoch)
        loss_sum = 0.0
        correct = 0
        for start in range(0, train.rows, cfg.batch_size):
            batch = train.take(order[start : start + cfg.batch_size])
            probs, cache = forward(model, batch, "train", dropout_rng)
            batch_loss = mean_nll(probs, batch.labels)
            if not math.isfinite(batch_loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            grads = backward(model, batch, cache)
            adam_step(model, grads, state)
            loss_sum += batch_loss * batch.rows
            correct += int(np.sum(predict_labels(probs) == batch.labels))

        val_probs = predict_proba(model, val)
        val_loss = mean_nll(val_probs, val.labels)
        record = EpochRecord(
            epoch,
            loss_sum / train.rows,
            correct / train.rows,
            val_loss,
            batch_accuracy(val_probs, val.labels),
            lr,
            time.perf_counter() - started,
        )
        history.records.append(record)
        logger.info(
            f"Epoch {epoch}/{cfg.epochs}: loss {record.train_loss:.4f} acc {record.train_acc:.4f} "
            f"val_loss {record.val_loss:.4f} val_acc {record.val_acc:.4f} lr {lr:.3g}"
        )
        if on_epoch is not None:
            on_epoch(record)

        if val_loss < history.best_val_loss:
            history.best_val_loss = val_loss
            history.best_epoch = epoch
            best_snapshot = model.snapshot()
            if checkpoint_path is not None:
                save_checkpoint(model, checkpoint_path)

        should_stop = stopper.step(val_loss, epoch)
        lr = plateau.step(val_loss, lr, epoch + 1)
        if should_stop:
            history.stopped_epoch = epoch
            logger.info(f"Early stopping after epoch {epoch}; best epoch {history.best_epoch}")
            break

    history.lr_reductions = list(plateau.reductions)
    model.restore(best_snapshot)
    return model, history


__all__ = [
    "HISTORY_COLUMNS",
    "EarlyStopping",
    "ReduceLROnPlateau",
    "EpochRecord",
    "TrainHistory",
    "batch_accuracy",
    "train_loop",
]
