"""
Resampling - Label remapping, stratified splitting and targeted oversampling.

Splits are computed per class so every split mirrors the class mix of the
whole dataset. Oversampling touches only the training split and always
duplicates whole rows, keeping the three modality views aligned.
"""

import logging
import math
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from sentifuse.core.config_schemas import LabelMap, TargetCounts
from sentifuse.core.exceptions import DataError, ValidationError
from sentifuse.core.models import LabeledDataset
from sentifuse.core.rng import SeededRng


logger = logging.getLogger(__name__)

MIN_CLASS_SIZE = 3
DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)


def _mapping(m: Union[LabelMap, Mapping[int, int]]) -> Dict[int, int]:
    return dict(m.root) if isinstance(m, LabelMap) else {int(k): int(v) for k, v in m.items()}


def remap_labels(y: Sequence[int], m: Union[LabelMap, Mapping[int, int]]) -> np.ndarray:
    """
    Map every label through ``m``.

    Raises:
        ValidationError: A label outside the map's domain (the message names it)
    """
    mapping = _mapping(m)
    labels = np.asarray(y, dtype=np.int64).reshape(-1)
    out = np.empty_like(labels)
    for i, label in enumerate(labels):
        value = int(label)
        if value not in mapping:
            raise ValidationError(
                f"label {value} at row {i + 1} is not in the label map", field_name="y", invalid_value=value
            )
        out[i] = mapping[value]
    return out


def class_counts(labels: Sequence[int], n_classes: Optional[int] = None) -> Dict[int, int]:
    y = np.asarray(labels, dtype=np.int64)
    minlength = n_classes or (int(y.max()) + 1 if y.size else 0)
    return {int(c): int(n) for c, n in enumerate(np.bincount(y, minlength=minlength))}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _check_class_sizes(labels: np.ndarray) -> np.ndarray:
    classes, counts = np.unique(labels, return_counts=True)
    small = [(int(c), int(n)) for c, n in zip(classes, counts) if n < MIN_CLASS_SIZE]
    if small:
        detail = ", ".join(f"class {c}: {n}" for c, n in small)
        raise DataError(f"every class needs at least {MIN_CLASS_SIZE} samples to split ({detail})")
    return classes


def stratified_split_tags(
    labels: Sequence[int], fractions: Tuple[float, float, float], rng: SeededRng
) -> Tuple[str, ...]:
    """
    Per class: shuffle, then give round(f * n) rows to val and to test and the
    rest to train.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValidationError("fractions must be three non-negative values summing to 1", field_name="fractions")
    y = np.asarray(labels, dtype=np.int64)
    tags = np.empty(y.shape[0], dtype=object)
    _, f_val, f_test = fractions
    for c in _check_class_sizes(y):
        members = np.flatnonzero(y == c)
        shuffled = members[rng.spawn(int(c)).permutation(members.shape[0])]
        n_val = _round_half_up(f_val * members.shape[0])
        n_test = _round_half_up(f_test * members.shape[0])
        n_train = members.shape[0] - n_val - n_test
        if n_train < 0:
            raise DataError(f"class {int(c)} too small for the requested fractions")
        tags[shuffled[:n_train]] = "train"
        tags[shuffled[n_train : n_train + n_val]] = "val"
        tags[shuffled[n_train + n_val :]] = "test"
    return tuple(str(tag) for tag in tags)


def stratified_split(
    ds: LabeledDataset, fractions: Tuple[float, float, float] = DEFAULT_FRACTIONS, rng: Optional[SeededRng] = None
) -> LabeledDataset:
    """Tag every row train/val/test with per-class proportions."""
    tags = stratified_split_tags(ds.labels, fractions, rng or SeededRng(0))
    return ds.with_split_tags(tags)


def nested_holdout_split_tags(
    labels: Sequence[int], test_fraction: float, val_fraction: float, rng: SeededRng
) -> Tuple[str, ...]:
    """Hold out ``test_fraction`` per class, then ``val_fraction`` of what remains."""
    y = np.asarray(labels, dtype=np.int64)
    tags = np.empty(y.shape[0], dtype=object)
    for c in _check_class_sizes(y):
        members = np.flatnonzero(y == c)
        shuffled = members[rng.spawn(int(c)).permutation(members.shape[0])]
        n_test = _round_half_up(test_fraction * members.shape[0])
        n_val = _round_half_up(val_fraction * (members.shape[0] - n_test))
        n_train = members.shape[0] - n_test - n_val
        if n_train < 1:
            raise DataError(f"class {int(c)} too small for the requested fractions")
        tags[shuffled[:n_train]] = "train"
        tags[shuffled[n_train : n_train + n_val]] = "val"
        tags[shuffled[n_train + n_val :]] = "test"
    return tuple(str(tag) for tag in tags)


def nested_holdout_split(
    ds: LabeledDataset, test_fraction: float = 0.2, val_fraction: float = 0.1, rng: Optional[SeededRng] = None
) -> LabeledDataset:
    tags = nested_holdout_split_tags(ds.labels, test_fraction, val_fraction, rng or SeededRng(0))
    return ds.with_split_tags(tags)


def oversample_to_targets(
    ds: LabeledDataset, targets: Union[TargetCounts, Mapping[int, int]], rng: SeededRng
) -> LabeledDataset:
    """
    Top up every class below its target by drawing its rows with replacement.

    Classes at or above target are left as they are. Duplicated rows copy
    all three modality views and the label together; the result is shuffled.

    Raises:
        DataError: A class present in ``ds`` has no target
    """
    wanted = dict(targets.root) if isinstance(targets, TargetCounts) else {int(k): int(v) for k, v in targets.items()}
    present = sorted(int(c) for c in np.unique(ds.labels))
    missing = [c for c in present if c not in wanted]
    if missing:
        raise DataError(f"no oversampling target for class(es) {missing}")

    extra = []
    for c in present:
        members = np.flatnonzero(ds.labels == c)
        deficit = wanted[c] - members.shape[0]
        if deficit <= 0:
            continue
        draws = rng.spawn(c).integers(0, members.shape[0], size=deficit)
        extra.append(members[draws])
        logger.debug(f"Class {c}: {members.shape[0]} -> {wanted[c]} rows")

    order = np.concatenate([np.arange(ds.rows)] + extra) if extra else np.arange(ds.rows)
    order = order[rng.spawn("shuffle").permutation(order.shape[0])]
    return ds.take(order)


def rebalance_training_split(
    ds: LabeledDataset, targets: Union[TargetCounts, Mapping[int, int]], rng: SeededRng
) -> LabeledDataset:
    """Oversampled train rows followed by the untouched val and test rows."""
    train = oversample_to_targets(ds.split("train"), targets, rng)
    logger.info(f"Training rows after oversampling: {train.rows} (per class {class_counts(train.labels)})")
    return LabeledDataset.concat([train, ds.split("val"), ds.split("test")])


__all__ = [
    "MIN_CLASS_SIZE",
    "remap_labels",
    "class_counts",
    "stratified_split_tags",
    "stratified_split",
    "nested_holdout_split_tags",
    "nested_holdout_split",
    "oversample_to_targets",
    "rebalance_training_split",
]
