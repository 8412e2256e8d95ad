"""
Core Data Models - Numeric tables and aligned multimodal datasets.

FeatureMatrix and LabeledDataset are immutable value types: their arrays
are copied on construction and flagged read-only, so they can be shared
between threads and pipeline stages without defensive copies.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from sentifuse.core.exceptions import DataError, ValidationError


SPLIT_TAGS = ("train", "val", "test")
MODALITIES = ("text", "audio", "video")


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Dense row-major table of 64-bit reals with one name per column."""

    values: np.ndarray
    col_names: Tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValidationError(
                f"feature matrix must be 2-D, got shape {values.shape}",
                field_name="values",
            )
        names = tuple(str(name) for name in self.col_names)
        if len(names) != values.shape[1]:
            raise ValidationError(
                f"{len(names)} column names for {values.shape[1]} columns",
                field_name="col_names",
            )
        object.__setattr__(self, "values", _frozen(np.ascontiguousarray(values)))
        object.__setattr__(self, "col_names", names)

    @property
    def rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def cols(self) -> int:
        return int(self.values.shape[1])

    @classmethod
    def from_array(cls, values: np.ndarray, prefix: str = "f") -> "FeatureMatrix":
        """Wrap an array, naming columns ``<prefix>_<i>``."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        return cls(values, tuple(f"{prefix}_{i}" for i in range(values.shape[1])))

    @classmethod
    def empty(cls, rows: int) -> "FeatureMatrix":
        """A matrix with ``rows`` rows and no columns."""
        return cls(np.zeros((rows, 0)), ())

    def take_rows(self, indices: Sequence[int]) -> "FeatureMatrix":
        return FeatureMatrix(self.values[np.asarray(indices, dtype=np.int64)], self.col_names)

    def select_columns(self, indices: Sequence[int]) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureMatrix(self.values[:, idx], tuple(self.col_names[i] for i in idx))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return self.col_names == other.col_names and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"FeatureMatrix(rows={self.rows}, cols={self.cols})"


@dataclass(frozen=True, eq=False)
class ZScoreStats:
    """Per-column mean and population standard deviation."""

    mean: np.ndarray
    std: np.ndarray
    col_names: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValidationError("mean and std must be 1-D arrays of equal length")
        if np.any(std < 0):
            raise ValidationError("standard deviations must be non-negative", field_name="std")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "std", _frozen(std))
        object.__setattr__(self, "col_names", tuple(self.col_names))

    @property
    def constant(self) -> np.ndarray:
        """Boolean mask of columns whose standard deviation is exactly zero."""
        return self.std == 0.0

    @property
    def width(self) -> int:
        return int(self.mean.shape[0])

    def to_dict(self) -> Dict[str, List[float]]:
        return {
            "col_names": list(self.col_names),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ZScoreStats":
        return cls(np.asarray(data["mean"]), np.asarray(data["std"]), tuple(data.get("col_names", ())))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Three utterance-aligned modality views plus class labels and split tags."""

    text: FeatureMatrix
    audio: FeatureMatrix
    video: FeatureMatrix
    labels: np.ndarray
    split_tag: Optional[Tuple[str, ...]] = field(default=None)

    def __post_init__(self) -> None:
        rows = {self.text.rows, self.audio.rows, self.video.rows}
        if len(rows) != 1:
            raise DataError(
                "modality row counts differ: "
                f"text={self.text.rows}, audio={self.audio.rows}, video={self.video.rows}"
            )
        labels = np.asarray(self.labels)
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise ValidationError("labels must be integers", field_name="labels")
        labels = labels.astype(np.int64).reshape(-1)
        if labels.shape[0] != self.text.rows:
            raise DataError(f"{labels.shape[0]} labels for {self.text.rows} rows")
        if np.any(labels < 0):
            raise ValidationError("labels must be non-negative", field_name="labels")
        object.__setattr__(self, "labels", _frozen(labels))
        if self.split_tag is not None:
            tags = tuple(self.split_tag)
            if len(tags) != labels.shape[0]:
                raise DataError(f"{len(tags)} split tags for {labels.shape[0]} rows")
            unknown = set(tags) - set(SPLIT_TAGS)
            if unknown:
                raise ValidationError(
                    f"unknown split tags: {sorted(unknown)}", field_name="split_tag"
                )
            object.__setattr__(self, "split_tag", tags)

    @property
    def rows(self) -> int:
        return self.text.rows

    def view(self, modality: str) -> FeatureMatrix:
        if modality not in MODALITIES:
            raise ValidationError(f"unknown modality '{modality}'", field_name="modality")
        return getattr(self, modality)

    def views(self) -> Dict[str, FeatureMatrix]:
        return {name: self.view(name) for name in MODALITIES}

    def take(self, indices: Iterable[int], tag: Optional[str] = None) -> "LabeledDataset":
        """Rows ``indices`` (in that order) across every view, keeping alignment."""
        idx = np.asarray(list(indices), dtype=np.int64)
        if tag is not None:
            tags: Optional[Tuple[str, ...]] = (tag,) * len(idx)
        elif self.split_tag is not None:
            tags = tuple(self.split_tag[i] for i in idx)
        else:
            tags = None
        return LabeledDataset(
            self.text.take_rows(idx),
            self.audio.take_rows(idx),
            self.video.take_rows(idx),
            self.labels[idx],
            tags,
        )

    def with_split_tags(self, tags: Sequence[str]) -> "LabeledDataset":
        return LabeledDataset(self.text, self.audio, self.video, self.labels, tuple(tags))

    def split(self, tag: str) -> "LabeledDataset":
        """Rows carrying ``tag``, in their original order."""
        if self.split_tag is None:
            raise DataError("dataset carries no split tags")
        indices = [i for i, value in enumerate(self.split_tag) if value == tag]
        return self.take(indices)

    @classmethod
    def concat(cls, parts: Sequence["LabeledDataset"]) -> "LabeledDataset":
        """Rows of ``parts`` one after another; column names come from the first part."""
        if not parts:
            raise DataError("nothing to concatenate")

        def stack(modality: str) -> FeatureMatrix:
            first = parts[0].view(modality)
            return FeatureMatrix(np.vstack([p.view(modality).values for p in parts]), first.col_names)

        tagged = [p.split_tag is not None for p in parts]
        if any(tagged) and not all(tagged):
            raise DataError("cannot mix tagged and untagged datasets")
        tags = sum((tuple(p.split_tag) for p in parts), ()) if all(tagged) else None
        return cls(stack("text"), stack("audio"), stack("video"), np.concatenate([p.labels for p in parts]), tags)

    def class_counts(self, n_classes: Optional[int] = None) -> Dict[int, int]:
        minlength = n_classes or (int(self.labels.max()) + 1 if self.labels.size else 0)
        counts = np.bincount(self.labels, minlength=minlength)
        return {int(c): int(n) for c, n in enumerate(counts)}

    def __repr__(self) -> str:
        return (
            f"LabeledDataset(rows={self.rows}, text={self.text.cols}, "
            f"audio={self.audio.cols}, video={self.video.cols})"
        )


__all__ = [
    "SPLIT_TAGS",
    "MODALITIES",
    "FeatureMatrix",
    "ZScoreStats",
    "LabeledDataset",
]
