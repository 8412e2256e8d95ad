"""
Feature Tables - Z-score scaling, column algebra and table file I/O.

Shared by every modality pipeline. Arithmetic is 64-bit throughout and
the standard deviation is the population (1/n) form; constant columns
scale to zero instead of NaN.
"""

import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from sentifuse.core.exceptions import DataError, ValidationError
from sentifuse.core.models import FeatureMatrix, ZScoreStats
from sentifuse.core.utils import PathLike, atomic_write_text, format_float


logger = logging.getLogger(__name__)

TABLE_FORMATS = ("csv", "jsonl")
MISSING_MARKERS = {"", "nan"}


def zscore_fit(m: FeatureMatrix) -> ZScoreStats:
    """
    Per-column mean and population standard deviation.

    Raises:
        ValidationError: If the matrix has no rows ("empty input")
    """
    if m.rows < 1:
        raise ValidationError("empty input", field_name="m")
    mean = m.values.mean(axis=0)
    std = np.sqrt(((m.values - mean) ** 2).mean(axis=0))
    stats = ZScoreStats(mean, std, m.col_names)
    n_constant = int(stats.constant.sum())
    if n_constant:
        logger.debug(f"{n_constant} constant column(s) will scale to 0")
    return stats


def _check_width(m: FeatureMatrix, s: ZScoreStats) -> None:
    if m.cols != s.width:
        raise ValidationError(
            f"column mismatch: matrix has {m.cols} columns, statistics cover {s.width}",
            field_name="m",
        )


def zscore_apply(m: FeatureMatrix, s: ZScoreStats) -> FeatureMatrix:
    """(x - mean) / std per entry; constant columns become 0."""
    _check_width(m, s)
    safe_std = np.where(s.constant, 1.0, s.std)
    scaled = (m.values - s.mean) / safe_std
    scaled[:, s.constant] = 0.0
    return FeatureMatrix(scaled, m.col_names)


def zscore_inverse(m: FeatureMatrix, s: ZScoreStats) -> FeatureMatrix:
    """Undo ``zscore_apply``; constant columns come back as their mean."""
    _check_width(m, s)
    return FeatureMatrix(m.values * s.std + s.mean, m.col_names)


def concat_columns(a: FeatureMatrix, b: FeatureMatrix) -> FeatureMatrix:
    """Columns of ``a`` followed by columns of ``b``, row order preserved."""
    if a.rows != b.rows:
        raise ValidationError(f"row mismatch: {a.rows} vs {b.rows}", field_name="b")
    return FeatureMatrix(np.hstack([a.values, b.values]), a.col_names + b.col_names)


def pad_columns(m: FeatureMatrix, target: int) -> FeatureMatrix:
    """Append all-zero columns named ``pad_<i>`` until the width is ``target``."""
    if m.cols > target:
        raise ValidationError(
            f"cannot truncate: matrix has {m.cols} columns, target is {target}",
            field_name="target",
            invalid_value=target,
        )
    extra = target - m.cols
    if extra == 0:
        return m
    names = tuple(f"pad_{i}" for i in range(m.cols, target))
    return FeatureMatrix(np.hstack([m.values, np.zeros((m.rows, extra))]), m.col_names + names)


def _infer_format(path: Path, fmt: Optional[str]) -> str:
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in TABLE_FORMATS:
        raise DataError(f"unsupported table format '{fmt}' (expected csv or jsonl)", path=str(path))
    return fmt


def _parse_cell(raw: str, row: int, column: str, path: Path, allow_missing: bool) -> float:
    cell = raw.strip()
    if cell.lower() in MISSING_MARKERS:
        if allow_missing:
            return math.nan
        raise DataError(f"row {row}, column '{column}': missing value", path=str(path), row=row)
    try:
        value = float(cell)
    except ValueError:
        raise DataError(
            f"row {row}, column '{column}': non-numeric value '{cell}'", path=str(path), row=row
        )
    if not math.isfinite(value):
        raise DataError(f"row {row}, column '{column}': non-finite value '{cell}'", path=str(path), row=row)
    return value


def _parse_json_value(value, row: int, column: str, path: Path, allow_missing: bool) -> float:
    if value is None or (isinstance(value, str) and value.strip().lower() in MISSING_MARKERS):
        if allow_missing:
            return math.nan
        raise DataError(f"row {row}, column '{column}': missing value", path=str(path), row=row)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(
            f"row {row}, column '{column}': non-numeric value {value!r}", path=str(path), row=row
        )
    if not math.isfinite(value):
        raise DataError(f"row {row}, column '{column}': non-finite value", path=str(path), row=row)
    return float(value)


def _read_csv_rows(path: Path, allow_missing: bool) -> Tuple[List[str], List[List[float]]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header:
            raise DataError("table has no header row", path=str(path))
        header = [name.strip() for name in header]
        rows: List[List[float]] = []
        for record in reader:
            if not record:
                continue
            row = len(rows) + 1
            if len(record) != len(header):
                raise DataError(
                    f"row {row}: expected {len(header)} fields, got {len(record)}",
                    path=str(path),
                    row=row,
                )
            rows.append(
                [_parse_cell(cell, row, name, path, allow_missing) for cell, name in zip(record, header)]
            )
    return header, rows


def _read_jsonl_rows(path: Path, allow_missing: bool) -> Tuple[List[str], List[List[float]]]:
    header: List[str] = []
    rows: List[List[float]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            row = len(rows) + 1
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"row {row}: invalid JSON: {e}", path=str(path), row=row)
            if not isinstance(record, dict):
                raise DataError(f"row {row}: expected a JSON object", path=str(path), row=row)
            if not header:
                header = [str(key) for key in record]
            if len(record) != len(header) or any(key not in record for key in header):
                raise DataError(
                    f"row {row}: expected {len(header)} fields {header}, got {list(record)}",
                    path=str(path),
                    row=row,
                )
            rows.append(
                [_parse_json_value(record[name], row, name, path, allow_missing) for name in header]
            )
    if not header:
        raise DataError("table has no records", path=str(path))
    return header, rows


def load_table(
    path: PathLike,
    format: Optional[str] = None,
    label_column: Optional[str] = None,
    allow_missing: bool = False,
) -> Tuple[FeatureMatrix, Optional[np.ndarray]]:
    """
    Read a numeric CSV or JSONL table.

    Args:
        path: Table file
        format: "csv" or "jsonl"; inferred from the suffix when omitted
        label_column: Column to split off as integer labels
        allow_missing: Map empty cells, "NaN" and null to NaN instead of failing

    Returns:
        The feature matrix and, when ``label_column`` is given, the labels

    Raises:
        DataError: Missing file, ragged rows, non-numeric cells, unknown label column
    """
    source = Path(path)
    fmt = _infer_format(source, format)
    if not source.exists():
        raise DataError(f"file not found: {source}", path=str(source))

    if fmt == "csv":
        header, rows = _read_csv_rows(source, allow_missing)
    else:
        header, rows = _read_jsonl_rows(source, allow_missing)

    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    labels: Optional[np.ndarray] = None
    if label_column is not None:
        if label_column not in header:
            raise DataError(f"label column '{label_column}' not found", path=str(source))
        position = header.index(label_column)
        raw_labels = values[:, position]
        if np.any(np.isnan(raw_labels)) or np.any(raw_labels != np.round(raw_labels)):
            raise DataError(f"label column '{label_column}' must hold integers", path=str(source))
        labels = raw_labels.astype(np.int64)
        values = np.delete(values, position, axis=1)
        header = header[:position] + header[position + 1:]

    logger.debug(f"Loaded {source}: {values.shape[0]} rows x {values.shape[1]} columns")
    return FeatureMatrix(values, tuple(header)), labels


def _format_value(value: float) -> str:
    return "NaN" if math.isnan(value) else format_float(value)


def save_table(
    m: FeatureMatrix,
    path: PathLike,
    format: Optional[str] = None,
    labels: Optional[Sequence[int]] = None,
    label_column: str = "label",
) -> Path:
    """
    Write a table with 17-significant-digit floats; the inverse of ``load_table``.

    Args:
        m: Matrix to write
        path: Destination file
        format: "csv" or "jsonl"; inferred from the suffix when omitted
        labels: Optional integer labels appended as ``label_column``
        label_column: Name of the label column

    Returns:
        The written path
    """
    target = Path(path)
    fmt = _infer_format(target, format)
    label_values = None if labels is None else np.asarray(labels, dtype=np.int64)
    if label_values is not None and label_values.shape[0] != m.rows:
        raise DataError(f"{label_values.shape[0]} labels for {m.rows} rows", path=str(target))

    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        header = list(m.col_names) + ([label_column] if label_values is not None else [])
        writer.writerow(header)
        for i in range(m.rows):
            cells = [_format_value(v) for v in m.values[i]]
            if label_values is not None:
                cells.append(str(int(label_values[i])))
            writer.writerow(cells)
        text = buffer.getvalue()
    else:
        lines = []
        for i in range(m.rows):
            fields = [
                f"{json.dumps(name)}: {'null' if math.isnan(v) else format_float(v)}"
                for name, v in zip(m.col_names, m.values[i])
            ]
            if label_values is not None:
                fields.append(f"{json.dumps(label_column)}: {int(label_values[i])}")
            lines.append("{" + ", ".join(fields) + "}\n")
        text = "".join(lines)
    return atomic_write_text(target, text)


def read_manifest(path: PathLike, required_columns: Sequence[str]) -> List[Dict[str, str]]:
    """
    Read a text CSV manifest (transcripts, clip paths) into row dictionaries.

    Raises:
        DataError: Missing file, missing required columns or ragged rows
    """
    source = Path(path)
    if not source.exists():
        raise DataError(f"file not found: {source}", path=str(source))
    with open(source, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header:
            raise DataError("manifest has no header row", path=str(source))
        header = [name.strip() for name in header]
        missing = [name for name in required_columns if name not in header]
        if missing:
            raise DataError(f"manifest lacks column(s): {', '.join(missing)}", path=str(source))
        records: List[Dict[str, str]] = []
        for record in reader:
            if not record:
                continue
            row = len(records) + 1
            if len(record) != len(header):
                raise DataError(
                    f"row {row}: expected {len(header)} fields, got {len(record)}",
                    path=str(source),
                    row=row,
                )
            records.append(dict(zip(header, record)))
    return records


def parse_label(raw: str, row: int, path: PathLike) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise DataError(f"row {row}: label '{raw}' is not an integer", path=str(path), row=row)


__all__ = [
    "TABLE_FORMATS",
    "zscore_fit",
    "zscore_apply",
    "zscore_inverse",
    "concat_columns",
    "pad_columns",
    "load_table",
    "save_table",
    "read_manifest",
    "parse_label",
]
