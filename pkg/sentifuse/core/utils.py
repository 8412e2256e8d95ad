"""
Core Utilities - Shared file and formatting helpers.

Every artifact the package writes (tables, models, reports, checkpoints,
plots) goes through the atomic writers here: content lands in a sibling
temporary file which then replaces the target, so a crashed run never
leaves a half-written output behind.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Union

from sentifuse.core.exceptions import DataError


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_float(value: float) -> str:
    """Shortest text that still round-trips: 17 significant digits."""
    return format(float(value), ".17g")


def ensure_directory(path: PathLike) -> Path:
    """Create ``path`` (and parents) or raise a DataError."""
    directory = Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"cannot create directory {directory}: {e}", path=str(directory))
    if not os.access(directory, os.W_OK):
        raise DataError(f"directory is not writable: {directory}", path=str(directory))
    return directory


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """
    Write ``payload`` to ``path`` via temp file + rename.

    Args:
        path: Destination file
        payload: Bytes to write

    Returns:
        The destination path

    Raises:
        DataError: If the directory or file cannot be written
    """
    target = Path(path)
    ensure_directory(target.parent)
    temp_file = target.with_name(target.name + ".tmp")
    try:
        with open(temp_file, "wb") as f:
            f.write(payload)
        temp_file.replace(target)
    except OSError as e:
        if temp_file.exists():
            temp_file.unlink()
        raise DataError(f"failed to write {target}: {e}", path=str(target))
    logger.debug(f"Wrote {target} ({len(payload)} bytes)")
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    """UTF-8 text with ``\\n`` line endings on every platform."""
    return atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: PathLike, data: Any) -> Path:
    """Pretty-printed, key-order-preserving JSON followed by a newline."""
    return atomic_write_text(path, json.dumps(data, indent=2, ensure_ascii=False) + "\n")


def read_json(path: PathLike) -> Any:
    """Load a JSON document, mapping I/O and syntax problems to DataError."""
    source = Path(path)
    if not source.exists():
        raise DataError(f"file not found: {source}", path=str(source))
    try:
        with open(source, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"invalid JSON in {source}: {e}", path=str(source))


__all__ = [
    "PathLike",
    "format_float",
    "ensure_directory",
    "atomic_write_bytes",
    "atomic_write_text",
    "atomic_write_json",
    "read_json",
]
