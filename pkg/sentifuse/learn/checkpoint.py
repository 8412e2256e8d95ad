"""
Checkpoint Codec - Versioned binary snapshots of a FusionModel.

Layout (all integers and reals little-endian):

    4 bytes   magic b"MFUS"
    u32       format version
    32 bytes  SHA-256 digest of the model spec's canonical JSON
    f64 ...   every tensor of ``tensor_layout(spec)`` in order, row-major,
              batch-norm running statistics included

The file length must match the spec exactly; loading never reshapes.
"""

import logging
import struct
from collections import OrderedDict
from pathlib import Path

import numpy as np

from sentifuse.core.exceptions import DataError, ModelStateError
from sentifuse.core.utils import PathLike, atomic_write_bytes
from sentifuse.learn.neural import FusionModel, ModelSpec, tensor_layout


logger = logging.getLogger(__name__)

MAGIC = b"MFUS"
FORMAT_VERSION = 1
DIGEST_SIZE = 32
HEADER = struct.Struct("<4sI32s")
CHECKPOINT_NAME = "ckpt_best.bin"


def encode_checkpoint(model: FusionModel) -> bytes:
    header = HEADER.pack(MAGIC, FORMAT_VERSION, model.spec.digest())
    body = b"".join(np.ascontiguousarray(t, dtype="<f8").tobytes() for _, t in model.tensors())
    return header + body


def decode_checkpoint(payload: bytes, spec: ModelSpec, source: str = "<bytes>") -> FusionModel:
    """
    Rebuild a model from checkpoint bytes.

    Raises:
        DataError: Bad magic, unknown version or truncated header
        ModelStateError: Digest or length does not match ``spec``
    """
    if len(payload) < HEADER.size:
        raise DataError(f"checkpoint {source} is truncated", path=source)
    magic, version, digest = HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise DataError(f"{source} is not a checkpoint (bad magic)", path=source)
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint version {version} in {source}", path=source)
    if digest != spec.digest():
        raise ModelStateError(f"checkpoint {source} was written for a different model spec")

    layout = tensor_layout(spec)
    expected = HEADER.size + 8 * sum(int(np.prod(shape)) for _, shape, _ in layout)
    if len(payload) != expected:
        raise ModelStateError(f"checkpoint {source} has {len(payload)} bytes, expected {expected}")

    params: "OrderedDict[str, np.ndarray]" = OrderedDict()
    buffers: "OrderedDict[str, np.ndarray]" = OrderedDict()
    offset = HEADER.size
    for name, shape, kind in layout:
        count = int(np.prod(shape))
        array = np.frombuffer(payload, dtype="<f8", count=count, offset=offset).astype(np.float64).reshape(shape)
        offset += 8 * count
        (params if kind == "param" else buffers)[name] = array
    return FusionModel(spec, params, buffers)


def save_checkpoint(model: FusionModel, path: PathLike) -> Path:
    """Write ``model`` atomically; returns the path written."""
    written = atomic_write_bytes(path, encode_checkpoint(model))
    logger.debug(f"Checkpoint written to {written}")
    return written


def load_checkpoint(path: PathLike, spec: ModelSpec) -> FusionModel:
    """
    Read a checkpoint written for ``spec``.

    Raises:
        DataError: Missing/unreadable file or malformed header
        ModelStateError: The checkpoint belongs to another architecture
    """
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read checkpoint {path}: {e}", path=str(path)) from e
    return decode_checkpoint(payload, spec, str(path))


__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "CHECKPOINT_NAME",
    "encode_checkpoint",
    "decode_checkpoint",
    "save_checkpoint",
    "load_checkpoint",
]
