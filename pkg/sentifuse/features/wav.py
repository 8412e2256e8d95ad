"""
WAV codec - PCM 16-bit RIFF/WAVE reading and writing.

Decoding is delegated to ``scipy.io.wavfile``; this module restricts the
accepted encodings, downmixes stereo and maps failures onto DataError.
"""

import io
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from sentifuse.core.exceptions import DataError, ValidationError
from sentifuse.core.utils import PathLike, atomic_write_bytes


logger = logging.getLogger(__name__)

PCM16_SCALE = 32768.0


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono samples in [-1, 1] at ``sample_rate`` Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate <= 0:
            raise ValidationError("sample_rate must be positive", field_name="sample_rate", invalid_value=self.sample_rate)
        if samples.size == 0:
            raise ValidationError("audio clip has no samples", field_name="samples")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.shape[0] / self.sample_rate

    def __len__(self) -> int:
        return int(self.samples.shape[0])


def read_wav(path: PathLike) -> AudioClip:
    """
    Decode a PCM 16-bit little-endian WAV file; stereo is averaged to mono.

    Raises:
        DataError: Missing file, malformed RIFF structure or unsupported encoding
    """
    source = Path(path)
    if not source.exists():
        raise DataError(f"file not found: {source}", path=str(source))
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", wavfile.WavFileWarning)
            sample_rate, data = wavfile.read(str(source))
        for warning in caught:
            logger.debug(f"{source.name}: {warning.message}")
    except (ValueError, EOFError) as e:
        raise DataError(f"cannot decode WAV file: {e}", path=str(source))

    if data.dtype != np.int16:
        raise DataError(f"unsupported sample format {data.dtype} (expected PCM 16-bit)", path=str(source))
    samples = data.astype(np.float64) / PCM16_SCALE
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.size == 0:
        raise DataError("WAV file contains no samples", path=str(source))
    return AudioClip(samples, int(sample_rate))


def encode_pcm16(samples: np.ndarray) -> np.ndarray:
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return np.round(clipped * (PCM16_SCALE - 1.0)).astype("<i2")


def write_wav(path: PathLike, clip: AudioClip) -> Path:
    """Write a mono PCM 16-bit WAV file atomically; samples are clipped to [-1, 1]."""
    buffer = io.BytesIO()
    wavfile.write(buffer, clip.sample_rate, encode_pcm16(clip.samples))
    return atomic_write_bytes(path, buffer.getvalue())


__all__ = ["AudioClip", "read_wav", "write_wav", "encode_pcm16"]
