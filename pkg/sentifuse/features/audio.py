"""
Audio Pipeline - Utterance-level acoustic features from PCM clips.

Per-frame descriptors (MFCC and deltas, spectral shape, chroma, zero
crossings, RMS energy) are summarized by their mean and standard
deviation over frames; clip-level harmonic ratio, silence ratio and
autocorrelation peak are appended. The fitted AudioFeaturizer z-scores
the vectors and optionally appends GBDT leaf embeddings.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.fftpack import dct
from scipy.ndimage import median_filter
from scipy.signal import correlate, get_window

from sentifuse.core.config_schemas import AudioSettings, FrameConfig, GbdtConfig
from sentifuse.core.exceptions import DataError, ModelStateError, ValidationError
from sentifuse.core.models import FeatureMatrix, ZScoreStats
from sentifuse.core.rng import SeededRng
from sentifuse.core.tables import concat_columns, zscore_apply, zscore_fit
from sentifuse.features.wav import AudioClip, read_wav
from sentifuse.learn.gbdt import GbdtModel, gbdt_fit, leaf_embeddings


logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-10
CHROMA_MIN_HZ = 27.5
N_CHROMA = 12
AUDIO_SCHEMA = "sentifuse-audio"
AUDIO_SCHEMA_VERSION = 1


def audio_feature_names(n_mfcc: int = 13) -> Tuple[str, ...]:
    """Column names of the utterance vector, in output order."""
    names: List[str] = []
    for block in ("mfcc_mean", "mfcc_std", "delta_mfcc_mean", "delta_mfcc_std"):
        names.extend(f"{block}_{i}" for i in range(n_mfcc))
    for feature in ("centroid", "bandwidth", "rolloff"):
        names.extend((f"{feature}_mean", f"{feature}_std"))
    names.extend(f"chroma_mean_{i}" for i in range(N_CHROMA))
    names.extend(("zcr_mean", "zcr_std", "rmse_mean", "rmse_std"))
    names.extend(("harmonic_ratio", "silence_ratio", "autocorr_peak"))
    return tuple(names)


AUDIO_FEATURE_NAMES = audio_feature_names()
AUDIO_FEATURE_WIDTH = len(AUDIO_FEATURE_NAMES)


def fft_size_for(frame_length: int) -> int:
    """Smallest power of two holding one frame."""
    return 1 << max(0, (frame_length - 1).bit_length())


def _frames(samples: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    if samples.shape[0] < cfg.frame_length:
        raise DataError(
            f"clip shorter than one frame: {samples.shape[0]} samples, frame_length {cfg.frame_length}"
        )
    return np.lib.stride_tricks.sliding_window_view(samples, cfg.frame_length)[:: cfg.hop_length]


def stft_magnitude(clip: AudioClip, cfg: FrameConfig) -> np.ndarray:
    """
    Hann-windowed magnitude spectrogram, frames x (fft_size / 2 + 1).

    Frames are zero-padded to the next power of two before the FFT.

    Raises:
        DataError: If the clip is shorter than one frame
    """
    frames = _frames(clip.samples, cfg)
    window = get_window(cfg.window, cfg.frame_length, fftbins=True)
    return np.abs(np.fft.rfft(frames * window, n=fft_size_for(cfg.frame_length), axis=1))


def bin_frequencies(n_bins: int, sample_rate: int) -> np.ndarray:
    return np.fft.rfftfreq(2 * (n_bins - 1), d=1.0 / sample_rate)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, n_bins: int, n_mels: int = 40) -> np.ndarray:
    """
    Triangular HTK-scale filters spanning 0 Hz to Nyquist, n_mels x n_bins.

    Each filter is scaled by 2 / (upper edge - lower edge) so all filters
    carry the same area.
    """
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    freqs = bin_frequencies(n_bins, sample_rate)
    bank = np.zeros((n_mels, n_bins), dtype=np.float64)
    for m in range(n_mels):
        lower, center, upper = edges[m], edges[m + 1], edges[m + 2]
        rising = (freqs - lower) / (center - lower)
        falling = (upper - freqs) / (upper - center)
        bank[m] = np.maximum(0.0, np.minimum(rising, falling)) * (2.0 / (upper - lower))
    return bank


def log_mel_energies(mag: np.ndarray, sample_rate: int, n_mels: int = 40) -> np.ndarray:
    power = np.asarray(mag, dtype=np.float64) ** 2
    return np.log(power @ mel_filterbank(sample_rate, power.shape[1], n_mels).T + LOG_FLOOR)


def delta(features: np.ndarray, width: int = 9) -> np.ndarray:
    """Least-squares slope over a centered window; edges are replicated."""
    if width < 3 or width % 2 == 0:
        raise ValidationError("delta width must be odd and at least 3", field_name="width", invalid_value=width)
    half = width // 2
    padded = np.pad(features, ((half, half), (0, 0)), mode="edge")
    n_frames = features.shape[0]
    weights = np.arange(1, half + 1, dtype=np.float64)
    out = np.zeros_like(features, dtype=np.float64)
    for n, w in enumerate(weights, start=1):
        out += w * (padded[half + n : half + n + n_frames] - padded[half - n : half - n + n_frames])
    return out / (2.0 * float(np.sum(weights ** 2)))


def mfcc_with_delta(
    mag: np.ndarray, sample_rate: int, n_mels: int = 40, n_mfcc: int = 13, delta_width: int = 9
) -> np.ndarray:
    """
    MFCCs and their deltas, frames x (2 * n_mfcc).

    Log mel energies go through an orthonormal DCT-II and the first
    ``n_mfcc`` coefficients are kept.
    """
    if n_mfcc > n_mels:
        raise ValidationError("n_mfcc must not exceed n_mels", field_name="n_mfcc", invalid_value=n_mfcc)
    if mag.shape[0] < 1:
        raise DataError("no frames to compute MFCCs from")
    cepstra = dct(log_mel_energies(mag, sample_rate, n_mels), type=2, axis=1, norm="ortho")[:, :n_mfcc]
    return np.hstack([cepstra, delta(cepstra, delta_width)])


def spectral_features(mag: np.ndarray, sample_rate: int, rolloff_fraction: float = 0.85) -> Dict[str, np.ndarray]:
    """
    Per-frame spectral centroid, bandwidth and roll-off in Hz.

    All-zero frames report 0 for every feature.
    """
    mag = np.asarray(mag, dtype=np.float64)
    freqs = bin_frequencies(mag.shape[1], sample_rate)
    total = mag.sum(axis=1)
    silent = total == 0.0
    safe_total = np.where(silent, 1.0, total)

    centroid = (mag @ freqs) / safe_total
    spread = (mag * (freqs[None, :] - centroid[:, None]) ** 2).sum(axis=1) / safe_total
    bandwidth = np.sqrt(np.maximum(spread, 0.0))
    cumulative = np.cumsum(mag, axis=1)
    reached = cumulative >= rolloff_fraction * total[:, None]
    rolloff = freqs[np.argmax(reached, axis=1)]

    for values in (centroid, bandwidth, rolloff):
        values[silent] = 0.0
    return {"centroid": centroid, "bandwidth": bandwidth, "rolloff": rolloff}


def chroma_classes(n_bins: int, sample_rate: int) -> np.ndarray:
    """Pitch class (C = 0) of every FFT bin; -1 for bins at or below 27.5 Hz."""
    freqs = bin_frequencies(n_bins, sample_rate)
    classes = np.full(n_bins, -1, dtype=np.int64)
    audible = freqs > CHROMA_MIN_HZ
    semitones = np.round(12.0 * np.log2(freqs[audible] / 440.0)).astype(np.int64)
    classes[audible] = (semitones + 9) % N_CHROMA
    return classes


def chroma_stft(mag: np.ndarray, sample_rate: int) -> np.ndarray:
    """Octave-folded energy per pitch class, max-normalized per frame."""
    energy = np.asarray(mag, dtype=np.float64) ** 2
    classes = chroma_classes(energy.shape[1], sample_rate)
    chroma = np.zeros((energy.shape[0], N_CHROMA), dtype=np.float64)
    for c in range(N_CHROMA):
        chroma[:, c] = energy[:, classes == c].sum(axis=1)
    peak = chroma.max(axis=1, keepdims=True)
    return np.divide(chroma, peak, out=np.zeros_like(chroma), where=peak > 0.0)


@dataclass(frozen=True)
class TimeFeatures:
    zcr: np.ndarray
    rmse: np.ndarray
    silence_ratio: float
    autocorr_peak: float
    pitch_hz: float


def autocorrelation_peak(
    samples: np.ndarray, sample_rate: int, pitch_min_hz: float = 50.0, pitch_max_hz: float = 400.0
) -> Tuple[float, float]:
    """
    Highest normalized autocorrelation over the pitch lag range.

    Whole-clip autocorrelation r(lag) / r(0), so the value never exceeds 1.

    Returns:
        (peak value, pitch estimate in Hz); (0.0, 0.0) for silent or too-short clips
    """
    x = np.asarray(samples, dtype=np.float64)
    n = x.shape[0]
    energy = float(np.dot(x, x))
    lo = max(1, math.ceil(sample_rate / pitch_max_hz))
    hi = min(n - 1, math.floor(sample_rate / pitch_min_hz))
    if energy == 0.0 or hi < lo:
        return 0.0, 0.0
    r = correlate(x, x, mode="full", method="fft")[n - 1 :]
    lags = np.arange(lo, hi + 1)
    normalized = r[lags] / r[0]
    best = int(np.argmax(normalized))
    return float(normalized[best]), float(sample_rate / lags[best])


def time_features(
    clip: AudioClip,
    cfg: FrameConfig,
    silence_threshold: float = 0.05,
    pitch_min_hz: float = 50.0,
    pitch_max_hz: float = 400.0,
) -> TimeFeatures:
    """Per-frame zero-crossing rate and RMS energy, plus clip-level silence and periodicity."""
    frames = _frames(clip.samples, cfg)
    signs = np.signbit(frames)
    zcr = (signs[:, 1:] != signs[:, :-1]).sum(axis=1) / (cfg.frame_length - 1)
    rmse = np.sqrt(np.mean(frames ** 2, axis=1))
    loudest = float(rmse.max())
    silence_ratio = 1.0 if loudest == 0.0 else float(np.mean(rmse < silence_threshold * loudest))
    peak, pitch = autocorrelation_peak(clip.samples, clip.sample_rate, pitch_min_hz, pitch_max_hz)
    return TimeFeatures(zcr.astype(np.float64), rmse, silence_ratio, peak, pitch)


def harmonic_ratio(mag: np.ndarray, width: int = 9) -> float:
    """
    Harmonic share of spectral energy after median-filter separation.

    Time-axis medians keep stationary tones, frequency-axis medians keep
    clicks; the soft mask H^2 / (H^2 + P^2) weights every bin's energy.
    """
    mag = np.asarray(mag, dtype=np.float64)
    if mag.shape[0] < 3 or mag.shape[1] < 3:
        raise DataError(f"harmonic ratio needs at least 3 frames and 3 bins, got {mag.shape}")
    energy = mag ** 2
    total = float(energy.sum())
    if total == 0.0:
        return 0.0
    harmonic = median_filter(mag, size=(width, 1))
    percussive = median_filter(mag, size=(1, width))
    mask = harmonic ** 2 / (harmonic ** 2 + percussive ** 2 + LOG_FLOOR)
    return float(np.clip((mask * energy).sum() / total, 0.0, 1.0))


def extract_audio_features(clip: AudioClip, settings: Optional[AudioSettings] = None) -> np.ndarray:
    """
    Fixed-width utterance vector in ``audio_feature_names`` order.

    Clips shorter than three frames repeat their edge frames for the
    harmonic ratio.

    Raises:
        DataError: If the clip is shorter than one frame or a feature is not finite
    """
    settings = settings or AudioSettings()
    cfg = settings.frame
    mag = stft_magnitude(clip, cfg)
    sr = clip.sample_rate

    cepstra = mfcc_with_delta(mag, sr, settings.n_mels, settings.n_mfcc, settings.delta_width)
    n = settings.n_mfcc
    spectral = spectral_features(mag, sr, settings.rolloff_fraction)
    chroma = chroma_stft(mag, sr)
    timing = time_features(clip, cfg, settings.silence_threshold, settings.pitch_min_hz, settings.pitch_max_hz)

    parts: List[np.ndarray] = [
        cepstra[:, :n].mean(axis=0),
        cepstra[:, :n].std(axis=0),
        cepstra[:, n:].mean(axis=0),
        cepstra[:, n:].std(axis=0),
    ]
    for name in ("centroid", "bandwidth", "rolloff"):
        parts.append(np.array([spectral[name].mean(), spectral[name].std()]))
    parts.append(chroma.mean(axis=0))
    parts.append(np.array([timing.zcr.mean(), timing.zcr.std(), timing.rmse.mean(), timing.rmse.std()]))
    hpss_input = np.pad(mag, ((0, max(0, 3 - mag.shape[0])), (0, 0)), mode="edge")
    harmonic = harmonic_ratio(hpss_input, settings.hpss_width)
    parts.append(np.array([harmonic, timing.silence_ratio, timing.autocorr_peak]))
    vector = np.concatenate(parts)
    if not np.all(np.isfinite(vector)):
        raise DataError("non-finite audio feature")
    return vector


def extract_clips(paths: Sequence[str], settings: Optional[AudioSettings] = None) -> FeatureMatrix:
    """Feature rows for WAV files, in input order."""
    settings = settings or AudioSettings()
    names = audio_feature_names(settings.n_mfcc)
    values = np.zeros((len(paths), len(names)), dtype=np.float64)
    for i, path in enumerate(paths):
        try:
            values[i] = extract_audio_features(read_wav(path), settings)
        except DataError as e:
            raise DataError(f"{path}: {e.message}", path=str(path), row=i + 1)
    return FeatureMatrix(values, names)


def augment_with_leaf_embeddings(
    X: FeatureMatrix,
    y: Optional[Sequence[int]],
    config: GbdtConfig,
    rng: Optional[SeededRng] = None,
    model: Optional[GbdtModel] = None,
    encoding: str = "one_hot",
) -> Tuple[FeatureMatrix, GbdtModel]:
    """
    Append per-tree leaf encodings to ``X``.

    With labels the GBDT is fitted on ``X``; without labels a previously
    fitted ``model`` is reused.

    Raises:
        ModelStateError: No labels and no fitted model
    """
    if model is None:
        if y is None:
            raise ModelStateError("leaf embeddings need labels or a fitted GBDT model")
        model = gbdt_fit(X, y, config, rng)
    return concat_columns(X, leaf_embeddings(model, X, encoding)), model


class AudioFeaturizer:
    """Z-scoring (statistics from training rows) plus optional leaf embeddings."""

    def __init__(self, settings: Optional[AudioSettings] = None, gbdt: Optional[GbdtConfig] = None, plain: bool = False):
        self.settings = settings or AudioSettings()
        self.gbdt = gbdt or GbdtConfig()
        self.plain = plain
        self.stats: Optional[ZScoreStats] = None
        self.model: Optional[GbdtModel] = None

    @property
    def uses_leaves(self) -> bool:
        return self.settings.leaf_embeddings and not self.plain

    def fit(self, raw: FeatureMatrix, labels: Sequence[int], rng: Optional[SeededRng] = None) -> "AudioFeaturizer":
        self.stats = zscore_fit(raw)
        if self.uses_leaves:
            scaled = zscore_apply(raw, self.stats)
            _, self.model = augment_with_leaf_embeddings(scaled, labels, self.gbdt, rng, encoding=self.settings.leaf_encoding)
            logger.info(f"Audio GBDT fitted: {self.model.n_trees} trees")
        return self

    def transform(self, raw: FeatureMatrix) -> FeatureMatrix:
        if self.stats is None:
            raise ModelStateError("audio featurizer is not fitted")
        scaled = zscore_apply(raw, self.stats)
        if not self.uses_leaves:
            return scaled
        augmented, _ = augment_with_leaf_embeddings(
            scaled, None, self.gbdt, model=self.model, encoding=self.settings.leaf_encoding
        )
        return augmented

    def to_dict(self) -> Dict[str, Any]:
        if self.stats is None:
            raise ModelStateError("audio featurizer is not fitted")
        return {
            "schema": AUDIO_SCHEMA,
            "version": AUDIO_SCHEMA_VERSION,
            "plain": self.plain,
            "settings": self.settings.model_dump(mode="json"),
            "gbdt_config": self.gbdt.model_dump(mode="json"),
            "zscore": self.stats.to_dict(),
            "gbdt": self.model.to_dict() if self.model is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AudioFeaturizer":
        if data.get("schema") != AUDIO_SCHEMA or data.get("version") != AUDIO_SCHEMA_VERSION:
            raise DataError(f"not a {AUDIO_SCHEMA} v{AUDIO_SCHEMA_VERSION} document")
        featurizer = cls(
            AudioSettings.model_validate(data["settings"]),
            GbdtConfig.model_validate(data["gbdt_config"]),
            data["plain"],
        )
        featurizer.stats = ZScoreStats.from_dict(data["zscore"])
        if data.get("gbdt") is not None:
            featurizer.model = GbdtModel.from_dict(data["gbdt"])
        return featurizer


__all__ = [
    "AUDIO_FEATURE_NAMES",
    "AUDIO_FEATURE_WIDTH",
    "audio_feature_names",
    "fft_size_for",
    "stft_magnitude",
    "bin_frequencies",
    "hz_to_mel",
    "mel_to_hz",
    "mel_filterbank",
    "log_mel_energies",
    "delta",
    "mfcc_with_delta",
    "spectral_features",
    "chroma_classes",
    "chroma_stft",
    "TimeFeatures",
    "autocorrelation_peak",
    "time_features",
    "harmonic_ratio",
    "extract_audio_features",
    "extract_clips",
    "augment_with_leaf_embeddings",
    "AudioFeaturizer",
]
