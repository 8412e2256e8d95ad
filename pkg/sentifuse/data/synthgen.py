"""
Synthetic Corpus - Deterministic multimodal data in the ingest formats.

Each class gets a token theme, a pair of tones and a video mean offset.
By default every modality is made blind to one class pair (text cannot
tell classes 0/1 apart, audio 2/3, video 4/5), so only a model that
combines all three modalities can separate every class.

Every sample is drawn from its own substream of the corpus seed, so a
sample's content does not depend on how many samples precede it.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from pydantic import Field, model_validator
from pydantic import ValidationError as PydanticValidationError

from sentifuse.core.config_manager import format_validation_error, read_config_document
from sentifuse.core.config_schemas import DEFAULT_LABEL_MAP, DEFAULT_TARGET_COUNTS, LabelMap, StrictModel
from sentifuse.core.exceptions import ConfigurationError
from sentifuse.core.models import FeatureMatrix
from sentifuse.core.rng import SeededRng
from sentifuse.core.tables import save_table
from sentifuse.core.utils import PathLike, atomic_write_json, atomic_write_text, ensure_directory
from sentifuse.features.wav import AudioClip, write_wav


logger = logging.getLogger(__name__)

WHOLE_TONES = (261.63, 293.66, 329.63, 369.99, 415.30, 466.16)
PARTNER_RATIO = 1.5
STOPWORD_FILLER = ("the", "a", "and", "of", "to", "it", "is", "was")
# Class pairs each modality cannot distinguish: the second member borrows the first's signal.
DEGRADED_PAIRS = {"text": (0, 1), "audio": (2, 3), "video": (4, 5)}

TEXT_NAME = "text.csv"
AUDIO_MANIFEST_NAME = "audio_manifest.csv"
VIDEO_NAME = "video.csv"
SPEC_NAME = "synth_spec.json"
RUN_CONFIG_NAME = "run.json"
CLIP_DIR = "clips"


class SynthSpec(StrictModel):
    """Shape of a synthetic corpus."""

    n_classes: int = Field(6, ge=2, description="Number of target classes")
    counts: List[int] = Field(default_factory=lambda: [600] * 6, description="Samples per target class")
    separation: float = Field(3.0, ge=0.0, description="Distance between class video means")
    distinct: bool = Field(True, description="Give each class its own vocabulary and tones")
    degrade: bool = Field(True, description="Blind each modality to one class pair")
    theme_tokens: int = Field(8, ge=1, description="Theme vocabulary size per class")
    filler_tokens: int = Field(30, ge=1, description="Shared filler vocabulary size")
    theme_rate: float = Field(0.6, ge=0.0, le=1.0, description="Chance a token after the first comes from the theme")
    min_tokens: int = Field(5, ge=1, description="Shortest transcript")
    max_tokens: int = Field(15, ge=1, description="Longest transcript")
    tones: Optional[List[float]] = Field(None, description="Base tone per class in Hz; whole-tone scale from C4 if unset")
    tone_amplitude: float = Field(0.3, gt=0.0, description="Amplitude of each tone")
    sample_rate: int = Field(16000, ge=1000, description="Clip sample rate")
    duration: float = Field(1.0, gt=0.0, description="Clip length in seconds")
    noise_sigma: float = Field(0.05, ge=0.0, description="Gaussian noise added to clips")
    video_dim: int = Field(16, ge=1, description="Video descriptor width")
    missing_rate: float = Field(0.05, ge=0.0, lt=1.0, description="Share of video entries marked missing")
    source_labels: bool = Field(True, description="Emit 8-way source labels from the label-map preimage")
    seed: int = Field(0, ge=0, description="Corpus seed")

    @model_validator(mode="after")
    def check_shape(self) -> "SynthSpec":
        if len(self.counts) != self.n_classes:
            raise ValueError(f"counts lists {len(self.counts)} classes, n_classes is {self.n_classes}")
        if any(n <= 0 for n in self.counts):
            raise ValueError("class counts must be positive")
        if self.min_tokens > self.max_tokens:
            raise ValueError("min_tokens exceeds max_tokens")
        if self.video_dim < self.n_classes:
            raise ValueError("video_dim must be at least n_classes")
        if self.tones is not None and len(self.tones) != self.n_classes:
            raise ValueError("tones must list one frequency per class")
        if self.tones is None and self.n_classes > len(WHOLE_TONES):
            raise ValueError(f"give explicit tones for more than {len(WHOLE_TONES)} classes")
        if self.source_labels and self.n_classes != LabelMap().n_targets:
            raise ValueError("source_labels needs the six-class default label map")
        return self

    @property
    def total(self) -> int:
        return sum(self.counts)

    def base_tones(self) -> List[float]:
        return list(self.tones) if self.tones is not None else list(WHOLE_TONES[: self.n_classes])


def load_synth_spec(path: Optional[PathLike] = None) -> SynthSpec:
    """
    Read a corpus spec from TOML or JSON; the default spec when ``path`` is None.

    Raises:
        ConfigurationError: Unreadable file or invalid spec
    """
    if path is None:
        return SynthSpec()
    try:
        return SynthSpec.model_validate(read_config_document(path))
    except PydanticValidationError as e:
        raise ConfigurationError(f"invalid synthetic spec: {format_validation_error(e)}", config_path=str(path))


@dataclass
class SyntheticCorpus:
    """In-memory corpus; rows are utterances in output order."""

    utterance_ids: List[str]
    transcripts: List[str]
    clips: List[AudioClip]
    video: FeatureMatrix
    labels: np.ndarray
    source_labels: np.ndarray

    @property
    def rows(self) -> int:
        return len(self.utterance_ids)


def _signal_class(c: int, modality: str, spec: SynthSpec) -> int:
    """The class whose signal ``c`` carries in ``modality``."""
    if not spec.distinct and modality != "video":
        return 0
    if spec.degrade:
        first, second = DEGRADED_PAIRS[modality]
        if c == second and first < spec.n_classes:
            return first
    return c


def _transcript(c: int, spec: SynthSpec, rng: SeededRng) -> str:
    theme = _signal_class(c, "text", spec)
    length = int(rng.integers(spec.min_tokens, spec.max_tokens + 1))
    words = [f"tok{theme}x{int(rng.integers(0, spec.theme_tokens))}"]
    for _ in range(length - 1):
        if rng.random() < spec.theme_rate:
            words.append(f"tok{theme}x{int(rng.integers(0, spec.theme_tokens))}")
        elif rng.random() < 0.25:
            words.append(STOPWORD_FILLER[int(rng.integers(0, len(STOPWORD_FILLER)))])
        else:
            words.append(f"fill{int(rng.integers(0, spec.filler_tokens))}")
    return " ".join(words)


def _clip(c: int, spec: SynthSpec, rng: SeededRng) -> AudioClip:
    base = spec.base_tones()[_signal_class(c, "audio", spec)]
    n = int(round(spec.duration * spec.sample_rate))
    t = np.arange(n) / spec.sample_rate
    phases = rng.uniform(0.0, 2.0 * math.pi, 2)
    samples = spec.tone_amplitude * (
        np.sin(2.0 * math.pi * base * t + phases[0]) + np.sin(2.0 * math.pi * base * PARTNER_RATIO * t + phases[1])
    )
    samples = samples + rng.normal(0.0, spec.noise_sigma, n)
    return AudioClip(samples, spec.sample_rate)


def video_offsets(spec: SynthSpec) -> np.ndarray:
    """Class means: delta/sqrt(2) along axis c, so any two classes are ``separation`` apart."""
    offsets = np.zeros((spec.n_classes, spec.video_dim))
    for c in range(spec.n_classes):
        offsets[c, _signal_class(c, "video", spec)] = spec.separation / math.sqrt(2.0)
    return offsets


def generate(spec: Optional[SynthSpec] = None) -> SyntheticCorpus:
    """
    Build the corpus described by ``spec``; a pure function of the spec.

    Class counts match ``spec.counts`` exactly. Rows are shuffled so
    classes interleave.
    """
    spec = spec or SynthSpec()
    root = SeededRng(spec.seed)
    labels = np.repeat(np.arange(spec.n_classes), spec.counts)
    labels = labels[root.spawn("order").permutation(labels.shape[0])]
    offsets = video_offsets(spec)
    label_map = LabelMap.model_validate(DEFAULT_LABEL_MAP)

    transcripts: List[str] = []
    clips: List[AudioClip] = []
    video = np.zeros((labels.shape[0], spec.video_dim))
    sources = np.zeros(labels.shape[0], dtype=np.int64)
    for i, label in enumerate(labels):
        c = int(label)
        sample_rng = root.spawn("sample").spawn(i)
        transcripts.append(_transcript(c, spec, sample_rng.spawn("text")))
        clips.append(_clip(c, spec, sample_rng.spawn("audio")))
        video_rng = sample_rng.spawn("video")
        row = offsets[c] + video_rng.normal(0.0, 1.0, spec.video_dim)
        row[video_rng.random(spec.video_dim) < spec.missing_rate] = np.nan
        video[i] = row
        if spec.source_labels:
            preimage = label_map.preimage(c)
            sources[i] = preimage[int(sample_rng.spawn("source").integers(0, len(preimage)))]
        else:
            sources[i] = c

    logger.info(f"Generated {labels.shape[0]} synthetic utterances over {spec.n_classes} classes")
    return SyntheticCorpus(
        [f"utt{i:05d}" for i in range(labels.shape[0])],
        transcripts,
        clips,
        FeatureMatrix(video, tuple(f"v_{j}" for j in range(spec.video_dim))),
        labels.astype(np.int64),
        sources,
    )


def _csv_cell(text: str) -> str:
    return '"' + text.replace('"', '""') + '"' if any(ch in text for ch in ',"\n') else text


def scaled_target_counts(spec: SynthSpec, train_fraction: float = 0.8) -> Dict[int, int]:
    """
    Oversampling targets with the default table's proportions, scaled so the
    smallest target equals the largest expected per-class training count.
    """
    largest = max(int(round(n * train_fraction)) for n in spec.counts)
    floor = min(DEFAULT_TARGET_COUNTS.values())
    return {c: max(1, int(round(t * largest / floor))) for c, t in DEFAULT_TARGET_COUNTS.items()}


def run_config_document(spec: SynthSpec) -> Dict:
    """A run configuration pointing at the corpus files next to it."""
    document: Dict = {
        "seed": spec.seed,
        "paths": {
            "text_manifest": TEXT_NAME,
            "audio_manifest": AUDIO_MANIFEST_NAME,
            "video_table": VIDEO_NAME,
            "work_dir": "work",
        },
    }
    if spec.source_labels:
        document["labels"] = {"target_counts": {str(c): n for c, n in scaled_target_counts(spec).items()}}
    else:
        document["labels"] = {
            "remap": False,
            "oversample": False,
            "class_names": [f"class_{c}" for c in range(spec.n_classes)],
        }
    return document


def write_corpus(corpus: SyntheticCorpus, spec: SynthSpec, out_dir: PathLike) -> Dict[str, Path]:
    """
    Write the corpus in the ingest formats.

    Returns:
        Written paths by role
    """
    out = ensure_directory(out_dir)
    text_lines = ["utterance_id,transcript,label"]
    audio_lines = ["clip_path,label"]
    for uid, transcript, clip, label in zip(corpus.utterance_ids, corpus.transcripts, corpus.clips, corpus.source_labels):
        text_lines.append(f"{uid},{_csv_cell(transcript)},{int(label)}")
        relative = f"{CLIP_DIR}/{uid}.wav"
        write_wav(out / relative, clip)
        audio_lines.append(f"{relative},{int(label)}")

    paths = {
        "text": atomic_write_text(out / TEXT_NAME, "\n".join(text_lines) + "\n"),
        "audio": atomic_write_text(out / AUDIO_MANIFEST_NAME, "\n".join(audio_lines) + "\n"),
        "video": save_table(corpus.video, out / VIDEO_NAME, labels=corpus.source_labels),
        "spec": atomic_write_json(out / SPEC_NAME, spec.model_dump(mode="json")),
        "run": atomic_write_json(out / RUN_CONFIG_NAME, run_config_document(spec)),
    }
    logger.info(f"Synthetic corpus written to {out}")
    return paths


__all__ = [
    "WHOLE_TONES",
    "DEGRADED_PAIRS",
    "SynthSpec",
    "load_synth_spec",
    "SyntheticCorpus",
    "video_offsets",
    "generate",
    "scaled_target_counts",
    "run_config_document",
    "write_corpus",
]
