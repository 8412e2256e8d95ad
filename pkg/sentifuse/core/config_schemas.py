"""
Configuration Schemas - Pydantic models for run configuration validation.

One RunConfig document covers every stage of a run. Each section rejects
unknown keys, and every default below is the documented default of the
corresponding pipeline stage.
"""

from typing import Any, Dict, Iterator, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, RootModel, field_validator, model_validator


DEFAULT_LABEL_MAP: Dict[int, int] = {0: 0, 1: 1, 2: 1, 3: 2, 4: 2, 5: 3, 6: 4, 7: 5}
DEFAULT_TARGET_COUNTS: Dict[int, int] = {0: 2933, 1: 2933, 2: 5000, 3: 2933, 4: 2933, 5: 4000}
DEFAULT_CLASS_NAMES: List[str] = [
    "anger",
    "happiness/excitement",
    "sadness/frustration",
    "fear",
    "surprise",
    "neutral",
]

Modality = Literal["text", "audio", "video"]
Variant = Literal["fused", "text", "audio", "video", "early", "late-simple"]
VARIANTS: Tuple[str, ...] = ("fused", "text", "audio", "video", "early", "late-simple")


class StrictModel(BaseModel):
    """Base for configuration sections: unknown keys are errors."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class PathSettings(StrictModel):
    """Input files and the run's working directory."""

    text_manifest: str = Field("data/synth/text.csv", description="CSV with transcript and label columns")
    audio_manifest: str = Field("data/synth/audio_manifest.csv", description="CSV with clip_path and label columns")
    video_table: str = Field("data/synth/video.csv", description="Numeric CSV of MoCap descriptors plus label")
    work_dir: str = Field("runs/default", description="Directory receiving features, dataset and run outputs")


class TextSettings(StrictModel):
    """Transcript normalization, TF-IDF and feature selection."""

    max_vocab: int = Field(2000, ge=1, description="Vocabulary size kept by collection frequency")
    lasso_alpha: float = Field(0.01, ge=0.0, description="L1 penalty of the one-vs-rest LASSO")
    lasso_max_iter: int = Field(1000, ge=1, description="Coordinate-descent sweeps per class")
    rfe_keep: int = Field(512, ge=1, description="Features kept by recursive elimination")
    rfe_step: float = Field(0.2, gt=0.0, le=0.5, description="Fraction of remaining features dropped per round")
    pad_width: int = Field(512, ge=1, description="Zero-padded output width")
    stopwords_file: Optional[str] = Field(None, description="Stopword list (one per line); packaged list if unset")
    lemma_rules_file: Optional[str] = Field(None, description="suffix<TAB>replacement rules; packaged rules if unset")
    lemma_exceptions_file: Optional[str] = Field(None, description="word<TAB>lemma exceptions; packaged list if unset")

    @model_validator(mode="after")
    def check_widths(self) -> "TextSettings":
        if self.rfe_keep > self.pad_width:
            raise ValueError(f"rfe_keep ({self.rfe_keep}) exceeds pad_width ({self.pad_width})")
        return self


class FrameConfig(StrictModel):
    """STFT framing."""

    frame_length: int = Field(1024, ge=2, description="Samples per analysis frame")
    hop_length: int = Field(512, ge=1, description="Samples between frame starts")
    window: Literal["hann"] = Field("hann", description="Analysis window")

    @model_validator(mode="after")
    def check_hop(self) -> "FrameConfig":
        if self.hop_length > self.frame_length:
            raise ValueError("hop_length must not exceed frame_length")
        return self


class AudioSettings(StrictModel):
    """Acoustic feature extraction."""

    frame: FrameConfig = Field(default_factory=FrameConfig, description="STFT framing")
    n_mels: int = Field(40, ge=1, description="Mel filters")
    n_mfcc: int = Field(13, ge=1, description="Cepstral coefficients kept")
    delta_width: int = Field(9, ge=3, description="Odd window width of the delta regression")
    rolloff_fraction: float = Field(0.85, gt=0.0, lt=1.0, description="Spectral roll-off energy fraction")
    silence_threshold: float = Field(0.05, gt=0.0, lt=1.0, description="Silent-frame RMS as a fraction of the loudest frame")
    pitch_min_hz: float = Field(50.0, gt=0.0, description="Lowest pitch searched by autocorrelation")
    pitch_max_hz: float = Field(400.0, gt=0.0, description="Highest pitch searched by autocorrelation")
    hpss_width: int = Field(9, ge=1, description="Median filter width of the harmonic/percussive split")
    leaf_embeddings: bool = Field(True, description="Append GBDT leaf embeddings to the scaled features")
    leaf_encoding: Literal["one_hot", "index"] = Field("one_hot", description="Leaf encoding of the embeddings")

    @field_validator("delta_width")
    @classmethod
    def check_delta_width(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError("delta_width must be odd")
        return v

    @model_validator(mode="after")
    def check_ranges(self) -> "AudioSettings":
        if self.n_mfcc > self.n_mels:
            raise ValueError("n_mfcc must not exceed n_mels")
        if self.pitch_min_hz >= self.pitch_max_hz:
            raise ValueError("pitch_min_hz must be below pitch_max_hz")
        return self


class VideoSettings(StrictModel):
    """MoCap table preparation and GBDT stacking."""

    interpolation: Literal["linear", "median"] = Field("linear", description="Gap filling along row order, or column median")
    out_of_fold: bool = Field(True, description="Stack out-of-fold GBDT probabilities on training rows")
    n_folds: int = Field(5, ge=2, description="Folds for out-of-fold stacking")


class GbdtConfig(StrictModel):
    """Gradient-boosted trees used for leaf embeddings and stacking."""

    n_rounds: int = Field(50, ge=0, description="Boosting rounds")
    max_depth: int = Field(4, ge=0, description="Maximum tree depth")
    learning_rate: float = Field(0.3, gt=0.0, description="Shrinkage applied to every tree")
    l2_reg: float = Field(1.0, ge=0.0, description="L2 penalty on leaf values")
    min_samples_leaf: int = Field(5, ge=1, description="Smallest allowed leaf")
    subsample: float = Field(1.0, gt=0.0, le=1.0, description="Row fraction drawn per tree")
    colsample: float = Field(1.0, gt=0.0, le=1.0, description="Column fraction drawn per tree")
    base_score: Literal["uniform", "prior"] = Field("uniform", description="Initial logits: zeros or log class priors")


class LabelMap(RootModel[Dict[int, int]]):
    """Total mapping from source class ids onto a contiguous target range."""

    root: Dict[int, int] = Field(default_factory=lambda: dict(DEFAULT_LABEL_MAP))

    @model_validator(mode="after")
    def check_mapping(self) -> "LabelMap":
        sources = sorted(self.root)
        if not sources:
            raise ValueError("label map is empty")
        if sources != list(range(len(sources))):
            raise ValueError(f"source ids must be 0..{len(sources) - 1}, got {sources}")
        targets = sorted(set(self.root.values()))
        if targets != list(range(len(targets))):
            raise ValueError(f"target ids must form a contiguous range from 0, got {targets}")
        return self

    @property
    def n_sources(self) -> int:
        return len(self.root)

    @property
    def n_targets(self) -> int:
        return len(set(self.root.values()))

    def preimage(self, target: int) -> List[int]:
        return sorted(source for source, mapped in self.root.items() if mapped == target)


class TargetCounts(RootModel[Dict[int, int]]):
    """Desired training-set size per class."""

    root: Dict[int, int] = Field(default_factory=lambda: dict(DEFAULT_TARGET_COUNTS))

    @model_validator(mode="after")
    def check_counts(self) -> "TargetCounts":
        bad = {c: n for c, n in self.root.items() if n <= 0}
        if bad:
            raise ValueError(f"target counts must be positive, got {bad}")
        return self


class LabelSettings(StrictModel):
    """Label remapping, oversampling targets and display names."""

    remap: bool = Field(True, description="Apply label_map to the source labels")
    label_map: LabelMap = Field(default_factory=LabelMap, description="Source id -> target id")
    oversample: bool = Field(True, description="Oversample the training split to target_counts")
    target_counts: TargetCounts = Field(default_factory=TargetCounts, description="Class id -> desired training count")
    class_names: List[str] = Field(default_factory=lambda: list(DEFAULT_CLASS_NAMES), description="Display names of target classes")


class SplitSettings(StrictModel):
    """Stratified train/val/test assignment."""

    scheme: Literal["three_way", "nested_holdout"] = Field("three_way", description="three_way fractions, or test holdout then val from the remainder")
    fractions: Tuple[float, float, float] = Field((0.8, 0.1, 0.1), description="train, val, test fractions for three_way")
    test_fraction: float = Field(0.2, gt=0.0, lt=1.0, description="Test share for nested_holdout")
    val_fraction: float = Field(0.1, gt=0.0, lt=1.0, description="Validation share of the remainder for nested_holdout")

    @field_validator("fractions")
    @classmethod
    def check_fractions(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(f < 0 for f in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError("fractions must be non-negative and sum to 1")
        return v


class EncoderSpec(StrictModel):
    """Dense stack: per layer a width, a dropout rate and a batch-norm flag."""

    widths: List[int] = Field(default_factory=lambda: [128], description="Layer widths")
    dropout: List[float] = Field(default_factory=lambda: [0.3], description="Dropout rate after each layer")
    batch_norm: List[bool] = Field(default_factory=lambda: [False], description="Batch normalization per layer")

    @model_validator(mode="after")
    def check_layers(self) -> "EncoderSpec":
        if not self.widths:
            raise ValueError("an encoder needs at least one layer")
        if not (len(self.widths) == len(self.dropout) == len(self.batch_norm)):
            raise ValueError("widths, dropout and batch_norm must have equal lengths")
        if any(w <= 0 for w in self.widths):
            raise ValueError("layer widths must be positive")
        if any(not 0.0 <= p < 1.0 for p in self.dropout):
            raise ValueError("dropout rates must lie in [0, 1)")
        return self

    @property
    def output_width(self) -> int:
        return self.widths[-1]


def _video_encoder() -> EncoderSpec:
    return EncoderSpec(widths=[128, 64, 32], dropout=[0.3, 0.3, 0.3], batch_norm=[True, True, True])


def _early_encoder() -> EncoderSpec:
    return EncoderSpec(widths=[256, 128], dropout=[0.3, 0.3], batch_norm=[False, False])


class ModelSettings(StrictModel):
    """Encoders, fusion head and batch-norm constants."""

    text: EncoderSpec = Field(default_factory=EncoderSpec, description="Text encoder")
    audio: EncoderSpec = Field(default_factory=EncoderSpec, description="Audio encoder")
    video: EncoderSpec = Field(default_factory=_video_encoder, description="Video encoder")
    early: EncoderSpec = Field(default_factory=_early_encoder, description="Single encoder of the early-fusion baseline")
    fusion_width: int = Field(256, ge=1, description="Fusion layer width")
    fusion_dropout: float = Field(0.4, ge=0.0, lt=1.0, description="Dropout after the fusion layer")
    video_projection: Optional[int] = Field(None, ge=1, description="Extra video layer projecting to this width (e.g. 128)")
    fusion_order: List[Modality] = Field(default_factory=lambda: ["audio", "video", "text"], description="Concatenation order of encoder outputs")
    bn_momentum: float = Field(0.9, gt=0.0, lt=1.0, description="Running-statistics momentum")
    bn_epsilon: float = Field(1e-5, gt=0.0, description="Batch-norm variance epsilon")

    @field_validator("fusion_order")
    @classmethod
    def check_order(cls, v: List[str]) -> List[str]:
        if sorted(v) != ["audio", "text", "video"]:
            raise ValueError("fusion_order must list audio, video and text exactly once")
        return v


class TrainConfig(StrictModel):
    """Optimizer and callback settings."""

    epochs: int = Field(50, ge=1, description="Maximum epochs")
    batch_size: int = Field(64, ge=1, description="Rows per optimizer step")
    lr: float = Field(0.001, gt=0.0, description="Initial Adam learning rate")
    early_stop_patience: int = Field(5, ge=1, description="Epochs without val-loss improvement before stopping")
    plateau_patience: int = Field(3, ge=1, description="Stagnant epochs before the learning rate is reduced")
    plateau_factor: float = Field(0.5, gt=0.0, lt=1.0, description="Learning-rate multiplier on plateau")
    min_lr: float = Field(1e-6, gt=0.0, description="Learning-rate floor")
    min_delta: float = Field(1e-4, ge=0.0, description="Absolute val-loss decrease that counts as improvement")
    seed: Optional[int] = Field(None, ge=0, description="Training seed; the run seed when unset")


class ExportSettings(StrictModel):
    """Diagnostic output."""

    include_timing: bool = Field(False, description="Write measured wall seconds to history.csv (breaks byte reproducibility)")
    svg: bool = Field(True, description="Render SVG plots next to the curve CSVs")


class ExperimentSettings(StrictModel):
    """Which model variant a train/run invocation builds."""

    variant: Variant = Field("fused", description="fused | text | audio | video | early | late-simple")


class RunConfig(StrictModel):
    """Complete configuration of one reproducible run."""

    seed: int = Field(0, ge=0, description="Seed for splitting, oversampling, GBDT and training")
    paths: PathSettings = Field(default_factory=PathSettings)
    text: TextSettings = Field(default_factory=TextSettings)
    audio: AudioSettings = Field(default_factory=AudioSettings)
    video: VideoSettings = Field(default_factory=VideoSettings)
    gbdt: GbdtConfig = Field(default_factory=GbdtConfig)
    labels: LabelSettings = Field(default_factory=LabelSettings)
    split: SplitSettings = Field(default_factory=SplitSettings)
    model: ModelSettings = Field(default_factory=ModelSettings)
    train: TrainConfig = Field(default_factory=TrainConfig)
    export: ExportSettings = Field(default_factory=ExportSettings)
    experiment: ExperimentSettings = Field(default_factory=ExperimentSettings)

    @property
    def train_seed(self) -> int:
        return self.seed if self.train.seed is None else self.train.seed

    @property
    def n_classes(self) -> int:
        if self.labels.remap:
            return self.labels.label_map.n_targets
        return len(self.labels.class_names)


def iter_config_keys(model: type = RunConfig, prefix: str = "") -> Iterator[Tuple[str, Any, str]]:
    """
    Walk a configuration model and yield every leaf key.

    Yields:
        (dotted key, default value, description) triples
    """
    for name, field in model.model_fields.items():
        key = f"{prefix}{name}"
        annotation = field.annotation
        if isinstance(annotation, type) and issubclass(annotation, StrictModel):
            yield from iter_config_keys(annotation, key + ".")
            continue
        default = field.get_default(call_default_factory=True)
        if isinstance(default, BaseModel):
            default = default.model_dump(mode="json")
        yield key, default, field.description or ""


def describe_config_keys() -> str:
    """Plain-text listing of every configuration key with its default."""
    lines = []
    for key, default, description in iter_config_keys():
        lines.append(f"{key} = {default!r}  # {description}" if description else f"{key} = {default!r}")
    return "\n".join(lines)


__all__ = [
    "DEFAULT_LABEL_MAP",
    "DEFAULT_TARGET_COUNTS",
    "DEFAULT_CLASS_NAMES",
    "VARIANTS",
    "StrictModel",
    "PathSettings",
    "TextSettings",
    "FrameConfig",
    "AudioSettings",
    "VideoSettings",
    "GbdtConfig",
    "LabelMap",
    "TargetCounts",
    "LabelSettings",
    "SplitSettings",
    "EncoderSpec",
    "ModelSettings",
    "TrainConfig",
    "ExportSettings",
    "ExperimentSettings",
    "RunConfig",
    "iter_config_keys",
    "describe_config_keys",
]
