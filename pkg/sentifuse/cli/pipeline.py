"""
Pipeline Orchestration - The stages behind each command, wired to a run's work directory.

Layout under ``paths.work_dir``::

    features/   <modality>.csv, <modality>_plain.csv, fitted transformers, split.json
    dataset/    enriched/ and plain/ views after remapping, splitting and oversampling
    runs/       one directory per variant: config.json, seed.txt, model.json,
                ckpt_best.bin, history.csv, report.json and curve files

Transformers are fitted on training rows only; validation and test rows
are transformed with the fitted state. The enriched views feed the fused
model and the unimodal baselines, the plain views (no selection, leaves
or stacking) feed the early and simple late fusion baselines.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from sentifuse.core.config_manager import ConfigManager
from sentifuse.core.config_schemas import VARIANTS, RunConfig
from sentifuse.core.exceptions import ConfigurationError, DataError, UsageError
from sentifuse.core.models import MODALITIES, SPLIT_TAGS, FeatureMatrix, LabeledDataset
from sentifuse.core.rng import SeededRng
from sentifuse.core.tables import load_table, parse_label, read_manifest, save_table
from sentifuse.core.utils import PathLike, atomic_write_json, ensure_directory, read_json
from sentifuse.data.resample import (
    class_counts,
    nested_holdout_split_tags,
    rebalance_training_split,
    remap_labels,
    stratified_split_tags,
)
from sentifuse.features.audio import AudioFeaturizer, extract_clips
from sentifuse.features.text import TextFeaturizer
from sentifuse.features.video import VideoFeaturizer, interpolate_missing
from sentifuse.learn.checkpoint import CHECKPOINT_NAME, load_checkpoint
from sentifuse.learn.mathops import check_labels
from sentifuse.learn.neural import (
    EARLY_BRANCH,
    Batch,
    FusionModel,
    ModelSpec,
    early_spec,
    fused_spec,
    init_model,
    predict_proba,
    unimodal_spec,
)
from sentifuse.training.export import REPORT_NAME, export_report, export_training
from sentifuse.training.metrics import REPORT_SCHEMA, EvalReport, evaluate
from sentifuse.training.trainer import EpochRecord, TrainHistory, batch_accuracy, train_loop


logger = logging.getLogger(__name__)

FEATURE_DIR = "features"
DATASET_DIR = "dataset"
RUNS_DIR = "runs"
SPLIT_NAME = "split.json"
MODEL_NAME = "model.json"

ENRICHED = "enriched"
PLAIN = "plain"
PLAIN_VARIANTS = ("early", "late-simple")
BASELINES = ("text", "audio", "video", "early", "late-simple")

EpochCallback = Callable[[EpochRecord], None]


# Labels and splits

def class_names_for(cfg: RunConfig) -> List[str]:
    names = list(cfg.labels.class_names)
    if len(names) != cfg.n_classes:
        raise ConfigurationError(
            f"labels.class_names lists {len(names)} names for {cfg.n_classes} classes"
        )
    return names


def target_labels(raw: Sequence[int], cfg: RunConfig) -> np.ndarray:
    """Source labels mapped to target classes (or checked against the class count)."""
    if cfg.labels.remap:
        return remap_labels(raw, cfg.labels.label_map)
    return check_labels(np.asarray(raw, dtype=np.int64), cfg.n_classes)


def split_tags(labels: np.ndarray, cfg: RunConfig) -> Tuple[str, ...]:
    rng = SeededRng(cfg.seed).spawn("split")
    if cfg.split.scheme == "nested_holdout":
        return nested_holdout_split_tags(labels, cfg.split.test_fraction, cfg.split.val_fraction, rng)
    return stratified_split_tags(labels, cfg.split.fractions, rng)


def _train_rows(tags: Sequence[str]) -> np.ndarray:
    return np.asarray([i for i, tag in enumerate(tags) if tag == "train"], dtype=np.int64)


# Featurize

def _feature_path(work_dir: Path, modality: str, kind: str, suffix: str = ".csv") -> Path:
    stem = modality if kind == ENRICHED else f"{modality}_plain"
    return work_dir / FEATURE_DIR / f"{stem}{suffix}"


def _write_features(
    work_dir: Path,
    modality: str,
    views: Mapping[str, FeatureMatrix],
    transformers: Mapping[str, Dict],
    labels: np.ndarray,
    tags: Sequence[str],
    cfg: RunConfig,
) -> Dict[str, Path]:
    ensure_directory(work_dir / FEATURE_DIR)
    written: Dict[str, Path] = {}
    for kind, matrix in views.items():
        written[kind] = save_table(matrix, _feature_path(work_dir, modality, kind), labels=labels)
        atomic_write_json(_feature_path(work_dir, modality, kind, ".json"), transformers[kind])
    atomic_write_json(
        work_dir / FEATURE_DIR / SPLIT_NAME,
        {"scheme": cfg.split.scheme, "seed": cfg.seed, "tags": list(tags)},
    )
    logger.info(
        f"{modality} features: {views[ENRICHED].cols} enriched / {views[PLAIN].cols} plain columns, {len(labels)} rows"
    )
    return written


def featurize_text(cfg: RunConfig, work_dir: Path) -> Dict[str, Path]:
    path = Path(cfg.paths.text_manifest)
    records = read_manifest(path, ["transcript", "label"])
    transcripts = [record["transcript"] for record in records]
    labels = target_labels([parse_label(r["label"], i + 1, path) for i, r in enumerate(records)], cfg)
    tags = split_tags(labels, cfg)
    train = _train_rows(tags)
    train_text = [transcripts[i] for i in train]

    enriched = TextFeaturizer(cfg.text).fit(train_text, labels[train])
    plain = TextFeaturizer(cfg.text, enriched.norm, plain=True).fit(train_text, labels[train])
    return _write_features(
        work_dir,
        "text",
        {ENRICHED: enriched.transform(transcripts), PLAIN: plain.transform(transcripts)},
        {ENRICHED: enriched.to_dict(), PLAIN: plain.to_dict()},
        labels,
        tags,
        cfg,
    )


def audio_clip_paths(manifest: Path, records: Sequence[Mapping[str, str]]) -> List[str]:
    """Clip paths from the manifest, relative ones resolved against its directory."""
    paths = []
    for record in records:
        clip = Path(record["clip_path"].strip())
        paths.append(str(clip if clip.is_absolute() else manifest.parent / clip))
    return paths


def featurize_audio(cfg: RunConfig, work_dir: Path) -> Dict[str, Path]:
    path = Path(cfg.paths.audio_manifest)
    records = read_manifest(path, ["clip_path", "label"])
    labels = target_labels([parse_label(r["label"], i + 1, path) for i, r in enumerate(records)], cfg)
    tags = split_tags(labels, cfg)
    train = _train_rows(tags)

    raw = extract_clips(audio_clip_paths(path, records), cfg.audio)
    train_raw = raw.take_rows(train)
    rng = SeededRng(cfg.seed).spawn("audio")
    enriched = AudioFeaturizer(cfg.audio, cfg.gbdt).fit(train_raw, labels[train], rng)
    plain = AudioFeaturizer(cfg.audio, cfg.gbdt, plain=True).fit(train_raw, labels[train])
    return _write_features(
        work_dir,
        "audio",
        {ENRICHED: enriched.transform(raw), PLAIN: plain.transform(raw)},
        {ENRICHED: enriched.to_dict(), PLAIN: plain.to_dict()},
        labels,
        tags,
        cfg,
    )


def _fit_video(featurizer: VideoFeaturizer, table: FeatureMatrix, labels: np.ndarray, tags: Sequence[str], rng: SeededRng) -> FeatureMatrix:
    """Training rows get the fit output (out-of-fold when enabled), the rest the fitted transform."""
    train = _train_rows(tags)
    held = np.asarray([i for i, tag in enumerate(tags) if tag != "train"], dtype=np.int64)
    fitted = featurizer.fit_transform(table.take_rows(train), labels[train], rng)
    values = np.zeros((table.rows, fitted.cols), dtype=np.float64)
    values[train] = fitted.values
    if held.size:
        values[held] = featurizer.transform(table.take_rows(held)).values
    return FeatureMatrix(values, fitted.col_names)


def featurize_video(cfg: RunConfig, work_dir: Path) -> Dict[str, Path]:
    path = Path(cfg.paths.video_table)
    table, raw_labels = load_table(path, label_column="label", allow_missing=True)
    if raw_labels is None:
        raise DataError("video table has no label column", path=str(path))
    labels = target_labels(raw_labels, cfg)
    tags = split_tags(labels, cfg)
    filled = interpolate_missing(table, cfg.video.interpolation)

    enriched = VideoFeaturizer(cfg.video, cfg.gbdt, cfg.n_classes)
    plain = VideoFeaturizer(cfg.video, cfg.gbdt, cfg.n_classes, plain=True)
    rng = SeededRng(cfg.seed).spawn("video")
    return _write_features(
        work_dir,
        "video",
        {ENRICHED: _fit_video(enriched, filled, labels, tags, rng), PLAIN: _fit_video(plain, filled, labels, tags, rng)},
        {ENRICHED: enriched.to_dict(), PLAIN: plain.to_dict()},
        labels,
        tags,
        cfg,
    )


FEATURIZERS = {"text": featurize_text, "audio": featurize_audio, "video": featurize_video}


def featurize(manager: ConfigManager, modality: str) -> Dict[str, Path]:
    """
    Extract and fit one modality's features ("all" runs every modality).

    Raises:
        UsageError: Unknown modality
    """
    if modality == "all":
        written: Dict[str, Path] = {}
        for name in MODALITIES:
            written.update({f"{name}.{kind}": p for kind, p in featurize(manager, name).items()})
        return written
    if modality not in FEATURIZERS:
        raise UsageError(f"unknown modality '{modality}' (choose text, audio, video or all)")
    return FEATURIZERS[modality](manager.config, manager.work_dir)


# Prepare

def _load_feature_view(work_dir: Path, modality: str, kind: str) -> Tuple[FeatureMatrix, np.ndarray]:
    path = _feature_path(work_dir, modality, kind)
    if not path.exists():
        raise DataError(f"{path} not found; run `sentifuse featurize {modality}` first", path=str(path))
    table, labels = load_table(path, label_column="label")
    return table, labels  # type: ignore[return-value]


def _aligned_dataset(views: Mapping[str, Tuple[FeatureMatrix, np.ndarray]], tags: Optional[Sequence[str]]) -> LabeledDataset:
    labels = views[MODALITIES[0]][1]
    for name in MODALITIES[1:]:
        other = views[name][1]
        if other.shape != labels.shape:
            raise DataError(f"{MODALITIES[0]} has {labels.shape[0]} rows, {name} has {other.shape[0]}")
        mismatch = np.flatnonzero(other != labels)
        if mismatch.size:
            raise DataError(f"label mismatch between {MODALITIES[0]} and {name} at row {int(mismatch[0]) + 1}")
    return LabeledDataset(views["text"][0], views["audio"][0], views["video"][0], labels, tags)


def write_dataset(ds: LabeledDataset, out_dir: PathLike) -> Path:
    out = ensure_directory(out_dir)
    for name in MODALITIES:
        save_table(ds.view(name), out / f"{name}.csv", labels=ds.labels)
    counts = {tag: class_counts(ds.split(tag).labels) for tag in SPLIT_TAGS}
    atomic_write_json(out / SPLIT_NAME, {"tags": list(ds.split_tag or ()), "class_counts": counts})
    return out


def load_dataset(work_dir: PathLike, kind: str) -> LabeledDataset:
    """
    Read a prepared dataset view.

    Raises:
        DataError: The dataset was not prepared or its files disagree
    """
    directory = Path(work_dir) / DATASET_DIR / kind
    if not (directory / SPLIT_NAME).exists():
        raise DataError(f"no prepared dataset in {directory}; run `sentifuse prepare` first", path=str(directory))
    views = {name: load_table(directory / f"{name}.csv", label_column="label") for name in MODALITIES}
    return _aligned_dataset(views, read_json(directory / SPLIT_NAME)["tags"])  # type: ignore[arg-type]


def prepare(manager: ConfigManager) -> Dict[str, LabeledDataset]:
    """
    Join the featurized modalities, tag splits and oversample training rows.

    Both views use the same split tags and the same oversampling stream,
    so their rows stay aligned.
    """
    cfg = manager.config
    work_dir = manager.work_dir
    split = read_json(work_dir / FEATURE_DIR / SPLIT_NAME)
    if split.get("seed") != cfg.seed or split.get("scheme") != cfg.split.scheme:
        raise DataError("features were split with another seed or scheme; run `sentifuse featurize all` again")

    prepared: Dict[str, LabeledDataset] = {}
    for kind in (ENRICHED, PLAIN):
        views = {name: _load_feature_view(work_dir, name, kind) for name in MODALITIES}
        ds = _aligned_dataset(views, split["tags"])
        check_labels(ds.labels, cfg.n_classes)
        logger.info(f"Class counts before oversampling: {class_counts(ds.split('train').labels, cfg.n_classes)}")
        if cfg.labels.oversample:
            ds = rebalance_training_split(ds, cfg.labels.target_counts, SeededRng(cfg.seed).spawn("oversample"))
        write_dataset(ds, work_dir / DATASET_DIR / kind)
        prepared[kind] = ds
    return prepared


# Train and evaluate

def kind_for(variant: str) -> str:
    return PLAIN if variant in PLAIN_VARIANTS else ENRICHED


def check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise UsageError(f"unknown variant '{variant}' (choose {', '.join(VARIANTS)})")
    return variant


def model_inputs(ds: LabeledDataset, variant: str) -> Dict[str, np.ndarray]:
    """Branch inputs of ``variant``, keyed by branch name."""
    if variant in ("fused", "late-simple"):
        return {name: ds.view(name).values for name in MODALITIES}
    if variant == "early":
        return {EARLY_BRANCH: np.hstack([ds.view(name).values for name in MODALITIES])}
    return {variant: ds.view(variant).values}


def build_spec(ds: LabeledDataset, variant: str, cfg: RunConfig) -> ModelSpec:
    widths = {name: ds.view(name).cols for name in MODALITIES}
    if variant in ("fused", "late-simple"):
        return fused_spec(widths, cfg.model, cfg.n_classes)
    if variant == "early":
        return early_spec(sum(widths.values()), cfg.model, cfg.n_classes)
    return unimodal_spec(variant, widths[variant], cfg.model, cfg.n_classes)


def split_batches(ds: LabeledDataset, variant: str) -> Dict[str, Batch]:
    batches = {}
    for tag in SPLIT_TAGS:
        part = ds.split(tag)
        batches[tag] = Batch(model_inputs(part, variant), part.labels)
    return batches


def run_dir_for(work_dir: PathLike, variant: str) -> Path:
    return Path(work_dir) / RUNS_DIR / variant


@dataclass
class RunOutcome:
    """What a train (and optional evaluation) stage produced."""

    variant: str
    run_dir: Path
    model: FusionModel
    history: Optional[TrainHistory] = None
    report: Optional[EvalReport] = None


def train_variant(manager: ConfigManager, variant: str, on_epoch: Optional[EpochCallback] = None) -> RunOutcome:
    """
    Train ``variant`` on the prepared dataset and write its run directory.

    Raises:
        UsageError: Unknown variant
        DataError: Dataset missing or a split is empty
        NumericError: Training diverged
    """
    cfg = manager.config
    check_variant(variant)
    ds = load_dataset(manager.work_dir, kind_for(variant))
    batches = split_batches(ds, variant)
    spec = build_spec(ds, variant, cfg)

    run_dir = ensure_directory(run_dir_for(manager.work_dir, variant))
    manager.write_resolved(run_dir)
    atomic_write_json(run_dir / MODEL_NAME, {"variant": variant, "kind": kind_for(variant), "spec": spec.to_dict()})

    seeds = SeededRng(cfg.train_seed)
    model = init_model(spec, seeds.spawn("init"))
    logger.info(f"Training '{variant}' ({model.n_parameters} parameters, {batches['train'].rows} training rows)")
    model, history = train_loop(
        model,
        {"train": batches["train"], "val": batches["val"]},
        cfg.train,
        seeds.spawn("train"),
        run_dir / CHECKPOINT_NAME,
        on_epoch,
    )
    export_training(history, run_dir, cfg.export.include_timing, cfg.export.svg)
    return RunOutcome(variant, run_dir, model, history)


def read_run_model(run_dir: PathLike) -> Tuple[str, ModelSpec]:
    document = read_json(Path(run_dir) / MODEL_NAME)
    try:
        return check_variant(document["variant"]), ModelSpec.from_dict(document["spec"])
    except (KeyError, TypeError) as e:
        raise DataError(f"malformed {MODEL_NAME} in {run_dir}: {e}", path=str(run_dir))


def evaluate_model(
    manager: ConfigManager,
    model: FusionModel,
    variant: str,
    out_dir: PathLike,
    history: Optional[TrainHistory] = None,
) -> EvalReport:
    """Score the test split, record train/val accuracy and export the report files."""
    cfg = manager.config
    batches = split_batches(load_dataset(manager.work_dir, kind_for(variant)), variant)
    report = evaluate(model, batches["test"], class_names_for(cfg), variant)
    report.train_accuracy = batch_accuracy(predict_proba(model, batches["train"]), batches["train"].labels)
    report.val_accuracy = batch_accuracy(predict_proba(model, batches["val"]), batches["val"].labels)
    export_report(report, out_dir, history, cfg.export.svg)
    logger.info(f"'{variant}' test accuracy {report.accuracy:.4f}, macro AUC {report.macro_auc:.4f}")
    return report


def evaluate_checkpoint(manager: ConfigManager, checkpoint: PathLike, out_dir: Optional[PathLike] = None) -> EvalReport:
    """
    Load a checkpoint (its run directory holds model.json) and evaluate it.

    Raises:
        DataError: Missing or unreadable checkpoint, model description or dataset
        ModelStateError: The checkpoint does not match the model description
    """
    checkpoint = Path(checkpoint)
    variant, spec = read_run_model(checkpoint.parent)
    model = load_checkpoint(checkpoint, spec)
    return evaluate_model(manager, model, variant, out_dir or checkpoint.parent)


def train_and_evaluate(manager: ConfigManager, variant: str, on_epoch: Optional[EpochCallback] = None) -> RunOutcome:
    outcome = train_variant(manager, variant, on_epoch)
    outcome.report = evaluate_model(manager, outcome.model, variant, outcome.run_dir, outcome.history)
    return outcome


def run_baseline(manager: ConfigManager, which: str, on_epoch: Optional[EpochCallback] = None) -> RunOutcome:
    if which not in BASELINES:
        raise UsageError(f"unknown baseline '{which}' (choose {', '.join(BASELINES)})")
    return train_and_evaluate(manager, which, on_epoch)


# Compare

@dataclass(frozen=True)
class RunSummary:
    name: str
    variant: str
    accuracy: float
    weighted_f1: float
    macro_auc: float


def read_run_summary(run_dir: PathLike) -> RunSummary:
    directory = Path(run_dir)
    document = read_json(directory / REPORT_NAME)
    if not isinstance(document, dict) or document.get("schema") != REPORT_SCHEMA:
        raise DataError(f"{directory / REPORT_NAME} is not a {REPORT_SCHEMA} document", path=str(directory))
    try:
        return RunSummary(
            directory.name,
            str(document.get("variant") or directory.name),
            float(document["accuracy"]),
            float(document["weighted"]["f1"]),
            float(document["macro_auc"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"incomplete report in {directory}: {e}", path=str(directory))


def compare_runs(run_dirs: Sequence[PathLike]) -> List[RunSummary]:
    """Summaries of ``run_dirs`` ranked by test accuracy, best first."""
    if not run_dirs:
        raise UsageError("compare needs at least one run directory")
    summaries = [read_run_summary(d) for d in run_dirs]
    return sorted(summaries, key=lambda s: (-s.accuracy, s.name))


def comparison_markdown(summaries: Sequence[RunSummary]) -> str:
    lines = [
        "| rank | run | variant | accuracy | weighted F1 | macro AUC |",
        "|---:|---|---|---:|---:|---:|",
    ]
    for rank, s in enumerate(summaries, 1):
        lines.append(
            f"| {rank} | {s.name} | {s.variant} | {s.accuracy * 100:.2f}% | {s.weighted_f1:.4f} | {s.macro_auc:.4f} |"
        )
    return "\n".join(lines) + "\n"


__all__ = [
    "FEATURE_DIR",
    "DATASET_DIR",
    "RUNS_DIR",
    "MODEL_NAME",
    "ENRICHED",
    "PLAIN",
    "BASELINES",
    "class_names_for",
    "target_labels",
    "split_tags",
    "featurize",
    "prepare",
    "load_dataset",
    "write_dataset",
    "kind_for",
    "model_inputs",
    "build_spec",
    "split_batches",
    "run_dir_for",
    "RunOutcome",
    "train_variant",
    "evaluate_model",
    "evaluate_checkpoint",
    "train_and_evaluate",
    "run_baseline",
    "RunSummary",
    "compare_runs",
    "comparison_markdown",
]
