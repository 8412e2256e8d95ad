"""
Video Pipeline - MoCap descriptor gap filling, scaling and GBDT stacking.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from sentifuse.core.config_schemas import GbdtConfig, VideoSettings
from sentifuse.core.exceptions import DataError, ModelStateError, ValidationError
from sentifuse.core.models import FeatureMatrix, ZScoreStats
from sentifuse.core.rng import SeededRng
from sentifuse.core.tables import concat_columns, zscore_apply, zscore_fit
from sentifuse.learn.gbdt import GbdtModel, gbdt_fit, gbdt_predict_proba


logger = logging.getLogger(__name__)

INTERPOLATION_METHODS = ("linear", "median")
VIDEO_SCHEMA = "sentifuse-video"
VIDEO_SCHEMA_VERSION = 1


def interpolate_missing(t: FeatureMatrix, method: str = "linear") -> FeatureMatrix:
    """
    Fill non-finite entries column by column.

    ``linear`` interpolates between the nearest finite neighbours in row
    order and extends the first/last finite value over leading and
    trailing gaps; ``median`` fills with the column median.

    Raises:
        DataError: A column has no finite value
    """
    if method not in INTERPOLATION_METHODS:
        raise ValidationError(f"unknown interpolation '{method}'", field_name="method", invalid_value=method)
    values = np.array(t.values, dtype=np.float64)
    rows = np.arange(t.rows, dtype=np.float64)
    filled = 0
    for j, name in enumerate(t.col_names):
        column = values[:, j]
        known = np.isfinite(column)
        if known.all():
            continue
        if not known.any():
            raise DataError(f"column '{name}' has no finite values")
        if method == "linear":
            column[~known] = np.interp(rows[~known], rows[known], column[known])
        else:
            column[~known] = np.median(column[known])
        filled += int((~known).sum())
    if filled:
        logger.debug(f"Filled {filled} missing video entries ({method})")
    return FeatureMatrix(values, t.col_names)


def probability_columns(n_classes: int) -> Tuple[str, ...]:
    return tuple(f"gbdt_p{c}" for c in range(n_classes))


def stratified_folds(labels: np.ndarray, n_folds: int, rng: SeededRng) -> List[np.ndarray]:
    """Row indices per fold; each class is shuffled and dealt round-robin."""
    assignment = np.zeros(labels.shape[0], dtype=np.int64)
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        shuffled = members[rng.spawn(int(c)).permutation(members.shape[0])]
        assignment[shuffled] = np.arange(shuffled.shape[0]) % n_folds
    return [np.flatnonzero(assignment == f) for f in range(n_folds)]


def out_of_fold_probabilities(
    X: FeatureMatrix,
    y: np.ndarray,
    config: GbdtConfig,
    n_classes: int,
    n_folds: int,
    rng: SeededRng,
) -> np.ndarray:
    """Probabilities for every row from a model that never saw that row."""
    probs = np.zeros((X.rows, n_classes), dtype=np.float64)
    folds = stratified_folds(y, n_folds, rng.spawn("folds"))
    for f, held_out in enumerate(folds):
        if held_out.size == 0:
            continue
        fit_rows = np.setdiff1d(np.arange(X.rows), held_out)
        model = gbdt_fit(X.values[fit_rows], y[fit_rows], config, rng.spawn(f"fold{f}"), n_classes)
        probs[held_out] = gbdt_predict_proba(model, X.values[held_out])
    return probs


def stack_with_gbdt(
    t: FeatureMatrix,
    y: Optional[Sequence[int]],
    config: Optional[GbdtConfig] = None,
    rng: Optional[SeededRng] = None,
    model: Optional[GbdtModel] = None,
    n_classes: Optional[int] = None,
    out_of_fold: bool = False,
    n_folds: int = 5,
) -> Tuple[FeatureMatrix, GbdtModel]:
    """
    Append GBDT class probabilities to the scaled table.

    With labels the model is fitted on ``t``; the appended block then
    holds either whole-model or out-of-fold probabilities. Without labels
    the given fitted ``model`` is applied.

    Raises:
        ModelStateError: No labels and no fitted model
    """
    config = config or GbdtConfig()
    if model is None:
        if y is None:
            raise ModelStateError("stacking needs labels or a fitted GBDT model")
        labels = np.asarray(y, dtype=np.int64)
        rng = rng or SeededRng(0)
        model = gbdt_fit(t, labels, config, rng.spawn("full"), n_classes)
        if out_of_fold:
            probs = out_of_fold_probabilities(t, labels, config, model.n_classes, n_folds, rng)
        else:
            probs = gbdt_predict_proba(model, t)
    else:
        probs = gbdt_predict_proba(model, t)
    stacked = concat_columns(t, FeatureMatrix(probs, probability_columns(model.n_classes)))
    return stacked, model


class VideoFeaturizer:
    """Z-scoring plus GBDT stacking, fitted on training rows of an interpolated table."""

    def __init__(
        self,
        settings: Optional[VideoSettings] = None,
        gbdt: Optional[GbdtConfig] = None,
        n_classes: Optional[int] = None,
        plain: bool = False,
    ):
        self.settings = settings or VideoSettings()
        self.gbdt = gbdt or GbdtConfig()
        self.n_classes = n_classes
        self.plain = plain
        self.stats: Optional[ZScoreStats] = None
        self.model: Optional[GbdtModel] = None

    def fit_transform(self, table: FeatureMatrix, labels: Sequence[int], rng: Optional[SeededRng] = None) -> FeatureMatrix:
        """Fit on training rows and return their stacked features (out-of-fold when enabled)."""
        self.stats = zscore_fit(table)
        scaled = zscore_apply(table, self.stats)
        if self.plain:
            return scaled
        stacked, self.model = stack_with_gbdt(
            scaled,
            labels,
            self.gbdt,
            rng,
            n_classes=self.n_classes,
            out_of_fold=self.settings.out_of_fold,
            n_folds=self.settings.n_folds,
        )
        logger.info(
            f"Video GBDT fitted ({'out-of-fold' if self.settings.out_of_fold else 'in-sample'} training probabilities)"
        )
        return stacked

    def transform(self, table: FeatureMatrix) -> FeatureMatrix:
        if self.stats is None:
            raise ModelStateError("video featurizer is not fitted")
        scaled = zscore_apply(table, self.stats)
        if self.plain:
            return scaled
        stacked, _ = stack_with_gbdt(scaled, None, self.gbdt, model=self.model)
        return stacked

    def to_dict(self) -> Dict[str, Any]:
        if self.stats is None:
            raise ModelStateError("video featurizer is not fitted")
        return {
            "schema": VIDEO_SCHEMA,
            "version": VIDEO_SCHEMA_VERSION,
            "plain": self.plain,
            "n_classes": self.n_classes,
            "settings": self.settings.model_dump(mode="json"),
            "gbdt_config": self.gbdt.model_dump(mode="json"),
            "zscore": self.stats.to_dict(),
            "gbdt": self.model.to_dict() if self.model is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "VideoFeaturizer":
        if data.get("schema") != VIDEO_SCHEMA or data.get("version") != VIDEO_SCHEMA_VERSION:
            raise DataError(f"not a {VIDEO_SCHEMA} v{VIDEO_SCHEMA_VERSION} document")
        featurizer = cls(
            VideoSettings.model_validate(data["settings"]),
            GbdtConfig.model_validate(data["gbdt_config"]),
            data.get("n_classes"),
            data["plain"],
        )
        featurizer.stats = ZScoreStats.from_dict(data["zscore"])
        if data.get("gbdt") is not None:
            featurizer.model = GbdtModel.from_dict(data["gbdt"])
        return featurizer


__all__ = [
    "INTERPOLATION_METHODS",
    "interpolate_missing",
    "probability_columns",
    "stratified_folds",
    "out_of_fold_probabilities",
    "stack_with_gbdt",
    "VideoFeaturizer",
]
