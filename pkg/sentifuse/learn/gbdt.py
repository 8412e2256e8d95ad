"""
Gradient-Boosted Trees - Multiclass softmax boosting with exact greedy splits.

Every round fits one regression tree per class on the softmax gradients
computed at the start of the round. Trees are stored as flat node arrays
in depth-first (left child first) order, so leaf ids numbered in that
order run left to right.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from sentifuse.core.config_schemas import GbdtConfig
from sentifuse.core.exceptions import DataError, ModelStateError, NumericError, ValidationError
from sentifuse.core.models import FeatureMatrix
from sentifuse.core.rng import SeededRng
from sentifuse.learn.mathops import check_labels, mean_nll, softmax


logger = logging.getLogger(__name__)

GBDT_SCHEMA = "sentifuse-gbdt"
GBDT_SCHEMA_VERSION = 1
HESSIAN_FLOOR = 1e-16
LEAF_ENCODINGS = ("one_hot", "index")

ArrayLike = Union[np.ndarray, FeatureMatrix]


def _as_array(X: ArrayLike) -> np.ndarray:
    values = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)
    if values.ndim != 2:
        raise ValidationError(f"feature matrix must be 2-D, got shape {values.shape}", field_name="X")
    return values


@dataclass
class Tree:
    """Flat regression tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    leaf_id: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def depth(self) -> int:
        def walk(node: int) -> int:
            if self.feature[node] < 0:
                return 0
            return 1 + max(walk(int(self.left[node])), walk(int(self.right[node])))

        return walk(0)

    def route(self, X: np.ndarray) -> np.ndarray:
        """Node index reached by every row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            internal = self.feature[node] >= 0
            if not internal.any():
                return node
            active = rows[internal]
            current = node[active]
            go_left = X[active, self.feature[current]] < self.threshold[current]
            node[active] = np.where(go_left, self.left[current], self.right[current])

    def to_dict(self, node: int = 0) -> Dict[str, Any]:
        if self.feature[node] < 0:
            return {"leaf_id": int(self.leaf_id[node]), "value": float(self.value[node])}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_dict(int(self.left[node])),
            "right": self.to_dict(int(self.right[node])),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Tree":
        builder = _TreeBuilder()

        def add(entry: Dict[str, Any]) -> int:
            if "leaf_id" in entry:
                return builder.leaf(float(entry["value"]))
            node = builder.split(int(entry["feature"]), float(entry["threshold"]))
            builder.left[node] = add(entry["left"])
            builder.right[node] = add(entry["right"])
            return node

        add(data)
        return builder.build()


class _TreeBuilder:
    def __init__(self) -> None:
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []
        self.leaf_id: List[int] = []
        self.n_leaves = 0

    def _node(self, feature: int, threshold: float, value: float, leaf_id: int) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.leaf_id.append(leaf_id)
        return len(self.feature) - 1

    def leaf(self, value: float) -> int:
        node = self._node(-1, 0.0, value, self.n_leaves)
        self.n_leaves += 1
        return node

    def split(self, feature: int, threshold: float) -> int:
        return self._node(feature, threshold, 0.0, -1)

    def build(self) -> Tree:
        return Tree(
            np.asarray(self.feature, dtype=np.int64),
            np.asarray(self.threshold, dtype=np.float64),
            np.asarray(self.left, dtype=np.int64),
            np.asarray(self.right, dtype=np.int64),
            np.asarray(self.value, dtype=np.float64),
            np.asarray(self.leaf_id, dtype=np.int64),
        )


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float
    gain: float
    n_left: int


def split_gain(g_left: float, h_left: float, g_right: float, h_right: float, l2_reg: float) -> float:
    """0.5 * [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)]."""
    g, h = g_left + g_right, h_left + h_right
    return 0.5 * (
        g_left ** 2 / (h_left + l2_reg) + g_right ** 2 / (h_right + l2_reg) - g ** 2 / (h + l2_reg)
    )


def best_split(
    X: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    l2_reg: float,
    min_samples_leaf: int,
    features: Optional[np.ndarray] = None,
) -> Optional[SplitCandidate]:
    """
    Exact greedy search over every (feature, distinct value) boundary.

    Rows with ``x[f] < threshold`` go left; the threshold is the smallest
    value on the right. Only positive-gain splits leaving at least
    ``min_samples_leaf`` rows per side qualify; ties resolve to the lowest
    feature index, then the lowest threshold.
    """
    n_rows = X.shape[0]
    if n_rows < 2 * min_samples_leaf or n_rows < 2:
        return None
    columns = np.arange(X.shape[1]) if features is None else np.asarray(features, dtype=np.int64)
    if columns.size == 0:
        return None

    block = X[:, columns]
    order = np.argsort(block, axis=0, kind="stable")
    ordered = np.take_along_axis(block, order, axis=0)
    g_left = np.cumsum(grad[order], axis=0)[:-1]
    h_left = np.cumsum(hess[order], axis=0)[:-1]
    g_total, h_total = float(grad.sum()), float(hess.sum())
    g_right, h_right = g_total - g_left, h_total - h_left

    gain = 0.5 * (
        g_left ** 2 / (h_left + l2_reg)
        + g_right ** 2 / (h_right + l2_reg)
        - g_total ** 2 / (h_total + l2_reg)
    )
    n_left = np.arange(1, n_rows)[:, None]
    valid = (ordered[:-1] < ordered[1:]) & (n_left >= min_samples_leaf) & (n_rows - n_left >= min_samples_leaf)
    gain = np.where(valid, gain, -np.inf)

    # Feature-major flattening: argmax picks the lowest feature, then lowest threshold.
    flat = int(np.argmax(gain.T))
    column, position = divmod(flat, n_rows - 1)
    best = float(gain[position, column])
    if not best > 0.0:
        return None
    return SplitCandidate(
        int(columns[column]), float(ordered[position + 1, column]), best, position + 1
    )


def _grow_tree(
    X: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    config: GbdtConfig,
    features: Optional[np.ndarray],
) -> Tree:
    builder = _TreeBuilder()

    def grow(rows: np.ndarray, depth: int) -> int:
        g, h = grad[rows], hess[rows]
        split = None
        if depth < config.max_depth:
            split = best_split(X[rows], g, h, config.l2_reg, config.min_samples_leaf, features)
        if split is None:
            return builder.leaf(-float(g.sum()) / (float(h.sum()) + config.l2_reg))
        node = builder.split(split.feature, split.threshold)
        goes_left = X[rows, split.feature] < split.threshold
        builder.left[node] = grow(rows[goes_left], depth + 1)
        builder.right[node] = grow(rows[~goes_left], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return builder.build()


@dataclass
class GbdtModel:
    """Fitted ensemble; ``trees[r * n_classes + c]`` is round r, class c."""

    trees: List[Tree]
    n_classes: int
    n_features: int
    learning_rate: float
    base_score: np.ndarray
    config: GbdtConfig
    loss_trace: List[float] = field(default_factory=list)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_rounds(self) -> int:
        return self.n_trees // self.n_classes

    def _check_width(self, X: np.ndarray) -> None:
        if X.shape[1] != self.n_features:
            raise ValidationError(
                f"column mismatch: model expects {self.n_features} features, got {X.shape[1]}",
                field_name="X",
            )

    def tree_outputs(self, X: np.ndarray) -> np.ndarray:
        """rows x n_trees leaf values (unscaled)."""
        out = np.zeros((X.shape[0], self.n_trees), dtype=np.float64)
        for t, tree in enumerate(self.trees):
            out[:, t] = tree.value[tree.route(X)]
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": GBDT_SCHEMA,
            "version": GBDT_SCHEMA_VERSION,
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "learning_rate": self.learning_rate,
            "base_score": [float(v) for v in self.base_score],
            "config": self.config.model_dump(mode="json"),
            "loss_trace": [float(v) for v in self.loss_trace],
            "trees": [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GbdtModel":
        if data.get("schema") != GBDT_SCHEMA:
            raise DataError(f"not a {GBDT_SCHEMA} document")
        if data.get("version") != GBDT_SCHEMA_VERSION:
            raise DataError(f"unsupported {GBDT_SCHEMA} version {data.get('version')}")
        model = cls(
            [Tree.from_dict(entry) for entry in data["trees"]],
            int(data["n_classes"]),
            int(data["n_features"]),
            float(data["learning_rate"]),
            np.asarray(data["base_score"], dtype=np.float64),
            GbdtConfig.model_validate(data["config"]),
            [float(v) for v in data.get("loss_trace", [])],
        )
        if model.n_trees % model.n_classes:
            raise DataError("tree count is not a multiple of the class count")
        return model

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GbdtModel":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise DataError(f"invalid GBDT document: {e}")


def _draw(rng: Optional[SeededRng], n: int, fraction: float, what: str) -> Optional[np.ndarray]:
    if fraction >= 1.0:
        return None
    if rng is None:
        raise ValidationError(f"{what} subsampling needs an explicit SeededRng", field_name="rng")
    size = max(1, math.ceil(fraction * n))
    return np.sort(rng.permutation(n)[:size])


def gbdt_fit(
    X: ArrayLike,
    y: Sequence[int],
    config: Optional[GbdtConfig] = None,
    rng: Optional[SeededRng] = None,
    n_classes: Optional[int] = None,
) -> GbdtModel:
    """
    Fit a multiclass softmax GBDT.

    Args:
        X: Feature rows
        y: Labels in [0, n_classes)
        config: Hyperparameters; defaults when omitted
        rng: Stream for row/column subsampling (required only when enabled)
        n_classes: Class count; ``max(y) + 1`` when omitted

    Raises:
        ValidationError: Fewer than two classes or labels out of range
        NumericError: Non-finite features
    """
    config = config or GbdtConfig()
    values = _as_array(X)
    labels = np.asarray(y, dtype=np.int64).reshape(-1)
    if labels.shape[0] != values.shape[0]:
        raise ValidationError(f"{labels.shape[0]} labels for {values.shape[0]} rows", field_name="y")
    if values.shape[0] == 0:
        raise ValidationError("empty input", field_name="X")
    if not np.all(np.isfinite(values)):
        raise NumericError("GBDT input contains non-finite features")
    k = int(n_classes if n_classes is not None else labels.max() + 1)
    if k < 2:
        raise ValidationError("GBDT needs at least two classes", field_name="n_classes", invalid_value=k)
    labels = check_labels(labels, k)

    n = values.shape[0]
    onehot = np.zeros((n, k), dtype=np.float64)
    onehot[np.arange(n), labels] = 1.0
    if config.base_score == "prior":
        prior = np.maximum(onehot.mean(axis=0), 1e-12)
        base = np.log(prior)
    else:
        base = np.zeros(k, dtype=np.float64)

    logits = np.tile(base, (n, 1))
    trees: List[Tree] = []
    loss_trace = [mean_nll(softmax(logits), labels)]
    for round_index in range(config.n_rounds):
        probs = softmax(logits)
        grad = probs - onehot
        hess = np.maximum(probs * (1.0 - probs), HESSIAN_FLOOR)
        round_rng = rng.spawn(round_index) if rng is not None else None
        round_trees = []
        for c in range(k):
            class_rng = round_rng.spawn(c) if round_rng is not None else None
            rows = _draw(class_rng.spawn("rows") if class_rng else None, n, config.subsample, "row")
            cols = _draw(class_rng.spawn("cols") if class_rng else None, values.shape[1], config.colsample, "column")
            if rows is None:
                tree = _grow_tree(values, grad[:, c], hess[:, c], config, cols)
            else:
                tree = _grow_tree(values[rows], grad[rows, c], hess[rows, c], config, cols)
            round_trees.append(tree)
        for c, tree in enumerate(round_trees):
            logits[:, c] += config.learning_rate * tree.value[tree.route(values)]
        trees.extend(round_trees)
        loss_trace.append(mean_nll(softmax(logits), labels))

    if config.n_rounds:
        logger.debug(
            f"GBDT: {config.n_rounds} rounds x {k} classes, loss {loss_trace[0]:.4f} -> {loss_trace[-1]:.4f}"
        )
    return GbdtModel(trees, k, values.shape[1], config.learning_rate, base, config, loss_trace)


def _require_model(m: Optional[GbdtModel]) -> GbdtModel:
    if m is None:
        raise ModelStateError("GBDT model is not fitted")
    return m


def gbdt_logits(m: GbdtModel, X: ArrayLike) -> np.ndarray:
    m = _require_model(m)
    values = _as_array(X)
    m._check_width(values)
    outputs = m.tree_outputs(values)
    logits = np.tile(m.base_score, (values.shape[0], 1))
    for t in range(m.n_trees):
        logits[:, t % m.n_classes] += m.learning_rate * outputs[:, t]
    return logits


def gbdt_predict_proba(m: GbdtModel, X: ArrayLike) -> np.ndarray:
    """rows x K class probabilities."""
    return softmax(gbdt_logits(m, X))


def gbdt_leaf_indices(m: GbdtModel, X: ArrayLike) -> np.ndarray:
    """rows x n_trees leaf ids, trees in (round, class) order."""
    m = _require_model(m)
    values = _as_array(X)
    m._check_width(values)
    out = np.zeros((values.shape[0], m.n_trees), dtype=np.int64)
    for t, tree in enumerate(m.trees):
        out[:, t] = tree.leaf_id[tree.route(values)]
    return out


def softmax_loss(m: GbdtModel, X: ArrayLike, y: Sequence[int]) -> float:
    """Mean softmax cross-entropy of the model on (X, y)."""
    return mean_nll(gbdt_predict_proba(m, X), np.asarray(y))


def leaf_embeddings(m: GbdtModel, X: ArrayLike, encoding: str = "one_hot") -> FeatureMatrix:
    """
    Encode the leaf every tree routes each row to.

    ``one_hot`` yields one column per leaf (exactly one 1 per tree and
    row); ``index`` yields one column per tree holding the leaf id.
    """
    if encoding not in LEAF_ENCODINGS:
        raise ValidationError(f"unknown leaf encoding '{encoding}'", field_name="encoding", invalid_value=encoding)
    indices = gbdt_leaf_indices(m, X)
    if encoding == "index":
        return FeatureMatrix(indices.astype(np.float64), tuple(f"leaf_{t}" for t in range(m.n_trees)))

    blocks = []
    names: List[str] = []
    for t, tree in enumerate(m.trees):
        block = np.zeros((indices.shape[0], tree.n_leaves), dtype=np.float64)
        block[np.arange(indices.shape[0]), indices[:, t]] = 1.0
        blocks.append(block)
        names.extend(f"leaf_{t}_{j}" for j in range(tree.n_leaves))
    values = np.hstack(blocks) if blocks else np.zeros((indices.shape[0], 0))
    return FeatureMatrix(values, tuple(names))


__all__ = [
    "GBDT_SCHEMA",
    "GBDT_SCHEMA_VERSION",
    "Tree",
    "SplitCandidate",
    "split_gain",
    "best_split",
    "GbdtModel",
    "gbdt_fit",
    "gbdt_logits",
    "gbdt_predict_proba",
    "gbdt_leaf_indices",
    "softmax_loss",
    "leaf_embeddings",
]
