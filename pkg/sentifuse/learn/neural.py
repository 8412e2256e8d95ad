"""
Neural Fusion Model - Dense encoders, fusion head, backpropagation and Adam.

A model is a set of named branches, each a stack of dense layers applied
in the order Dense -> BatchNorm (optional) -> ReLU -> Dropout, whose
outputs are concatenated in branch order and fed through one fusion layer
(Dense -> ReLU -> Dropout) and a softmax output layer. The same machinery
builds the fused model, single-modality models and the early-fusion model.

Dense weights are stored out x in. Tensors are listed per branch and
layer as W, b, then gamma, beta, running_mean, running_var for
batch-normalized layers; the optional projection, the fusion layer and
the output layer follow.
"""

import copy
import hashlib
import json
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from sentifuse.core.config_schemas import EncoderSpec, ModelSettings
from sentifuse.core.exceptions import ModelStateError, NumericError, ValidationError
from sentifuse.core.rng import SeededRng
from sentifuse.learn.mathops import check_labels, mean_nll, softmax


logger = logging.getLogger(__name__)

MODES = ("train", "eval")
EARLY_BRANCH = "early"


@dataclass(frozen=True)
class BranchSpec:
    """One encoder: input width, dense stack and optional ReLU projection."""

    name: str
    input_width: int
    encoder: EncoderSpec
    projection: Optional[int] = None

    @property
    def output_width(self) -> int:
        return self.projection if self.projection is not None else self.encoder.output_width

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "input_width": self.input_width,
            "encoder": self.encoder.model_dump(mode="json"),
            "projection": self.projection,
        }


@dataclass(frozen=True)
class ModelSpec:
    """Complete architecture; its digest identifies compatible checkpoints."""

    branches: Tuple[BranchSpec, ...]
    n_classes: int
    fusion_width: int = 256
    fusion_dropout: float = 0.4
    bn_momentum: float = 0.9
    bn_epsilon: float = 1e-5

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValidationError("a model needs at least one branch", field_name="branches")
        names = [b.name for b in self.branches]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate branch names: {names}", field_name="branches")
        if self.n_classes < 2:
            raise ValidationError("at least two classes required", field_name="n_classes", invalid_value=self.n_classes)
        if any(b.input_width < 1 for b in self.branches):
            raise ValidationError("branch input widths must be positive", field_name="branches")

    @property
    def branch_names(self) -> Tuple[str, ...]:
        return tuple(b.name for b in self.branches)

    @property
    def fused_width(self) -> int:
        return sum(b.output_width for b in self.branches)

    def to_dict(self) -> Dict:
        return {
            "branches": [b.to_dict() for b in self.branches],
            "n_classes": self.n_classes,
            "fusion_width": self.fusion_width,
            "fusion_dropout": self.fusion_dropout,
            "bn_momentum": self.bn_momentum,
            "bn_epsilon": self.bn_epsilon,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ModelSpec":
        return cls(
            tuple(
                BranchSpec(b["name"], int(b["input_width"]), EncoderSpec.model_validate(b["encoder"]), b.get("projection"))
                for b in data["branches"]
            ),
            int(data["n_classes"]),
            int(data["fusion_width"]),
            float(data["fusion_dropout"]),
            float(data["bn_momentum"]),
            float(data["bn_epsilon"]),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> bytes:
        """SHA-256 of the canonical JSON form."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).digest()


def fused_spec(input_widths: Mapping[str, int], settings: Optional[ModelSettings] = None, n_classes: int = 6) -> ModelSpec:
    """Three-branch late-fusion model in ``settings.fusion_order``."""
    settings = settings or ModelSettings()
    branches = []
    for name in settings.fusion_order:
        if name not in input_widths:
            raise ValidationError(f"no input width for branch '{name}'", field_name="input_widths")
        projection = settings.video_projection if name == "video" else None
        branches.append(BranchSpec(name, int(input_widths[name]), getattr(settings, name), projection))
    return _head(tuple(branches), settings, n_classes)


def unimodal_spec(modality: str, input_width: int, settings: Optional[ModelSettings] = None, n_classes: int = 6) -> ModelSpec:
    """One encoder plus the fusion head."""
    settings = settings or ModelSettings()
    if modality not in ("text", "audio", "video"):
        raise ValidationError(f"unknown modality '{modality}'", field_name="modality", invalid_value=modality)
    projection = settings.video_projection if modality == "video" else None
    return _head((BranchSpec(modality, input_width, getattr(settings, modality), projection),), settings, n_classes)


def early_spec(input_width: int, settings: Optional[ModelSettings] = None, n_classes: int = 6) -> ModelSpec:
    """Single dense network over concatenated raw modality features."""
    settings = settings or ModelSettings()
    return _head((BranchSpec(EARLY_BRANCH, input_width, settings.early),), settings, n_classes)


def _head(branches: Tuple[BranchSpec, ...], settings: ModelSettings, n_classes: int) -> ModelSpec:
    return ModelSpec(
        branches, n_classes, settings.fusion_width, settings.fusion_dropout, settings.bn_momentum, settings.bn_epsilon
    )


def tensor_layout(spec: ModelSpec) -> List[Tuple[str, Tuple[int, ...], str]]:
    """
    Every tensor of a model as (name, shape, kind), kind being
    "param" (trainable) or "buffer" (batch-norm running statistics).
    """
    layout: List[Tuple[str, Tuple[int, ...], str]] = []
    for branch in spec.branches:
        width = branch.input_width
        enc = branch.encoder
        for i, (out, use_bn) in enumerate(zip(enc.widths, enc.batch_norm)):
            prefix = f"{branch.name}.{i}"
            layout.append((f"{prefix}.W", (out, width), "param"))
            layout.append((f"{prefix}.b", (out,), "param"))
            if use_bn:
                layout.append((f"{prefix}.gamma", (out,), "param"))
                layout.append((f"{prefix}.beta", (out,), "param"))
                layout.append((f"{prefix}.running_mean", (out,), "buffer"))
                layout.append((f"{prefix}.running_var", (out,), "buffer"))
            width = out
        if branch.projection is not None:
            layout.append((f"{branch.name}.proj.W", (branch.projection, width), "param"))
            layout.append((f"{branch.name}.proj.b", (branch.projection,), "param"))
    layout.append(("fusion.W", (spec.fusion_width, spec.fused_width), "param"))
    layout.append(("fusion.b", (spec.fusion_width,), "param"))
    layout.append(("output.W", (spec.n_classes, spec.fusion_width), "param"))
    layout.append(("output.b", (spec.n_classes,), "param"))
    return layout


class FusionModel:
    """
    Parameters and batch-norm buffers of one ModelSpec.

    ``version`` increases on every parameter change so cached forward
    passes from before an update are recognized as stale.
    """

    def __init__(self, spec: ModelSpec, params: "OrderedDict[str, np.ndarray]", buffers: "OrderedDict[str, np.ndarray]"):
        self.spec = spec
        self.params = params
        self.buffers = buffers
        self.version = 0

    def touch(self) -> None:
        self.version += 1

    def parameters(self) -> List[Tuple[str, np.ndarray]]:
        """Trainable tensors in layout order."""
        return list(self.params.items())

    def tensors(self) -> List[Tuple[str, np.ndarray]]:
        """Every tensor (parameters and buffers) in layout order."""
        out = []
        for name, _, kind in tensor_layout(self.spec):
            out.append((name, self.params[name] if kind == "param" else self.buffers[name]))
        return out

    @property
    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {name: array.copy() for name, array in self.tensors()}

    def restore(self, snapshot: Mapping[str, np.ndarray]) -> None:
        for name, array in snapshot.items():
            target = self.params if name in self.params else self.buffers
            if name not in target or target[name].shape != array.shape:
                raise ModelStateError(f"snapshot tensor '{name}' does not fit this model")
            target[name][...] = array
        self.touch()

    def copy(self) -> "FusionModel":
        clone = FusionModel(self.spec, copy.deepcopy(self.params), copy.deepcopy(self.buffers))
        clone.version = self.version
        return clone


def init_model(spec: ModelSpec, rng: SeededRng) -> FusionModel:
    """
    Glorot-uniform weights, zero biases, gamma 1, beta 0, running mean 0 and
    running variance 1. Each weight matrix draws from its own named substream.
    """
    params: "OrderedDict[str, np.ndarray]" = OrderedDict()
    buffers: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for name, shape, kind in tensor_layout(spec):
        suffix = name.rsplit(".", 1)[1]
        if suffix == "W":
            fan_out, fan_in = shape
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.spawn(name).uniform(-limit, limit, shape)
        elif suffix in ("b", "beta"):
            params[name] = np.zeros(shape)
        elif suffix == "gamma":
            params[name] = np.ones(shape)
        elif suffix == "running_mean":
            buffers[name] = np.zeros(shape)
        else:
            buffers[name] = np.ones(shape)
    model = FusionModel(spec, params, buffers)
    logger.debug(f"Initialized model with {model.n_parameters} parameters")
    return model


@dataclass(frozen=True)
class Batch:
    """Aligned input rows per branch name plus their labels."""

    inputs: Mapping[str, np.ndarray]
    labels: np.ndarray

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        for name, x in self.inputs.items():
            if np.shape(x)[0] != labels.shape[0]:
                raise ValidationError(
                    f"branch '{name}' has {np.shape(x)[0]} rows for {labels.shape[0]} labels", field_name="batch"
                )
        object.__setattr__(self, "inputs", {k: np.asarray(v, dtype=np.float64) for k, v in self.inputs.items()})
        object.__setattr__(self, "labels", labels)

    @property
    def rows(self) -> int:
        return int(self.labels.shape[0])

    def take(self, indices: Sequence[int]) -> "Batch":
        idx = np.asarray(indices, dtype=np.int64)
        return Batch({name: x[idx] for name, x in self.inputs.items()}, self.labels[idx])


BatchLike = Union[Batch, Mapping[str, np.ndarray]]


def _batch_inputs(batch: BatchLike) -> Mapping[str, np.ndarray]:
    return batch.inputs if isinstance(batch, Batch) else batch


@dataclass
class LayerCache:
    key: str
    inputs: np.ndarray
    pre_bn: Optional[np.ndarray] = None
    x_hat: Optional[np.ndarray] = None
    inv_std: Optional[np.ndarray] = None
    pre_relu: Optional[np.ndarray] = None
    mask: Optional[np.ndarray] = None


@dataclass
class ForwardCache:
    """Activations of one forward pass, needed by ``backward``."""

    mode: str
    version: int
    n_rows: int
    branches: Dict[str, List[LayerCache]] = field(default_factory=dict)
    fusion: Optional[LayerCache] = None
    joint: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None
    masks: Dict[str, np.ndarray] = field(default_factory=dict)


def _dropout_mask(
    key: str, shape: Tuple[int, ...], rate: float, rng: Optional[SeededRng], given: Optional[Mapping[str, np.ndarray]]
) -> Optional[np.ndarray]:
    if rate <= 0.0:
        return None
    if given is not None and key in given:
        mask = np.asarray(given[key], dtype=np.float64)
        if mask.shape != shape:
            raise ValidationError(f"dropout mask '{key}' has shape {mask.shape}, expected {shape}", field_name="dropout_masks")
        return mask
    if rng is None:
        raise ValidationError("train mode needs an rng for dropout", field_name="rng")
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def _check_inputs(spec: ModelSpec, batch: Mapping[str, np.ndarray]) -> Dict[str, np.ndarray]:
    inputs = {}
    n_rows = None
    for branch in spec.branches:
        if branch.name not in batch:
            raise ValidationError(f"batch lacks input for branch '{branch.name}'", field_name="batch")
        x = np.asarray(batch[branch.name], dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != branch.input_width:
            raise ValidationError(
                f"width mismatch for '{branch.name}': expected {branch.input_width} columns, got shape {x.shape}",
                field_name="batch",
            )
        if n_rows is not None and x.shape[0] != n_rows:
            raise ValidationError("branch inputs have different row counts", field_name="batch")
        n_rows = x.shape[0]
        inputs[branch.name] = x
    return inputs


def forward(
    model: FusionModel,
    batch: BatchLike,
    mode: str = "eval",
    rng: Optional[SeededRng] = None,
    dropout_masks: Optional[Mapping[str, np.ndarray]] = None,
    update_running_stats: bool = True,
) -> Tuple[np.ndarray, ForwardCache]:
    """
    Class probabilities for a batch plus the activations backward needs.

    Args:
        model: Model to run
        batch: Input rows per branch name
        mode: "train" (dropout on, batch statistics) or "eval"
        rng: Dropout stream; train mode only
        dropout_masks: Fixed scaled masks by layer key ("text.0", "fusion"), reused instead of drawing
        update_running_stats: Fold batch statistics into the running ones (train mode)

    Raises:
        ValidationError: Unknown mode or input width mismatch
    """
    if mode not in MODES:
        raise ValidationError(f"unknown mode '{mode}'", field_name="mode", invalid_value=mode)
    spec, params, buffers = model.spec, model.params, model.buffers
    inputs = _check_inputs(spec, _batch_inputs(batch))
    train = mode == "train"
    n_rows = next(iter(inputs.values())).shape[0]
    cache = ForwardCache(mode, model.version, n_rows)

    encoded = []
    for branch in spec.branches:
        h = inputs[branch.name]
        layers: List[LayerCache] = []
        enc = branch.encoder
        for i, (rate, use_bn) in enumerate(zip(enc.dropout, enc.batch_norm)):
            key = f"{branch.name}.{i}"
            layer = LayerCache(key, h)
            z = h @ params[f"{key}.W"].T + params[f"{key}.b"]
            if use_bn:
                layer.pre_bn = z
                if train:
                    mean = z.mean(axis=0)
                    var = z.var(axis=0)
                    if update_running_stats:
                        m = spec.bn_momentum
                        buffers[f"{key}.running_mean"][...] = m * buffers[f"{key}.running_mean"] + (1 - m) * mean
                        buffers[f"{key}.running_var"][...] = m * buffers[f"{key}.running_var"] + (1 - m) * var
                else:
                    mean = buffers[f"{key}.running_mean"]
                    var = buffers[f"{key}.running_var"]
                layer.inv_std = 1.0 / np.sqrt(var + spec.bn_epsilon)
                layer.x_hat = (z - mean) * layer.inv_std
                z = params[f"{key}.gamma"] * layer.x_hat + params[f"{key}.beta"]
            layer.pre_relu = z
            h = np.maximum(z, 0.0)
            if train:
                layer.mask = _dropout_mask(key, h.shape, rate, rng, dropout_masks)
                if layer.mask is not None:
                    cache.masks[key] = layer.mask
                    h = h * layer.mask
            layers.append(layer)
        if branch.projection is not None:
            key = f"{branch.name}.proj"
            layer = LayerCache(key, h)
            layer.pre_relu = h @ params[f"{key}.W"].T + params[f"{key}.b"]
            h = np.maximum(layer.pre_relu, 0.0)
            layers.append(layer)
        cache.branches[branch.name] = layers
        encoded.append(h)

    fused = np.hstack(encoded)
    fusion = LayerCache("fusion", fused)
    fusion.pre_relu = fused @ params["fusion.W"].T + params["fusion.b"]
    joint = np.maximum(fusion.pre_relu, 0.0)
    if train:
        fusion.mask = _dropout_mask("fusion", joint.shape, spec.fusion_dropout, rng, dropout_masks)
        if fusion.mask is not None:
            cache.masks["fusion"] = fusion.mask
            joint = joint * fusion.mask
    cache.fusion = fusion
    cache.joint = joint

    probs = softmax(joint @ params["output.W"].T + params["output.b"])
    cache.probs = probs
    return probs, cache


def loss(probs: np.ndarray, labels: Sequence[int]) -> float:
    """Batch mean of -log p[true class], probabilities clamped at 1e-12."""
    return mean_nll(probs, np.asarray(labels))


def _dense_backward(
    grads: Dict[str, np.ndarray], params: Mapping[str, np.ndarray], key: str, inputs: np.ndarray, dz: np.ndarray
) -> np.ndarray:
    grads[f"{key}.W"] = dz.T @ inputs
    grads[f"{key}.b"] = dz.sum(axis=0)
    return dz @ params[f"{key}.W"]


def backward(model: FusionModel, batch: Union[Batch, Sequence[int]], cache: ForwardCache) -> Dict[str, np.ndarray]:
    """
    Exact gradients of the mean loss for every trainable tensor.

    Dropout masks recorded in the cache are reused.

    Raises:
        ModelStateError: The cache predates a parameter change
    """
    if cache.version != model.version:
        raise ModelStateError("stale forward cache: parameters changed since the forward pass")
    spec, params = model.spec, model.params
    y = check_labels(batch.labels if isinstance(batch, Batch) else batch, spec.n_classes)
    if y.shape[0] != cache.n_rows:
        raise ValidationError(f"{y.shape[0]} labels for {cache.n_rows} rows", field_name="labels")

    grads: Dict[str, np.ndarray] = {}
    dlogits = cache.probs.copy()  # type: ignore[union-attr]
    dlogits[np.arange(y.shape[0]), y] -= 1.0
    dlogits /= y.shape[0]

    djoint = _dense_backward(grads, params, "output", cache.joint, dlogits)  # type: ignore[arg-type]
    fusion = cache.fusion
    if fusion.mask is not None:  # type: ignore[union-attr]
        djoint = djoint * fusion.mask  # type: ignore[union-attr]
    dz = djoint * (fusion.pre_relu > 0)  # type: ignore[union-attr, operator]
    dfused = _dense_backward(grads, params, "fusion", fusion.inputs, dz)  # type: ignore[union-attr]

    offset = 0
    for branch in spec.branches:
        width = branch.output_width
        dh = dfused[:, offset : offset + width]
        offset += width
        for layer in reversed(cache.branches[branch.name]):
            if layer.mask is not None:
                dh = dh * layer.mask
            dz = dh * (layer.pre_relu > 0)
            if layer.x_hat is not None:
                key = layer.key
                grads[f"{key}.gamma"] = (dz * layer.x_hat).sum(axis=0)
                grads[f"{key}.beta"] = dz.sum(axis=0)
                dx_hat = dz * params[f"{key}.gamma"]
                if cache.mode == "train":
                    n = dx_hat.shape[0]
                    dz = (layer.inv_std / n) * (
                        n * dx_hat - dx_hat.sum(axis=0) - layer.x_hat * (dx_hat * layer.x_hat).sum(axis=0)
                    )
                else:
                    dz = dx_hat * layer.inv_std
            dh = _dense_backward(grads, params, layer.key, layer.inputs, dz)

    return OrderedDict((name, grads[name]) for name in params)


@dataclass
class AdamState:
    """First/second moments per parameter plus the step count."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Union[FusionModel, Dict[str, np.ndarray]], grads: Mapping[str, np.ndarray], state: AdamState
) -> Tuple[Union[FusionModel, Dict[str, np.ndarray]], AdamState]:
    """
    One bias-corrected Adam update, applied in place.

    Raises:
        NumericError: Any gradient entry is non-finite
        ValidationError: Gradient and parameter shapes differ
    """
    tensors = params.params if isinstance(params, FusionModel) else params
    for name, g in grads.items():
        if name not in tensors or tensors[name].shape != np.shape(g):
            raise ValidationError(f"gradient '{name}' does not match any parameter shape", field_name="grads")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for '{name}'")

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for name, g in grads.items():
        g = np.asarray(g, dtype=np.float64)
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None or v is None:
            m = np.zeros_like(g)
            v = np.zeros_like(g)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v
        tensors[name] -= state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    if isinstance(params, FusionModel):
        params.touch()
    return params, state


def predict_proba(model: FusionModel, inputs: BatchLike, batch_size: int = 1024) -> np.ndarray:
    """Eval-mode probabilities, computed in row blocks."""
    checked = _check_inputs(model.spec, _batch_inputs(inputs))
    n_rows = next(iter(checked.values())).shape[0]
    if n_rows == 0:
        return np.zeros((0, model.spec.n_classes))
    blocks = []
    for start in range(0, n_rows, batch_size):
        chunk = {name: x[start : start + batch_size] for name, x in checked.items()}
        probs, _ = forward(model, chunk, "eval")
        blocks.append(probs)
    return np.vstack(blocks)


__all__ = [
    "MODES",
    "EARLY_BRANCH",
    "BranchSpec",
    "ModelSpec",
    "fused_spec",
    "unimodal_spec",
    "early_spec",
    "tensor_layout",
    "FusionModel",
    "init_model",
    "Batch",
    "ForwardCache",
    "forward",
    "loss",
    "backward",
    "AdamState",
    "adam_step",
    "predict_proba",
]
