"""Three-layer regression head (in_dim -> 512 -> 256 -> 1) with exact backprop.

Forward: z1 = relu(W1 x + b1), optionally inverted-dropout masked (survivors
scaled by 1/keep), z2 = relu(W2 z1 + b2), prediction = W3 z2 + b3 (linear
output).  The forward trace retains pre-activations and the dropout mask so
the backward pass is an exact analytic gradient of the loss contribution.
Arrays follow the dtype of the parameters (float32 in training, float64 in
gradient-check tests).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..archive import WeightArchive, load_weight_archive, save_weight_archive
from ..dataset import ZScoreNormalizer, normalizer_from_json, normalizer_to_json
from ..errors import DimMismatch, EmptyBatch, MissingParameter, StaleTrace
from ..rng import SeededRng

HIDDEN1 = 512
HIDDEN2 = 256
ARCH_MLP = "mlp-512-256-1"
ARCH_SIAMESE = "siamese-512-256-1"


@dataclass
class HeadParams:
    w1: np.ndarray  # [512, in_dim]
    b1: np.ndarray  # [512]
    w2: np.ndarray  # [256, 512]
    b2: np.ndarray  # [256]
    w3: np.ndarray  # [1, 256]
    b3: np.ndarray  # [1]

    def __post_init__(self):
        if self.w1.shape[0] != HIDDEN1 or self.w2.shape != (HIDDEN2, HIDDEN1) or self.w3.shape != (1, HIDDEN2):
            raise DimMismatch("inconsistent head layer shapes")

    @property
    def in_dim(self) -> int:
        return int(self.w1.shape[1])

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "layer1.weight": self.w1, "layer1.bias": self.b1,
            "layer2.weight": self.w2, "layer2.bias": self.b2,
            "layer3.weight": self.w3, "layer3.bias": self.b3,
        }

    def copy(self) -> "HeadParams":
        return HeadParams(*(t.copy() for t in (self.w1, self.b1, self.w2, self.b2, self.w3, self.b3)))

    def astype(self, dtype) -> "HeadParams":
        return HeadParams(*(t.astype(dtype) for t in (self.w1, self.b1, self.w2, self.b2, self.w3, self.b3)))


def fit_input_standardizer(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension (shift, scale) over training inputs, for optimizer conditioning.

    Returns the mean and population std per feature; zero-variance dimensions
    get scale 1, and fewer than two samples yield the identity transform.
    The affine is folded back into layer-1 weights after training (see
    fold_input_standardizer), so persisted heads always consume raw features.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 2:
        return np.zeros(x.shape[1]), np.ones(x.shape[1])
    shift = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0.0] = 1.0
    return shift, scale


def fold_input_standardizer(params: HeadParams, shift: np.ndarray, scale: np.ndarray) -> HeadParams:
    """Rewrite layer 1 so head(raw x) == trained_head((x - shift) / scale)."""
    dtype = params.w1.dtype
    w1 = (params.w1.astype(np.float64) / scale[None, :]).astype(dtype)
    b1 = (params.b1.astype(np.float64) - w1.astype(np.float64) @ shift).astype(dtype)
    return HeadParams(w1=w1, b1=b1, w2=params.w2.copy(), b2=params.b2.copy(),
                      w3=params.w3.copy(), b3=params.b3.copy())


def init_head(in_dim: int, rng: SeededRng, dtype=np.float32) -> HeadParams:
    """Uniform +/-sqrt(6 / (fan_in + fan_out)) weights, zero biases."""

    def layer(fan_out: int, fan_in: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        u = rng.unit_array(fan_out * fan_in)
        return ((2.0 * u - 1.0) * limit).astype(dtype).reshape(fan_out, fan_in)

    return HeadParams(
        w1=layer(HIDDEN1, in_dim), b1=np.zeros(HIDDEN1, dtype=dtype),
        w2=layer(HIDDEN2, HIDDEN1), b2=np.zeros(HIDDEN2, dtype=dtype),
        w3=layer(1, HIDDEN2), b3=np.zeros(1, dtype=dtype),
    )


@dataclass
class ForwardTrace:
    x: np.ndarray
    pre1: np.ndarray
    z1: np.ndarray  # post-relu, post-dropout
    pre2: np.ndarray
    z2: np.ndarray
    mask: np.ndarray | None
    params: HeadParams


def make_dropout_mask(rng: SeededRng, shape: tuple[int, int], dropout: float, dtype=np.float32) -> np.ndarray:
    """Inverted-dropout mask: 1/keep for survivors (draw < keep), else 0."""
    keep = 1.0 - dropout
    u = rng.unit_array(int(np.prod(shape))).reshape(shape)
    return np.where(u < keep, 1.0 / keep, 0.0).astype(dtype)


def head_forward(
    x: np.ndarray,
    p: HeadParams,
    mode: str = "eval",
    rng: SeededRng | None = None,
    dropout: float = 0.5,
    mask: np.ndarray | None = None,
) -> tuple[np.ndarray, ForwardTrace]:
    """Predictions plus the activation trace needed by head_backward.

    ``x`` is [in_dim] or [batch, in_dim]; predictions come back with the
    matching leading shape.  ``mode="train"`` applies inverted dropout to the
    first hidden layer, drawing the mask from ``rng`` unless an explicit
    ``mask`` is given (gradient tests fix the mask that way).
    """
    single = x.ndim == 1
    xb = np.atleast_2d(np.asarray(x, dtype=p.w1.dtype))
    if xb.shape[1] != p.in_dim:
        raise DimMismatch(f"input dim {xb.shape[1]}, head expects {p.in_dim}")
    pre1 = xb @ p.w1.T + p.b1
    z1 = np.maximum(pre1, 0)
    if mode == "train" and dropout > 0.0:
        if mask is None:
            if rng is None:
                raise ValueError("train mode needs an rng or an explicit mask")
            mask = make_dropout_mask(rng, z1.shape, dropout, dtype=z1.dtype)
        z1 = z1 * mask
    else:
        mask = None
    pre2 = z1 @ p.w2.T + p.b2
    z2 = np.maximum(pre2, 0)
    pred = (z2 @ p.w3.T + p.b3)[:, 0]
    trace = ForwardTrace(x=xb, pre1=pre1, z1=z1, pre2=pre2, z2=z2, mask=mask, params=p)
    return (pred[0] if single else pred), trace


def head_backward(trace: ForwardTrace, dloss_dpred: np.ndarray | float, p: HeadParams) -> HeadParams:
    """Exact gradients through the stored relu and dropout masks."""
    if trace.params is not p:
        raise StaleTrace("trace was produced by different parameters")
    d = np.atleast_1d(np.asarray(dloss_dpred, dtype=p.w1.dtype))
    if d.shape[0] != trace.x.shape[0]:
        raise DimMismatch(f"upstream gradient batch {d.shape[0]} vs trace {trace.x.shape[0]}")
    d3 = d[:, None]  # [B, 1]
    g_w3 = d3.T @ trace.z2
    g_b3 = d3.sum(axis=0)
    dz2 = d3 @ p.w3
    dpre2 = dz2 * (trace.pre2 > 0)
    g_w2 = dpre2.T @ trace.z1
    g_b2 = dpre2.sum(axis=0)
    dz1 = dpre2 @ p.w2
    if trace.mask is not None:
        dz1 = dz1 * trace.mask
    dpre1 = dz1 * (trace.pre1 > 0)
    g_w1 = dpre1.T @ trace.x
    g_b1 = dpre1.sum(axis=0)
    return HeadParams(w1=g_w1, b1=g_b1, w2=g_w2, b2=g_b2, w3=g_w3, b3=g_b3)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient 2*(pred-target)/n."""
    pred = np.atleast_1d(np.asarray(pred))
    target = np.atleast_1d(np.asarray(target))
    if pred.shape != target.shape:
        raise DimMismatch(f"pred shape {pred.shape} vs target {target.shape}")
    n = pred.shape[0]
    if n == 0:
        raise EmptyBatch("empty batch")
    diff = pred.astype(np.float64) - target.astype(np.float64)
    loss = float(np.mean(diff * diff))
    grad = (2.0 * diff / n).astype(pred.dtype)
    return loss, grad


def save_head(
    params: HeadParams,
    path,
    normalizer: ZScoreNormalizer,
    arch: str = ARCH_MLP,
    extractor_tag: str = "",
) -> None:
    archive = WeightArchive()
    for name, tensor in params.tensors().items():
        archive.add(name, tensor)
    archive.metadata["kind"] = "head"
    archive.metadata["in_dim"] = str(params.in_dim)
    archive.metadata["arch"] = arch
    archive.metadata["normalizer"] = json.dumps(normalizer_to_json(normalizer))
    if extractor_tag:
        archive.metadata["extractor_tag"] = extractor_tag
    save_weight_archive(archive, path)


def load_head(path) -> tuple[HeadParams, ZScoreNormalizer, dict[str, str]]:
    archive = load_weight_archive(path)
    tensors = {}
    for name in ("layer1.weight", "layer1.bias", "layer2.weight", "layer2.bias",
                 "layer3.weight", "layer3.bias"):
        if name not in archive:
            raise MissingParameter(name)
        tensors[name] = archive[name]
    params = HeadParams(
        w1=tensors["layer1.weight"], b1=tensors["layer1.bias"],
        w2=tensors["layer2.weight"], b2=tensors["layer2.bias"],
        w3=tensors["layer3.weight"], b3=tensors["layer3.bias"],
    )
    declared = int(archive.metadata.get("in_dim", params.in_dim))
    if declared != params.in_dim:
        raise DimMismatch(f"metadata in_dim {declared} vs layer1 width {params.in_dim}")
    normalizer = normalizer_from_json(json.loads(archive.metadata["normalizer"]))
    return params, normalizer, dict(archive.metadata)
