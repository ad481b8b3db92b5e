"""Forward-only convolutional backbone: stem -> MBConv stages -> pooled head.

Inference only: batch norm is assumed folded into conv weights/biases at
export time, so every convolution here carries a bias.  Parameter naming
scheme (all entries float32):

    stem.conv.{weight,bias}                       [C_stem, 3, 3, 3]
    stage{i}.block{j}.expand.{weight,bias}        [hidden, C_in, 1, 1]   (absent when expansion == 1)
    stage{i}.block{j}.depthwise.{weight,bias}     [hidden, 1, k, k]
    stage{i}.block{j}.se.reduce.{weight,bias}     [C_se, hidden, 1, 1]
    stage{i}.block{j}.se.expand.{weight,bias}     [hidden, C_se, 1, 1]
    stage{i}.block{j}.project.{weight,bias}       [C_out, hidden, 1, 1]
    head.conv.{weight,bias}                       [C_head, C_last, 1, 1]

with i, j zero-based, hidden = C_in * expansion, and C_se = max(1,
int(C_in * se_ratio)) computed from the block *input* channels.  The first
block of a stage carries the stage stride; a residual shortcut applies when
stride is 1 and input/output channels match.  Activation is swish
(x * sigmoid(x)) everywhere except after the projection; a test-mode
"identity" activation enables exact linearity checks.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..archive import WeightArchive
from ..errors import MissingParameter, ShapeMismatch
from ..imagecore import Tensor3
from ..rng import SeededRng
from .scaling import BackboneConfig


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _swish(x: np.ndarray) -> np.ndarray:
    return x * _sigmoid(x)


_ACTIVATIONS = {"swish": _swish, "identity": lambda x: x}


def _se_channels(in_channels: int, se_ratio: float) -> int:
    return max(1, int(in_channels * se_ratio))


def parameter_shapes(cfg: BackboneConfig) -> dict[str, tuple[int, ...]]:
    """Every parameter name the forward pass will request, with its shape."""
    shapes: dict[str, tuple[int, ...]] = {
        "stem.conv.weight": (cfg.stem_channels, 3, 3, 3),
        "stem.conv.bias": (cfg.stem_channels,),
    }
    in_ch = cfg.stem_channels
    for i, st in enumerate(cfg.stages):
        for j in range(st.blocks):
            prefix = f"stage{i}.block{j}"
            hidden = in_ch * st.expansion
            se_ch = _se_channels(in_ch, st.se_ratio)
            if st.expansion != 1:
                shapes[f"{prefix}.expand.weight"] = (hidden, in_ch, 1, 1)
                shapes[f"{prefix}.expand.bias"] = (hidden,)
            shapes[f"{prefix}.depthwise.weight"] = (hidden, 1, st.kernel, st.kernel)
            shapes[f"{prefix}.depthwise.bias"] = (hidden,)
            shapes[f"{prefix}.se.reduce.weight"] = (se_ch, hidden, 1, 1)
            shapes[f"{prefix}.se.reduce.bias"] = (se_ch,)
            shapes[f"{prefix}.se.expand.weight"] = (hidden, se_ch, 1, 1)
            shapes[f"{prefix}.se.expand.bias"] = (hidden,)
            shapes[f"{prefix}.project.weight"] = (st.channels, hidden, 1, 1)
            shapes[f"{prefix}.project.bias"] = (st.channels,)
            in_ch = st.channels
    shapes["head.conv.weight"] = (cfg.head_channels, in_ch, 1, 1)
    shapes["head.conv.bias"] = (cfg.head_channels,)
    return shapes


def _param(weights: WeightArchive, name: str, shape: tuple[int, ...]) -> np.ndarray:
    if name not in weights:
        raise MissingParameter(name)
    arr = weights[name]
    if tuple(arr.shape) != shape:
        raise ShapeMismatch(f"{name}: expected {shape}, found {tuple(arr.shape)}")
    return arr


def seeded_random_weights(cfg: BackboneConfig, seed: int) -> WeightArchive:
    """Deterministic fan-in-scaled random weights (testing and benchmarks)."""
    rng = SeededRng(seed).derive("backbone-init")
    arch = WeightArchive()
    for name, shape in parameter_shapes(cfg).items():
        n = int(np.prod(shape))
        if name.endswith(".bias"):
            values = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = int(np.prod(shape[1:]))
            limit = np.sqrt(3.0 / fan_in)
            u = rng.derive(name).unit_array(n)
            values = ((2.0 * u - 1.0) * limit).astype(np.float32).reshape(shape)
        arch.add(name, values)
    arch.metadata["source"] = f"seeded-random:{seed}"
    return arch


def backbone_forward(
    t: Tensor3,
    cfg: BackboneConfig,
    weights: WeightArchive,
    activation: str = "swish",
) -> np.ndarray:
    """Pooled feature vector of length cfg.head_channels (float32)."""
    act = _ACTIVATIONS[activation]
    x = t.data
    if x.shape != (3, cfg.input_size, cfg.input_size):
        raise ShapeMismatch(
            f"input {x.shape}, config expects (3, {cfg.input_size}, {cfg.input_size})"
        )
    shapes = parameter_shapes(cfg)

    def conv(name: str, inp: np.ndarray, stride: int = 1, padding: int = 0, groups: int = 1) -> np.ndarray:
        w = _param(weights, f"{name}.weight", shapes[f"{name}.weight"])
        b = _param(weights, f"{name}.bias", shapes[f"{name}.bias"])
        return _kernels.conv2d(inp, w, b, stride=stride, padding=padding, groups=groups)

    x = act(conv("stem.conv", x, stride=2, padding=1))
    in_ch = cfg.stem_channels
    for i, st in enumerate(cfg.stages):
        for j in range(st.blocks):
            prefix = f"stage{i}.block{j}"
            stride = st.stride if j == 0 else 1
            hidden = in_ch * st.expansion
            shortcut = x
            h = x
            if st.expansion != 1:
                h = act(conv(f"{prefix}.expand", h))
            h = act(conv(f"{prefix}.depthwise", h, stride=stride,
                         padding=st.kernel // 2, groups=hidden))
            # squeeze-excitation on the pooled descriptor
            pooled = h.astype(np.float64).mean(axis=(1, 2)).astype(np.float32)
            rw = _param(weights, f"{prefix}.se.reduce.weight", shapes[f"{prefix}.se.reduce.weight"])
            rb = _param(weights, f"{prefix}.se.reduce.bias", shapes[f"{prefix}.se.reduce.bias"])
            ew = _param(weights, f"{prefix}.se.expand.weight", shapes[f"{prefix}.se.expand.weight"])
            eb = _param(weights, f"{prefix}.se.expand.bias", shapes[f"{prefix}.se.expand.bias"])
            squeezed = act(rw[:, :, 0, 0] @ pooled + rb)
            gate = _sigmoid(ew[:, :, 0, 0] @ squeezed + eb)
            h = h * gate[:, None, None]
            h = conv(f"{prefix}.project", h)
            if stride == 1 and in_ch == st.channels:
                h = h + shortcut
            x = h
            in_ch = st.channels
    x = act(conv("head.conv", x))
    return x.astype(np.float64).mean(axis=(1, 2)).astype(np.float32)
