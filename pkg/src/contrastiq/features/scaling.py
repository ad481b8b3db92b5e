"""Compound scaling of the convolutional backbone configuration.

Depth, width, and resolution grow jointly as d = alpha**phi, w = beta**phi,
r = gamma**phi under the budget constraint alpha * beta**2 * gamma**2 ~= 2.
Scaled block counts round up, channel counts snap to the nearest multiple of
eight (never below eight, halves up), and the input resolution rounds half
away from zero.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import ConfigError, ConstraintViolation

CONSTRAINT_TARGET = 2.0
DEFAULT_CONSTRAINT_TOLERANCE = 0.2


@dataclass(frozen=True)
class CompoundScale:
    phi: float
    alpha: float = 1.2
    beta: float = 1.1
    gamma_res: float = 1.15

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma_res) < 1.0:
            raise ValueError("scaling bases must be >= 1")
        product = self.alpha * self.beta**2 * self.gamma_res**2
        if not 1.8 <= product <= 2.2:
            raise ConstraintViolation(
                f"alpha*beta^2*gamma^2 = {product:.4f} outside [1.8, 2.2]"
            )


@dataclass(frozen=True)
class ScaleFactors:
    depth: float
    width: float
    resolution: float
    constraint_residual: float


def compound_scale(
    phi: float,
    alpha: float = 1.2,
    beta: float = 1.1,
    gamma_res: float = 1.15,
    constraint_tolerance: float = DEFAULT_CONSTRAINT_TOLERANCE,
    strict: bool = False,
) -> ScaleFactors:
    """Scale factors (alpha**phi, beta**phi, gamma**phi) plus the budget residual.

    A residual outside +/-constraint_tolerance warns by default and raises
    ConstraintViolation when strict.
    """
    if min(alpha, beta, gamma_res) < 1.0:
        raise ValueError("scaling bases must be >= 1")
    residual = alpha * beta**2 * gamma_res**2 - CONSTRAINT_TARGET
    if abs(residual) > constraint_tolerance:
        msg = f"constraint residual {residual:+.4f} exceeds +/-{constraint_tolerance}"
        if strict:
            raise ConstraintViolation(msg)
        warnings.warn(msg, stacklevel=2)
    return ScaleFactors(
        depth=alpha**phi,
        width=beta**phi,
        resolution=gamma_res**phi,
        constraint_residual=residual,
    )


@dataclass(frozen=True)
class StageSpec:
    blocks: int
    channels: int
    stride: int
    expansion: int
    kernel: int
    se_ratio: float = 0.25

    def __post_init__(self):
        if self.blocks < 1 or self.channels < 1:
            raise ValueError("blocks and channels must be >= 1")
        if self.stride not in (1, 2):
            raise ValueError("stride must be 1 or 2")
        if self.kernel not in (3, 5):
            raise ValueError("kernel must be 3 or 5")
        if not 0.0 < self.se_ratio <= 1.0:
            raise ValueError("se_ratio must be in (0, 1]")


@dataclass(frozen=True)
class BackboneConfig:
    stages: tuple[StageSpec, ...]
    stem_channels: int = 8
    head_channels: int = 1280
    input_size: int = 224


def round_channels(value: float) -> int:
    """Nearest multiple of 8, halves up, floor of 8."""
    return max(8, 8 * int(math.floor(value / 8.0 + 0.5)))


def scaled_config(base: BackboneConfig, scale: CompoundScale) -> BackboneConfig:
    f = compound_scale(scale.phi, scale.alpha, scale.beta, scale.gamma_res)
    stages = tuple(
        replace(
            st,
            blocks=int(math.ceil(st.blocks * f.depth)),
            channels=round_channels(st.channels * f.width),
        )
        for st in base.stages
    )
    return BackboneConfig(
        stages=stages,
        stem_channels=round_channels(base.stem_channels * f.width),
        head_channels=round_channels(base.head_channels * f.width),
        input_size=int(math.floor(base.input_size * f.resolution + 0.5)),
    )


def nano_config() -> BackboneConfig:
    """Desk-scale backbone: random-weight forward in milliseconds."""
    return BackboneConfig(
        stages=(
            StageSpec(blocks=1, channels=8, stride=1, expansion=4, kernel=3),
            StageSpec(blocks=2, channels=16, stride=2, expansion=4, kernel=3),
            StageSpec(blocks=2, channels=24, stride=2, expansion=4, kernel=5),
        ),
        stem_channels=8,
        head_channels=1280,
        input_size=224,
    )


def b0_config() -> BackboneConfig:
    """Full-size baseline configuration matching standard exported weights."""
    return BackboneConfig(
        stages=(
            StageSpec(blocks=1, channels=16, stride=1, expansion=1, kernel=3),
            StageSpec(blocks=2, channels=24, stride=2, expansion=6, kernel=3),
            StageSpec(blocks=2, channels=40, stride=2, expansion=6, kernel=5),
            StageSpec(blocks=3, channels=80, stride=2, expansion=6, kernel=3),
            StageSpec(blocks=3, channels=112, stride=1, expansion=6, kernel=5),
            StageSpec(blocks=4, channels=192, stride=2, expansion=6, kernel=5),
            StageSpec(blocks=1, channels=320, stride=1, expansion=6, kernel=3),
        ),
        stem_channels=32,
        head_channels=1280,
        input_size=224,
    )


_PRESETS = {"nano": nano_config, "b0": b0_config}


def config_to_json(cfg: BackboneConfig) -> str:
    payload = {
        "stem_channels": cfg.stem_channels,
        "head_channels": cfg.head_channels,
        "input_size": cfg.input_size,
        "stages": [
            {
                "blocks": s.blocks,
                "channels": s.channels,
                "stride": s.stride,
                "expansion": s.expansion,
                "kernel": s.kernel,
                "se_ratio": s.se_ratio,
            }
            for s in cfg.stages
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def config_from_json(text: str) -> BackboneConfig:
    payload = json.loads(text)
    stages = tuple(
        StageSpec(
            blocks=int(s["blocks"]),
            channels=int(s["channels"]),
            stride=int(s["stride"]),
            expansion=int(s["expansion"]),
            kernel=int(s["kernel"]),
            se_ratio=float(s.get("se_ratio", 0.25)),
        )
        for s in payload["stages"]
    )
    return BackboneConfig(
        stages=stages,
        stem_channels=int(payload["stem_channels"]),
        head_channels=int(payload["head_channels"]),
        input_size=int(payload["input_size"]),
    )


def resolve_config(name_or_path: str) -> BackboneConfig:
    """A preset name ("nano", "b0") or a path to a config JSON file."""
    if name_or_path in _PRESETS:
        return _PRESETS[name_or_path]()
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError(f"unknown backbone config {name_or_path!r}")
    return config_from_json(path.read_text(encoding="utf-8"))
