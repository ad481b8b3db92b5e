"""Synthetic contrast-distorted datasets with pseudo-MOS labels.

Two monotone tone-curve families are provided: gamma correction and linear
contrast scaling around mid-gray.  Each distorted copy gets a pseudo quality
score on [1, 5] that decreases with distortion magnitude, so the full
feature -> regression -> correlation pipeline can be exercised without any
licensed benchmark data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Manifest, MosRecord, save_manifest
from .errors import InvalidGamma, InvalidScale, IoFailure
from .imagecore import AugmentPolicy, RasterImage, augment_raster, load_image, save_png
from .rng import SeededRng

GAMMA = "gamma"
LINEAR_CONTRAST = "linear_contrast"


@dataclass(frozen=True)
class Distortion:
    """One point on a distortion family: gamma exponent or linear scale."""

    kind: str
    level: float

    def __post_init__(self):
        if self.kind == GAMMA:
            if self.level <= 0:
                raise InvalidGamma(f"gamma must be > 0, got {self.level}")
        elif self.kind == LINEAR_CONTRAST:
            if not 0 < self.level <= 2:
                raise InvalidScale(f"contrast scale must be in (0, 2], got {self.level}")
        else:
            raise ValueError(f"unknown distortion kind {self.kind!r}")


@dataclass
class SynthSpec:
    base_images: list[str]
    levels: list[Distortion]
    seed: int
    output_dir: str
    augment_copies: int = 0
    augment_policy: AugmentPolicy = field(
        default_factory=lambda: AugmentPolicy(rotation_limit=0.0, hue_jitter=0.0,
                                              brightness_jitter=0.05, contrast_jitter=0.05,
                                              saturation_jitter=0.05)
    )

    def __post_init__(self):
        if not self.base_images:
            raise ValueError("base_images must be non-empty")
        if not self.levels:
            raise ValueError("levels must be non-empty")
        if len(set(self.levels)) != len(self.levels):
            raise ValueError("duplicate distortion levels")
        if self.augment_copies < 0:
            raise ValueError("augment_copies must be >= 0")


def apply_gamma(img: RasterImage, gamma: float) -> RasterImage:
    """Per-channel x -> round(255 * (x/255)**gamma); endpoints are fixed points."""
    if gamma <= 0:
        raise InvalidGamma(f"gamma must be > 0, got {gamma}")
    lut = np.floor(255.0 * (np.arange(256) / 255.0) ** gamma + 0.5).astype(np.uint8)
    return RasterImage(lut[img.data])


def apply_linear_contrast(img: RasterImage, s: float) -> RasterImage:
    """x -> clamp(round(127.5 + s * (x - 127.5))); mid-gray is (nearly) fixed."""
    if not 0 < s <= 2:
        raise InvalidScale(f"contrast scale must be in (0, 2], got {s}")
    vals = 127.5 + s * (np.arange(256) - 127.5)
    lut = np.floor(np.clip(vals, 0.0, 255.0) + 0.5).astype(np.uint8)
    return RasterImage(lut[img.data])


def apply_distortion(img: RasterImage, d: Distortion) -> RasterImage:
    if d.kind == GAMMA:
        return apply_gamma(img, d.level)
    return apply_linear_contrast(img, d.level)


def pseudo_mos(d: Distortion) -> float:
    """Monotone quality proxy on [1, 5]; undistorted levels score 5."""
    if d.kind == GAMMA:
        raw = 5.0 - 2.5 * abs(math.log2(d.level))
    else:
        raw = 5.0 - 4.0 * abs(1.0 - d.level)
    return min(5.0, max(1.0, raw))


def _level_token(level: float) -> str:
    return format(level, "g")


def generate_dataset(spec: SynthSpec) -> Manifest:
    """Write distorted (and optionally augmented) copies plus a manifest CSV.

    Output tree: one PNG per (base, level) pair named base__kind__level.png,
    then ``augment_copies`` extra PNGs per pair (base__kind__level__augN.png)
    that inherit the pair's pseudo-MOS.  Rerunning the same spec reproduces
    every byte.
    """
    out_dir = Path(spec.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out_dir}: {exc}") from exc

    records: list[MosRecord] = []
    rng = SeededRng(spec.seed)
    for base_idx, base_path in enumerate(spec.base_images):
        base = load_image(base_path)
        stem = Path(base_path).stem
        for level_idx, dist in enumerate(spec.levels):
            distorted = apply_distortion(base, dist)
            mos = pseudo_mos(dist)
            name = f"{stem}__{dist.kind}__{_level_token(dist.level)}.png"
            _write(distorted, out_dir / name)
            records.append(MosRecord(image_path=name, mos=mos))
            for copy_idx in range(spec.augment_copies):
                copy_rng = rng.derive("augment", base_idx, level_idx, copy_idx)
                aug = augment_raster(distorted, copy_rng, spec.augment_policy)
                aug_name = f"{stem}__{dist.kind}__{_level_token(dist.level)}__aug{copy_idx}.png"
                _write(aug, out_dir / aug_name)
                records.append(MosRecord(image_path=aug_name, mos=mos))

    manifest = Manifest(records=records, source_tag="synthetic", root=out_dir)
    save_manifest(manifest, out_dir / "manifest.csv")
    return manifest


def _write(img: RasterImage, path: Path) -> None:
    try:
        save_png(img, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
