"""Frozen-feature caches: one row per manifest record, manifest order.

The backbone receives no gradient updates, so features are extracted once
with the deterministic eval transform and memoized in the archive container
(entries named by row index, plus metadata: extractor tag, dimension, image
paths, and a digest of the owning manifest).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from ..archive import WeightArchive, load_weight_archive, save_weight_archive
from ..dataset import Manifest
from ..errors import ArchiveError, FeatureError
from ..imagecore import RasterImage, eval_transform, load_image, resize_bilinear
from .backbone import backbone_forward
from .handcrafted import HANDCRAFTED_DIM, handcrafted_features
from .scaling import BackboneConfig


class ExtractionError(FeatureError):
    """One or more images could not be processed."""

    def __init__(self, failures: list[tuple[str, str]]):
        shown = "; ".join(f"{path}: {reason}" for path, reason in failures[:5])
        if len(failures) > 5:
            shown += f"; ... and {len(failures) - 5} more"
        super().__init__(f"{len(failures)} image(s) failed: {shown}")
        self.failures = failures


def manifest_digest(manifest: Manifest) -> str:
    """sha256 over (path, mos) rows; split assignment does not participate."""
    h = hashlib.sha256()
    for r in manifest.records:
        h.update(f"{r.image_path},{r.mos!r}\n".encode("utf-8"))
    return h.hexdigest()


class HandcraftedExtractor:
    """Resize to the eval resolution, then grayscale statistics."""

    tag = "handcrafted"
    dim = HANDCRAFTED_DIM

    def __init__(self, target_size: int = 224):
        self.target_size = target_size

    def __call__(self, img: RasterImage) -> np.ndarray:
        return handcrafted_features(resize_bilinear(img, self.target_size, self.target_size))


class CnnExtractor:
    """Eval transform + forward pass through the frozen backbone."""

    tag = "cnn"

    def __init__(self, cfg: BackboneConfig, weights: WeightArchive):
        self.cfg = cfg
        self.weights = weights
        self.dim = cfg.head_channels

    def __call__(self, img: RasterImage) -> np.ndarray:
        t = eval_transform(img, size=self.cfg.input_size)
        return backbone_forward(t, self.cfg, self.weights)


@dataclass
class FeatureCache:
    paths: list[str]
    features: np.ndarray  # [n, dim] float32
    extractor_tag: str

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float32)
        if self.features.ndim != 2 or self.features.shape[0] != len(self.paths):
            raise ValueError("features must be [n_paths, dim]")

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def __len__(self) -> int:
        return len(self.paths)

    def rows_for(self, paths: list[str]) -> np.ndarray:
        index = {p: i for i, p in enumerate(self.paths)}
        missing = [p for p in paths if p not in index]
        if missing:
            raise FeatureError(f"cache has no rows for: {missing[:3]}")
        return self.features[[index[p] for p in paths]]


def extract_features(manifest: Manifest, extractor) -> FeatureCache:
    """Extract one feature row per record, in manifest order.

    Per-image failures are collected and raised together as ExtractionError.
    """
    rows: list[np.ndarray] = []
    failures: list[tuple[str, str]] = []
    for record in manifest.records:
        try:
            img = load_image(manifest.resolve(record))
            rows.append(np.asarray(extractor(img), dtype=np.float32))
        except Exception as exc:  # noqa: BLE001 - aggregated below
            failures.append((record.image_path, str(exc)))
    if failures:
        raise ExtractionError(failures)
    features = np.stack(rows) if rows else np.zeros((0, extractor.dim), dtype=np.float32)
    cache = FeatureCache(
        paths=[r.image_path for r in manifest.records],
        features=features,
        extractor_tag=extractor.tag,
    )
    cache._digest = manifest_digest(manifest)  # carried into save_feature_cache
    return cache


def save_feature_cache(cache: FeatureCache, path, manifest: Manifest | None = None) -> None:
    arch = WeightArchive()
    for i in range(len(cache)):
        arch.add(str(i), cache.features[i])
    arch.metadata["kind"] = "feature-cache"
    arch.metadata["extractor_tag"] = cache.extractor_tag
    arch.metadata["dim"] = str(cache.dim)
    arch.metadata["paths"] = json.dumps(cache.paths)
    digest = getattr(cache, "_digest", None)
    if manifest is not None:
        digest = manifest_digest(manifest)
    if digest is not None:
        arch.metadata["manifest_sha256"] = digest
    save_weight_archive(arch, path)


def load_feature_cache(path) -> FeatureCache:
    arch = load_weight_archive(path)
    if arch.metadata.get("kind") != "feature-cache":
        raise ArchiveError(f"{path} is not a feature cache")
    paths = json.loads(arch.metadata["paths"])
    dim = int(arch.metadata["dim"])
    n = len(paths)
    features = np.zeros((n, dim), dtype=np.float32)
    for i in range(n):
        key = str(i)
        if key not in arch:
            raise ArchiveError(f"feature cache missing row {i}")
        row = arch[key]
        if row.shape != (dim,):
            raise ArchiveError(f"row {i}: expected dim {dim}, found {row.shape}")
        features[i] = row
    cache = FeatureCache(paths=paths, features=features, extractor_tag=arch.metadata["extractor_tag"])
    cache._digest = arch.metadata.get("manifest_sha256")
    return cache
