"""Frozen feature extraction: compound-scaled CNN backbone and handcrafted statistics."""

from .backbone import backbone_forward, parameter_shapes, seeded_random_weights
from .cache import (
    CnnExtractor,
    ExtractionError,
    FeatureCache,
    HandcraftedExtractor,
    extract_features,
    load_feature_cache,
    manifest_digest,
    save_feature_cache,
)
from .handcrafted import HANDCRAFTED_DIM, handcrafted_features
from .scaling import (
    BackboneConfig,
    CompoundScale,
    ScaleFactors,
    StageSpec,
    b0_config,
    compound_scale,
    config_from_json,
    config_to_json,
    nano_config,
    resolve_config,
    round_channels,
    scaled_config,
)

__all__ = [
    "BackboneConfig",
    "CompoundScale",
    "CnnExtractor",
    "ExtractionError",
    "FeatureCache",
    "HANDCRAFTED_DIM",
    "HandcraftedExtractor",
    "ScaleFactors",
    "StageSpec",
    "b0_config",
    "backbone_forward",
    "compound_scale",
    "config_from_json",
    "config_to_json",
    "extract_features",
    "handcrafted_features",
    "load_feature_cache",
    "manifest_digest",
    "nano_config",
    "parameter_shapes",
    "resolve_config",
    "round_channels",
    "save_feature_cache",
    "scaled_config",
    "seeded_random_weights",
]
