"""contrastiq: a no-reference contrast image-quality workbench.

Synthesize contrast-distorted datasets with pseudo-MOS labels, extract frozen
features (handcrafted statistics or a compound-scaled convolutional
backbone), train a small regression head against subjective scores, and
evaluate with PLCC / SRCC / tolerance accuracy.
"""

from ._kernels import get_backend
from .archive import WeightArchive, load_weight_archive, save_weight_archive
from .dataset import (
    Manifest,
    MosRecord,
    ZScoreNormalizer,
    denormalize_clip,
    fit_normalizer,
    load_manifest,
    normalize,
    save_manifest,
    split,
)
from .imagecore import (
    AugmentPolicy,
    RasterImage,
    Tensor3,
    augment,
    color_jitter,
    decode_image,
    eval_transform,
    horizontal_flip,
    normalize_channels,
    resize_bilinear,
    rotate,
    to_unit_tensor,
)
from .metrics import EvalReport, evaluate, plcc, srcc, tolerance_accuracy
from .rng import SeededRng

__version__ = "0.1.0"

__all__ = [
    "AugmentPolicy",
    "EvalReport",
    "Manifest",
    "MosRecord",
    "RasterImage",
    "SeededRng",
    "Tensor3",
    "WeightArchive",
    "augment",
    "color_jitter",
    "decode_image",
    "denormalize_clip",
    "eval_transform",
    "evaluate",
    "fit_normalizer",
    "get_backend",
    "horizontal_flip",
    "load_manifest",
    "load_weight_archive",
    "normalize",
    "normalize_channels",
    "plcc",
    "resize_bilinear",
    "rotate",
    "save_manifest",
    "save_weight_archive",
    "split",
    "srcc",
    "to_unit_tensor",
    "tolerance_accuracy",
    "ZScoreNormalizer",
]
