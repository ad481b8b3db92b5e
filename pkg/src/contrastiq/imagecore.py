"""Image decoding, resizing, tensor conversion, and deterministic augmentation.

Two image representations are used everywhere:

* :class:`RasterImage` - 8-bit HWC RGB, the decode/distort/jitter domain;
* :class:`Tensor3` - float32 CHW, the network-input domain.

The augmentation pipeline is a pure function of (image bytes, seed, policy):
random draws happen in a fixed order (flip coin, rotation angle, then
brightness/contrast/saturation/hue factors) and the transform chain is
flip -> rotate -> color jitter -> resize -> unit scale -> channel normalize.
All u8 quantization uses round-half-away-from-zero.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import _kernels
from .errors import CorruptData, UnsupportedFormat, ZeroStd
from .rng import SeededRng

# Channel statistics of the standard ImageNet preprocessing convention.
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

# Rec. 601 luma weights, used for every grayscale reduction in the package.
LUMA_R, LUMA_G, LUMA_B = 0.299, 0.587, 0.114

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass
class RasterImage:
    """8-bit RGB image, row-major HWC."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.uint8)
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"expected HWC RGB array, got shape {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError("image dimensions must be >= 1")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 3


@dataclass
class Tensor3:
    """float32 CHW tensor; all values finite."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ValueError(f"expected CHW array, got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("tensor contains non-finite values")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass
class AugmentPolicy:
    """Augmentation ranges and the shared eval-transform constants."""

    flip_probability: float = 0.5
    rotation_limit: float = 10.0
    brightness_jitter: float = 0.20
    contrast_jitter: float = 0.20
    saturation_jitter: float = 0.20
    hue_jitter: float = 0.10
    target_size: int = 224
    channel_mean: tuple[float, float, float] = IMAGENET_MEAN
    channel_std: tuple[float, float, float] = IMAGENET_STD

    def __post_init__(self):
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ValueError("flip_probability must be in [0, 1]")
        for name in ("brightness_jitter", "contrast_jitter", "saturation_jitter"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")
        if not 0.0 <= self.hue_jitter <= 0.5:
            raise ValueError("hue_jitter must be in [0, 0.5]")
        if not 0.0 <= self.rotation_limit <= 45.0:
            raise ValueError("rotation_limit must be in [0, 45] degrees")
        if self.target_size < 1:
            raise ValueError("target_size must be >= 1")
        if any(s <= 0 for s in self.channel_std):
            raise ValueError("channel_std components must be positive")

    @classmethod
    def identity(cls, target_size: int = 224) -> "AugmentPolicy":
        """Degenerate policy: augment() reduces to resize + normalize."""
        return cls(
            flip_probability=0.0,
            rotation_limit=0.0,
            brightness_jitter=0.0,
            contrast_jitter=0.0,
            saturation_jitter=0.0,
            hue_jitter=0.0,
            target_size=target_size,
        )


def _round_u8(x: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero."""
    return np.floor(np.clip(x, 0.0, 255.0) + 0.5).astype(np.uint8)


# --- decoding / encoding ---

def decode_image(data: bytes) -> RasterImage:
    """Decode PNG or binary PPM (P6) bytes; grayscale becomes replicated RGB."""
    looks_known = data.startswith(_PNG_SIGNATURE) or data.startswith(b"P6")
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            rgb = im.convert("RGB")
    except UnidentifiedImageError as exc:
        if looks_known:
            raise CorruptData(f"damaged image data: {exc}") from exc
        raise UnsupportedFormat(str(exc)) from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptData(f"damaged image data: {exc}") from exc
    return RasterImage(np.asarray(rgb, dtype=np.uint8))


def load_image(path) -> RasterImage:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise CorruptData(f"cannot read {path}: {exc}") from exc
    return decode_image(data)


def encode_png(img: RasterImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img.data, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: RasterImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(img))


# --- geometry ---

def resize_bilinear(img: RasterImage, width: int, height: int) -> RasterImage:
    """Half-pixel-centered bilinear resize; identity size returns a copy."""
    if width < 1 or height < 1:
        raise ValueError("target dimensions must be >= 1")
    if width == img.width and height == img.height:
        return RasterImage(img.data.copy())
    chw = img.data.transpose(2, 0, 1).astype(np.float32)
    out = _kernels.resize_bilinear(chw, height, width)
    return RasterImage(_round_u8(out.transpose(1, 2, 0)))


def horizontal_flip(t: Tensor3) -> Tensor3:
    """Mirror columns: j -> W-1-j in every channel."""
    return Tensor3(np.ascontiguousarray(t.data[:, :, ::-1]))


def rotate(t: Tensor3, angle: float) -> Tensor3:
    """Rotate about the image center, bilinear sampling, zero fill outside."""
    if abs(angle) > 45.0:
        raise ValueError("rotation angle limited to +/-45 degrees")
    if angle == 0.0:
        return Tensor3(t.data.copy())
    rad = math.radians(angle)
    return Tensor3(_kernels.rotate_bilinear(t.data, math.cos(rad), math.sin(rad)))


def _flip_raster(img: RasterImage) -> RasterImage:
    return RasterImage(np.ascontiguousarray(img.data[:, ::-1, :]))


def _rotate_raster(img: RasterImage, angle: float) -> RasterImage:
    rad = math.radians(angle)
    chw = img.data.transpose(2, 0, 1).astype(np.float32)
    out = _kernels.rotate_bilinear(chw, math.cos(rad), math.sin(rad))
    return RasterImage(_round_u8(out.transpose(1, 2, 0)))


# --- tensor conversion ---

def to_unit_tensor(img: RasterImage) -> Tensor3:
    """CHW float32 with every sample divided by 255."""
    chw = img.data.transpose(2, 0, 1).astype(np.float32)
    return Tensor3(chw / np.float32(255.0))


def normalize_channels(t: Tensor3, mean, std) -> Tensor3:
    """Per-channel (x - mean) / std."""
    mean = np.asarray(mean, dtype=np.float32)
    std = np.asarray(std, dtype=np.float32)
    if mean.shape != (3,) or std.shape != (3,):
        raise ValueError("mean and std must have 3 components")
    if np.any(std == 0.0):
        raise ZeroStd("zero standard deviation component")
    return Tensor3((t.data - mean[:, None, None]) / std[:, None, None])


# --- photometric jitter ---

def _luma(x: np.ndarray) -> np.ndarray:
    return LUMA_R * x[..., 0] + LUMA_G * x[..., 1] + LUMA_B * x[..., 2]


def _rotate_hue(x: np.ndarray, turns: float) -> np.ndarray:
    """Shift the HSV hue channel by ``turns`` of a full revolution."""
    r, g, b = x[..., 0], x[..., 1], x[..., 2]
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    chroma = mx - mn
    achromatic = chroma == 0.0
    safe_c = np.where(achromatic, 1.0, chroma)
    hue = np.where(
        mx == r,
        ((g - b) / safe_c) % 6.0,
        np.where(mx == g, (b - r) / safe_c + 2.0, (r - g) / safe_c + 4.0),
    )
    hue = (hue + turns * 6.0) % 6.0
    xx = chroma * (1.0 - np.abs(hue % 2.0 - 1.0))
    m = mx - chroma
    k = np.floor(hue).astype(np.int64) % 6
    zeros = np.zeros_like(chroma)
    r2 = np.choose(k, [chroma, xx, zeros, zeros, xx, chroma]) + m
    g2 = np.choose(k, [xx, chroma, chroma, xx, zeros, zeros]) + m
    b2 = np.choose(k, [zeros, zeros, xx, chroma, chroma, xx]) + m
    out = np.stack([r2, g2, b2], axis=-1)
    return np.where(achromatic[..., None], x, out)


def color_jitter(img: RasterImage, b: float, c: float, s: float, h: float) -> RasterImage:
    """Brightness, contrast, saturation, hue - applied in that fixed order.

    Stages chain in float64 (each sees the previous stage's output, clamped
    to [0, 255]); quantization back to u8 happens once at the end.
    """
    if b <= 0 or c <= 0 or s <= 0:
        raise ValueError("brightness/contrast/saturation factors must be > 0")
    if abs(h) > 0.5:
        raise ValueError("hue shift limited to +/-0.5 turns")
    x = img.data.astype(np.float64)
    if b != 1.0:
        x = np.clip(x * b, 0.0, 255.0)
    if c != 1.0:
        gray_mean = float(_luma(x).mean())
        x = np.clip(c * x + (1.0 - c) * gray_mean, 0.0, 255.0)
    if s != 1.0:
        gray = _luma(x)[..., None]
        x = np.clip(s * x + (1.0 - s) * gray, 0.0, 255.0)
    if h != 0.0:
        x = np.clip(_rotate_hue(x, h), 0.0, 255.0)
    return RasterImage(_round_u8(x))


# --- pipelines ---

def eval_transform(img: RasterImage, size: int = 224, mean=IMAGENET_MEAN, std=IMAGENET_STD) -> Tensor3:
    """Deterministic inference path: resize -> unit scale -> normalize."""
    resized = resize_bilinear(img, size, size)
    return normalize_channels(to_unit_tensor(resized), mean, std)


def augment_raster(img: RasterImage, rng: SeededRng, policy: AugmentPolicy) -> RasterImage:
    """The u8 part of augment() only (flip/rotate/jitter), native size kept.

    Used to materialize augmented dataset copies on disk; draws consume the
    rng in the same order as augment().
    """
    do_flip = rng.coin(policy.flip_probability)
    angle = rng.uniform(-policy.rotation_limit, policy.rotation_limit)
    b = rng.uniform(1.0 - policy.brightness_jitter, 1.0 + policy.brightness_jitter)
    c = rng.uniform(1.0 - policy.contrast_jitter, 1.0 + policy.contrast_jitter)
    s = rng.uniform(1.0 - policy.saturation_jitter, 1.0 + policy.saturation_jitter)
    h = rng.uniform(-policy.hue_jitter, policy.hue_jitter)

    out = img
    if do_flip:
        out = _flip_raster(out)
    if angle != 0.0:
        out = _rotate_raster(out, angle)
    if not (b == 1.0 and c == 1.0 and s == 1.0 and h == 0.0):
        out = color_jitter(out, b, c, s, h)
    return RasterImage(out.data.copy()) if out is img else out


def augment(img: RasterImage, rng: SeededRng, policy: AugmentPolicy) -> Tensor3:
    """Seeded stochastic training transform; bit-identical per (image, rng state, policy)."""
    out = augment_raster(img, rng, policy)
    out = resize_bilinear(out, policy.target_size, policy.target_size)
    return normalize_channels(to_unit_tensor(out), policy.channel_mean, policy.channel_std)
