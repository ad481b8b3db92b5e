"""Shared helpers for the test suite: procedural images and tiny datasets."""

from __future__ import annotations

import struct
import zlib

import numpy as np

from contrastiq.imagecore import AugmentPolicy, RasterImage, save_png


def textured_image(seed: int, h: int = 128, w: int = 128) -> RasterImage:
    """Structured synthetic photo stand-in: gradients + periodic texture + noise."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w]
    img = np.zeros((h, w, 3))
    img[..., 0] = 110 + 70 * np.sin(2 * np.pi * xx / (19 + 9 * seed)) * np.cos(2 * np.pi * yy / (23 + 5 * seed))
    img[..., 1] = 60 + (xx + 0.5 * yy) * 130.0 / (w + 0.5 * h)
    img[..., 2] = 128 + 80 * np.cos(2 * np.pi * (xx + yy) / (31 + 7 * seed))
    img += rng.normal(0, 6, (h, w, 3))
    return RasterImage(np.clip(img, 0, 255).astype(np.uint8))


def random_image(seed: int, h: int = 32, w: int = 32) -> RasterImage:
    rng = np.random.default_rng(seed)
    return RasterImage(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


def constant_image(value: int, h: int = 8, w: int = 8) -> RasterImage:
    return RasterImage(np.full((h, w, 3), value, dtype=np.uint8))


def write_bases(directory, count: int = 3, h: int = 128, w: int = 128) -> list[str]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        p = directory / f"base{i}.png"
        save_png(textured_image(i, h, w), p)
        paths.append(str(p))
    return paths


def mild_expand_policy() -> AugmentPolicy:
    """Flip + tiny photometric jitter: dataset expansion with low label noise."""
    return AugmentPolicy(
        rotation_limit=0.0,
        hue_jitter=0.0,
        brightness_jitter=0.02,
        contrast_jitter=0.02,
        saturation_jitter=0.02,
    )


def ppm_bytes(pixels: np.ndarray) -> bytes:
    """Binary P6 PPM from an HWC u8 array."""
    h, w, _ = pixels.shape
    return b"P6\n%d %d\n255\n" % (w, h) + pixels.astype(np.uint8).tobytes()


def png_bytes_1x1(r: int, g: int, b: int) -> bytes:
    """Hand-assembled minimal 1x1 RGB PNG (independent of Pillow)."""

    def chunk(tag: bytes, payload: bytes) -> bytes:
        return (
            struct.pack(">I", len(payload))
            + tag
            + payload
            + struct.pack(">I", zlib.crc32(tag + payload))
        )

    ihdr = struct.pack(">IIBBBBB", 1, 1, 8, 2, 0, 0, 0)
    raw = bytes([0, r, g, b])  # filter byte + one RGB pixel
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(raw))
        + chunk(b"IEND", b"")
    )
