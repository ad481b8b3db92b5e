"""Pure-numpy implementations of the hot kernels.

This is the fallback backend used when the compiled extension is missing.
The bilinear kernels compute interpolation in float64 with the exact same
expression structure as the compiled twin, so the two backends produce
bit-identical outputs for resize/rotate; convolution differs only in
summation order (GEMM here, direct loops there).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BACKEND_NAME = "numpy"


def conv2d(
    x: np.ndarray,
    w: np.ndarray,
    bias: np.ndarray | None,
    stride: int = 1,
    padding: int = 0,
    groups: int = 1,
) -> np.ndarray:
    """Grouped 2-D convolution, CHW float32, zero padding.

    x: [Cin, H, W]; w: [Cout, Cin/groups, kh, kw]; out: [Cout, Ho, Wo].
    """
    cin, _, _ = x.shape
    cout, cin_g, kh, kw = w.shape
    if padding:
        x = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    if kh == 1 and kw == 1 and groups == 1:
        if stride > 1:
            x = x[:, ::stride, ::stride]
        out = (w[:, :, 0, 0] @ x.reshape(cin, -1)).reshape(cout, *x.shape[1:])
    elif groups == cin and cin_g == 1 and cout == cin:
        win = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
        out = np.einsum("chwkl,ckl->chw", win, w[:, 0], optimize=True)
    else:
        win = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
        _, ho, wo = win.shape[:3]
        cout_g = cout // groups
        out = np.empty((cout, ho, wo), dtype=np.float32)
        for g in range(groups):
            cols = win[g * cin_g : (g + 1) * cin_g]
            cols = cols.transpose(0, 3, 4, 1, 2).reshape(cin_g * kh * kw, ho * wo)
            wg = w[g * cout_g : (g + 1) * cout_g].reshape(cout_g, -1)
            out[g * cout_g : (g + 1) * cout_g] = (wg @ cols).reshape(cout_g, ho, wo)
    out = np.ascontiguousarray(out, dtype=np.float32)
    if bias is not None:
        out += bias[:, None, None]
    return out


def resize_bilinear(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-centered bilinear resize of a CHW float32 tensor.

    Source coordinate of output pixel j is (j + 0.5) * (in/out) - 0.5,
    clamped to the valid range (edge-replicate sampling).
    """
    c, h, w = src.shape
    sy = np.clip((np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5, 0.0, h - 1.0)
    sx = np.clip((np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    fy = (sy - y0)[None, :, None]
    fx = (sx - x0)[None, None, :]
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    v00 = src[:, y0[:, None], x0[None, :]].astype(np.float64)
    v01 = src[:, y0[:, None], x1[None, :]].astype(np.float64)
    v10 = src[:, y1[:, None], x0[None, :]].astype(np.float64)
    v11 = src[:, y1[:, None], x1[None, :]].astype(np.float64)
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    return (top + fy * (bot - top)).astype(np.float32)


def rotate_bilinear(src: np.ndarray, cos_t: float, sin_t: float) -> np.ndarray:
    """Rotate a CHW float32 tensor about its center; zero fill outside.

    The caller passes cos/sin of the angle so that both backends share the
    exact trigonometric constants.  Positive angles rotate content
    counter-clockwise in (x right, y down) pixel coordinates.
    """
    c, h, w = src.shape
    cx = (w - 1) * 0.5
    cy = (h - 1) * 0.5
    dx = np.arange(w, dtype=np.float64)[None, :] - cx
    dy = np.arange(h, dtype=np.float64)[:, None] - cy
    sxg = (cos_t * dx + sin_t * dy) + cx
    syg = (-sin_t * dx + cos_t * dy) + cy
    x0 = np.floor(sxg).astype(np.int64)
    y0 = np.floor(syg).astype(np.int64)
    fx = sxg - x0
    fy = syg - y0
    x1 = x0 + 1
    y1 = y0 + 1

    def corner(yi, xi):
        valid = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
        vals = src[:, np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)].astype(np.float64)
        return np.where(valid[None, :, :], vals, 0.0)

    v00 = corner(y0, x0)
    v01 = corner(y0, x1)
    v10 = corner(y1, x0)
    v11 = corner(y1, x1)
    w00 = (1.0 - fy) * (1.0 - fx)
    w01 = (1.0 - fy) * fx
    w10 = fy * (1.0 - fx)
    w11 = fy * fx
    out = (v00 * w00 + v01 * w01) + (v10 * w10 + v11 * w11)
    return out.astype(np.float32)
