"""Handcrafted contrast statistics: a 16-dim feature vector per image.

All statistics are computed on the luma-grayscale image (Rec. 601 weights,
rounded to u8).  Layout:

    0  mean            4  Shannon entropy (256-bin, bits)
    1  std             5  symmetric KL divergence to uniform (nats)
    2  skewness        6  mean of per-cell std over an 8x8 patch grid
    3  excess kurtosis 7  std of those per-cell stds
    8  min   9  max   10  median   11  interquartile range
    12-15  reserved (zero)

Moments use population normalization; skewness and kurtosis of a constant
image are defined as 0.  The KL histogram is smoothed with +1e-12 before
renormalization.  Grid cell boundaries are floor(i * extent / 8), empty cells
(images smaller than 8 px in a dimension) are skipped.
"""

from __future__ import annotations

import numpy as np

from ..imagecore import LUMA_B, LUMA_G, LUMA_R, RasterImage

HANDCRAFTED_DIM = 16
_GRID = 8
_KL_EPS = 1e-12


def _grayscale_u8(img: RasterImage) -> np.ndarray:
    x = img.data.astype(np.float64)
    gray = LUMA_R * x[..., 0] + LUMA_G * x[..., 1] + LUMA_B * x[..., 2]
    return np.floor(np.clip(gray, 0.0, 255.0) + 0.5).astype(np.uint8)


def handcrafted_features(img: RasterImage) -> np.ndarray:
    gray = _grayscale_u8(img)
    vals = gray.astype(np.float64).ravel()
    n = vals.size

    mean = float(vals.mean())
    centered = vals - mean
    var = float(np.mean(centered**2))
    std = np.sqrt(var)
    if var > 0.0:
        skew = float(np.mean(centered**3)) / std**3
        kurt = float(np.mean(centered**4)) / var**2 - 3.0
    else:
        skew = 0.0
        kurt = 0.0

    counts = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    p = counts / n
    nz = p[p > 0]
    entropy = float(-np.sum(nz * np.log2(nz)))
    ps = p + _KL_EPS
    ps /= ps.sum()
    u = 1.0 / 256.0
    sym_kl = float(np.sum((ps - u) * (np.log(ps) - np.log(u))))

    cell_stds = []
    h, w = gray.shape
    yb = [i * h // _GRID for i in range(_GRID + 1)]
    xb = [i * w // _GRID for i in range(_GRID + 1)]
    for gy in range(_GRID):
        for gx in range(_GRID):
            cell = gray[yb[gy] : yb[gy + 1], xb[gx] : xb[gx + 1]]
            if cell.size:
                cell_stds.append(float(np.std(cell.astype(np.float64))))
    if cell_stds:
        local_mean = float(np.mean(cell_stds))
        local_std = float(np.std(cell_stds))
    else:
        local_mean = 0.0
        local_std = 0.0

    q25, q75 = np.percentile(vals, [25.0, 75.0])
    feats = np.zeros(HANDCRAFTED_DIM, dtype=np.float32)
    feats[:12] = [
        mean,
        std,
        skew,
        kurt,
        entropy,
        sym_kl,
        local_mean,
        local_std,
        float(vals.min()),
        float(vals.max()),
        float(np.median(vals)),
        float(q75 - q25),
    ]
    return feats
