# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the numpy kernels (direct loops, float64 accumulation).

Bilinear kernels mirror the fallback's expression structure operation for
operation so outputs are bit-identical; convolution accumulates in double in
a fixed loop order.  Compiled with -ffp-contract=off to forbid FMA fusion.
"""

from libc.math cimport floor

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def conv2d(x, w, bias, int stride=1, int padding=0, int groups=1):
    cdef cnp.ndarray[cnp.float32_t, ndim=3, mode="c"] xv = np.ascontiguousarray(x, dtype=np.float32)
    cdef cnp.ndarray[cnp.float32_t, ndim=4, mode="c"] wv = np.ascontiguousarray(w, dtype=np.float32)
    cdef int cin = xv.shape[0], h = xv.shape[1], ww = xv.shape[2]
    cdef int cout = wv.shape[0], cin_g = wv.shape[1], kh = wv.shape[2], kw = wv.shape[3]
    cdef int ho = (h + 2 * padding - kh) // stride + 1
    cdef int wo = (ww + 2 * padding - kw) // stride + 1
    cdef int cout_g = cout // groups
    cdef cnp.ndarray[cnp.float32_t, ndim=3, mode="c"] out = np.empty((cout, ho, wo), dtype=np.float32)
    cdef cnp.ndarray[cnp.float32_t, ndim=1, mode="c"] bv
    cdef bint has_bias = bias is not None
    if has_bias:
        bv = np.ascontiguousarray(bias, dtype=np.float32)
    else:
        bv = np.zeros(cout, dtype=np.float32)

    cdef int co, ci, oy, ox, ky, kx, iy, ix, g, ci0
    cdef double acc
    cdef float b
    with nogil:
        for co in range(cout):
            g = co // cout_g
            ci0 = g * cin_g
            b = bv[co]
            for oy in range(ho):
                for ox in range(wo):
                    acc = 0.0
                    for ci in range(cin_g):
                        for ky in range(kh):
                            iy = oy * stride + ky - padding
                            if iy < 0 or iy >= h:
                                continue
                            for kx in range(kw):
                                ix = ox * stride + kx - padding
                                if ix < 0 or ix >= ww:
                                    continue
                                acc += xv[ci0 + ci, iy, ix] * wv[co, ci, ky, kx]
                    out[co, oy, ox] = <float> acc + b
    return out


def resize_bilinear(src, int out_h, int out_w):
    cdef cnp.ndarray[cnp.float32_t, ndim=3, mode="c"] sv = np.ascontiguousarray(src, dtype=np.float32)
    cdef int c = sv.shape[0], h = sv.shape[1], w = sv.shape[2]
    cdef cnp.ndarray[cnp.float32_t, ndim=3, mode="c"] out = np.empty((c, out_h, out_w), dtype=np.float32)
    cdef double scale_y = h / <double> out_h
    cdef double scale_x = w / <double> out_w
    cdef int ch, oy, ox, y0, x0, y1, x1
    cdef double sy, sx, fy, fx, v00, v01, v10, v11, top, bot
    with nogil:
        for oy in range(out_h):
            sy = (oy + 0.5) * scale_y - 0.5
            if sy < 0.0:
                sy = 0.0
            if sy > h - 1.0:
                sy = h - 1.0
            y0 = <int> floor(sy)
            fy = sy - y0
            y1 = y0 + 1
            if y1 > h - 1:
                y1 = h - 1
            for ox in range(out_w):
                sx = (ox + 0.5) * scale_x - 0.5
                if sx < 0.0:
                    sx = 0.0
                if sx > w - 1.0:
                    sx = w - 1.0
                x0 = <int> floor(sx)
                fx = sx - x0
                x1 = x0 + 1
                if x1 > w - 1:
                    x1 = w - 1
                for ch in range(c):
                    v00 = sv[ch, y0, x0]
                    v01 = sv[ch, y0, x1]
                    v10 = sv[ch, y1, x0]
                    v11 = sv[ch, y1, x1]
                    top = v00 + fx * (v01 - v00)
                    bot = v10 + fx * (v11 - v10)
                    out[ch, oy, ox] = <float> (top + fy * (bot - top))
    return out


def rotate_bilinear(src, double cos_t, double sin_t):
    cdef cnp.ndarray[cnp.float32_t, ndim=3, mode="c"] sv = np.ascontiguousarray(src, dtype=np.float32)
    cdef int c = sv.shape[0], h = sv.shape[1], w = sv.shape[2]
    cdef cnp.ndarray[cnp.float32_t, ndim=3, mode="c"] out = np.empty((c, h, w), dtype=np.float32)
    cdef double cx = (w - 1) * 0.5
    cdef double cy = (h - 1) * 0.5
    cdef int ch, oy, ox, x0, y0, x1, y1
    cdef double dx, dy, sx, sy, fx, fy
    cdef double v00, v01, v10, v11, w00, w01, w10, w11
    with nogil:
        for oy in range(h):
            dy = oy - cy
            for ox in range(w):
                dx = ox - cx
                sx = (cos_t * dx + sin_t * dy) + cx
                sy = (-sin_t * dx + cos_t * dy) + cy
                x0 = <int> floor(sx)
                y0 = <int> floor(sy)
                fx = sx - floor(sx)
                fy = sy - floor(sy)
                x1 = x0 + 1
                y1 = y0 + 1
                w00 = (1.0 - fy) * (1.0 - fx)
                w01 = (1.0 - fy) * fx
                w10 = fy * (1.0 - fx)
                w11 = fy * fx
                for ch in range(c):
                    v00 = sv[ch, y0, x0] if (0 <= y0 < h and 0 <= x0 < w) else 0.0
                    v01 = sv[ch, y0, x1] if (0 <= y0 < h and 0 <= x1 < w) else 0.0
                    v10 = sv[ch, y1, x0] if (0 <= y1 < h and 0 <= x0 < w) else 0.0
                    v11 = sv[ch, y1, x1] if (0 <= y1 < h and 0 <= x1 < w) else 0.0
                    out[ch, oy, ox] = <float> ((v00 * w00 + v01 * w01) + (v10 * w10 + v11 * w11))
    return out
