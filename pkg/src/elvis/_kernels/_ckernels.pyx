# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot-loop kernels. Pure numpy twins live in ``pure``; both sides
must stay numerically identical (the test suite cross-checks them)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

cdef double _SOBEL_NORM = 255.0 * sqrt(2.0) * 4.0


def sobel_block_means(cnp.uint8_t[:, :] luma, int block):
    """Per-block mean of normalized 3x3 Sobel gradient magnitude; see pure twin."""
    cdef int h = luma.shape[0]
    cdef int w = luma.shape[1]
    cdef int bi = h // block
    cdef int bj = w // block
    out_arr = np.zeros((bi, bj), dtype=np.float64)
    cdef double[:, :] out = out_arr
    cdef int y, x, ym, yp, xm, xp
    cdef double gx, gy, mag
    cdef double scale = 1.0 / (block * block)
    for y in range(h):
        ym = y - 1 if y > 0 else 0
        yp = y + 1 if y < h - 1 else h - 1
        for x in range(w):
            xm = x - 1 if x > 0 else 0
            xp = x + 1 if x < w - 1 else w - 1
            gx = (luma[ym, xp] + 2.0 * luma[y, xp] + luma[yp, xp]) - \
                 (luma[ym, xm] + 2.0 * luma[y, xm] + luma[yp, xm])
            gy = (luma[yp, xm] + 2.0 * luma[yp, x] + luma[yp, xp]) - \
                 (luma[ym, xm] + 2.0 * luma[ym, x] + luma[ym, xp])
            mag = sqrt(gx * gx + gy * gy) / _SOBEL_NORM
            out[y // block, x // block] += mag * scale
    np.clip(out_arr, 0.0, 1.0, out=out_arr)
    return out_arr


def absdiff_block_means(cnp.uint8_t[:, :] luma_a, cnp.uint8_t[:, :] luma_b, int block):
    """Per-block mean absolute difference scaled to [0, 1]; see pure twin."""
    cdef int h = luma_a.shape[0]
    cdef int w = luma_a.shape[1]
    out_arr = np.zeros((h // block, w // block), dtype=np.float64)
    cdef double[:, :] out = out_arr
    cdef int y, x
    cdef double scale = 1.0 / (255.0 * block * block)
    for y in range(h):
        for x in range(w):
            out[y // block, x // block] += fabs(
                (<double> luma_a[y, x]) - (<double> luma_b[y, x])) * scale
    return out_arr


def diffusion_fill_plane(double[:, :] plane, cnp.uint8_t[:, :] mask,
                         double tol_abs, int max_iters):
    """Jacobi sweeps over masked pixels, in place; see pure twin."""
    cdef int h = plane.shape[0]
    cdef int w = plane.shape[1]
    cdef int y, x, it, i, n_masked = 0
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                n_masked += 1
    if n_masked == 0:
        return 0
    ys_arr = np.empty(n_masked, dtype=np.intp)
    xs_arr = np.empty(n_masked, dtype=np.intp)
    new_arr = np.empty(n_masked, dtype=np.float64)
    cdef cnp.intp_t[:] ys = ys_arr
    cdef cnp.intp_t[:] xs = xs_arr
    cdef double[:] new_vals = new_arr
    i = 0
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                ys[i] = y
                xs[i] = x
                i += 1
    cdef double acc, count, change, delta
    for it in range(1, max_iters + 1):
        change = 0.0
        for i in range(n_masked):
            y = ys[i]
            x = xs[i]
            acc = 0.0
            count = 0.0
            if y > 0:
                acc += plane[y - 1, x]
                count += 1.0
            if y < h - 1:
                acc += plane[y + 1, x]
                count += 1.0
            if x > 0:
                acc += plane[y, x - 1]
                count += 1.0
            if x < w - 1:
                acc += plane[y, x + 1]
                count += 1.0
            new_vals[i] = acc / count
            delta = fabs(new_vals[i] - plane[y, x])
            if delta > change:
                change = delta
        for i in range(n_masked):
            plane[ys[i], xs[i]] = new_vals[i]
        if change < tol_abs:
            return it
    return max_iters
