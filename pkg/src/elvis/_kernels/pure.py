"""Pure numpy kernels; the fallback when the compiled extension is unavailable.

Same contracts as ``_ckernels``: see that module for the compiled twin.
"""

from __future__ import annotations

import numpy as np

_SOBEL_NORM = 255.0 * np.sqrt(2.0) * 4.0


def _block_means(values: np.ndarray, block: int) -> np.ndarray:
    h, w = values.shape
    return values.reshape(h // block, block, w // block, block).mean(axis=(1, 3))


def sobel_block_means(luma: np.ndarray, block: int) -> np.ndarray:
    """Per-block mean of normalized 3x3 Sobel gradient magnitude.

    ``luma`` is (H, W) uint8 with H, W multiples of ``block``; result is
    (H/block, W/block) float64 in [0, 1]. Borders use edge replication.
    """
    f = luma.astype(np.float64)
    p = np.pad(f, 1, mode="edge")
    gx = (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:]) - (
        p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2]
    )
    gy = (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:]) - (
        p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:]
    )
    mag = np.hypot(gx, gy) / _SOBEL_NORM
    return np.clip(_block_means(mag, block), 0.0, 1.0)


def absdiff_block_means(luma_a: np.ndarray, luma_b: np.ndarray, block: int) -> np.ndarray:
    """Per-block mean absolute difference of two luma planes, scaled to [0, 1]."""
    diff = np.abs(luma_a.astype(np.float64) - luma_b.astype(np.float64)) / 255.0
    return _block_means(diff, block)


def diffusion_fill_plane(plane: np.ndarray, mask: np.ndarray, tol_abs: float, max_iters: int) -> int:
    """Jacobi-iterate masked pixels toward the mean of their in-bounds 4-neighbors.

    ``plane`` is float64 (H, W), modified in place; ``mask`` is uint8, nonzero
    where pixels are unknown. Stops after the first sweep whose max masked-pixel
    change is below ``tol_abs``. Returns the number of sweeps run.
    """
    m = mask != 0
    if not m.any():
        return 0
    counts = np.full(plane.shape, 4.0)
    counts[0, :] -= 1.0
    counts[-1, :] -= 1.0
    counts[:, 0] -= 1.0
    counts[:, -1] -= 1.0
    for it in range(1, max_iters + 1):
        nb = np.zeros_like(plane)
        nb[1:, :] += plane[:-1, :]
        nb[:-1, :] += plane[1:, :]
        nb[:, 1:] += plane[:, :-1]
        nb[:, :-1] += plane[:, 1:]
        new_vals = nb[m] / counts[m]
        change = np.abs(new_vals - plane[m]).max()
        plane[m] = new_vals
        if change < tol_abs:
            return it
    return max_iters
