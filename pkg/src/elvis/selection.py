"""Block-removal planning: weighted importance, saliency inversion, temporal
smoothing, and per-row top-k selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import ComplexityTensors, SaliencyMask


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class RemovalPlan:
    """For every frame and block-row, the ascending column indices to remove.

    ``removed[n][i]`` is a tuple of exactly ``k`` distinct columns in [0, J).
    """

    removed: tuple  # tuple[tuple[tuple[int, ...], ...], ...], indexed [n][i]
    block_rows: int
    block_cols: int
    frame_count: int
    removed_fraction: float
    k: int  # floor(removed_fraction * block_cols)

    def row(self, frame: int, block_row: int) -> tuple[int, ...]:
        return self.removed[frame][block_row]

    def frame_mask(self, frame: int) -> np.ndarray:
        """(I, J) uint8 mask, 1 = removed."""
        m = np.zeros((self.block_rows, self.block_cols), dtype=np.uint8)
        for i, cols in enumerate(self.removed[frame]):
            m[i, list(cols)] = 1
        return m


def importance(s_slice: np.ndarray, t_slice: np.ndarray, alpha: float, is_last_frame: bool) -> np.ndarray:
    """alpha-blend of spatial and temporal complexity; spatial only on the last frame."""
    if s_slice.shape != t_slice.shape:
        raise SelectionError(f"shape mismatch {s_slice.shape} vs {t_slice.shape}")
    if is_last_frame:
        return s_slice.astype(np.float64).copy()
    return alpha * s_slice + (1.0 - alpha) * t_slice


def apply_saliency(c_slice: np.ndarray, m_slice: np.ndarray) -> np.ndarray:
    """Negate importance wherever the saliency mask flags foreground."""
    if c_slice.shape != m_slice.shape:
        raise SelectionError(f"shape mismatch {c_slice.shape} vs {m_slice.shape}")
    return np.where(m_slice != 0, -c_slice, c_slice)


def smooth_row(current_row: np.ndarray, previous_frame_row, beta: float) -> np.ndarray:
    """Blend a row with the same row of the previous frame; identity on frame 0."""
    current_row = np.asarray(current_row, dtype=np.float64)
    if previous_frame_row is None:
        return current_row.copy()
    previous_frame_row = np.asarray(previous_frame_row, dtype=np.float64)
    if current_row.shape != previous_frame_row.shape:
        raise SelectionError("row length mismatch")
    return beta * current_row + (1.0 - beta) * previous_frame_row


def _top_k_columns(row: np.ndarray, k: int) -> tuple[int, ...]:
    # highest value first, ties to the smaller column; stored ascending
    order = sorted(range(len(row)), key=lambda j: (-row[j], j))
    return tuple(sorted(order[:k]))


def select_blocks(
    tensors: ComplexityTensors,
    mask: SaliencyMask,
    alpha: float,
    beta: float,
    removed_fraction: float,
) -> RemovalPlan:
    """Pick, per row of every frame, the floor(r*J) highest-importance columns.

    Importance is the alpha blend (spatial-only on the last frame), negated on
    salient blocks, then each row is smoothed against the previous frame's
    post-inversion, pre-smoothing values.
    """
    if not 0.0 <= removed_fraction <= 1.0:
        raise SelectionError("removed fraction must be in [0, 1]")
    s, t = tensors.S, tensors.T
    if s.shape != t.shape or s.shape != mask.M.shape:
        raise SelectionError(
            f"geometry mismatch: S {s.shape}, T {t.shape}, M {mask.M.shape}"
        )
    bi, bj, n_frames = s.shape
    k = math.floor(removed_fraction * bj)

    c = np.empty_like(s)
    for n in range(n_frames):
        c[:, :, n] = importance(s[:, :, n], t[:, :, n], alpha, n == n_frames - 1)
        c[:, :, n] = apply_saliency(c[:, :, n], mask.M[:, :, n])

    removed = []
    for n in range(n_frames):
        frame_rows = []
        for i in range(bi):
            prev = c[i, :, n - 1] if n > 0 else None
            row = smooth_row(c[i, :, n], prev, beta)
            frame_rows.append(_top_k_columns(row, k))
        removed.append(tuple(frame_rows))
    return RemovalPlan(
        removed=tuple(removed),
        block_rows=bi,
        block_cols=bj,
        frame_count=n_frames,
        removed_fraction=removed_fraction,
        k=k,
    )


def export_plan_csv(plan: RemovalPlan, path) -> None:
    """Debug export: ``frame,row,cols`` with semicolon-separated columns."""
    with open(path, "w") as fh:
        fh.write("frame,row,cols\n")
        for n in range(plan.frame_count):
            for i in range(plan.block_rows):
                cols = ";".join(str(j) for j in plan.row(n, i))
                fh.write(f"{n},{i},{cols}\n")
