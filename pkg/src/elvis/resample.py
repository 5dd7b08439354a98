"""Row-wise block removal (shrinking) and its inverse with black placeholders
(stretching)."""

from __future__ import annotations

import numpy as np

from .media import FrameSequence
from .selection import RemovalPlan

# removed positions are refilled with black on the stretch side
PLACEHOLDER_VALUE = 0


class ResampleError(ValueError):
    pass


def shrink_frame(frame: np.ndarray, plan_rows, block_size: int) -> np.ndarray:
    """Drop the planned block columns from each block-row and concatenate survivors.

    ``plan_rows[i]`` lists the removed columns of block-row i; all rows must
    drop the same count so the result stays rectangular.
    """
    h, w = frame.shape[:2]
    if h % block_size or w % block_size:
        raise ResampleError("frame not block aligned")
    bi, bj = h // block_size, w // block_size
    if len(plan_rows) != bi:
        raise ResampleError(f"plan has {len(plan_rows)} rows, frame has {bi}")
    ks = {len(r) for r in plan_rows}
    if len(ks) > 1:
        raise ResampleError("rows remove unequal block counts")
    k = ks.pop() if ks else 0
    out = np.empty((h, (bj - k) * block_size) + frame.shape[2:], dtype=frame.dtype)
    for i, removed in enumerate(plan_rows):
        removed_set = set(removed)
        if removed_set and (min(removed_set) < 0 or max(removed_set) >= bj):
            raise ResampleError(f"column out of range in row {i}")
        kept = [j for j in range(bj) if j not in removed_set]
        y = slice(i * block_size, (i + 1) * block_size)
        for dst, src in enumerate(kept):
            out[y, dst * block_size : (dst + 1) * block_size] = frame[
                y, src * block_size : (src + 1) * block_size
            ]
    return out


def stretch_frame(shrunk: np.ndarray, plan_rows, block_size: int, original_cols: int) -> np.ndarray:
    """Reinsert black placeholder blocks at the planned columns."""
    h, w = shrunk.shape[:2]
    if h % block_size or w % block_size:
        raise ResampleError("shrunk frame not block aligned")
    bi = h // block_size
    if len(plan_rows) != bi:
        raise ResampleError(f"plan has {len(plan_rows)} rows, frame has {bi}")
    ks = {len(r) for r in plan_rows}
    if len(ks) > 1:
        raise ResampleError("rows remove unequal block counts")
    k = ks.pop() if ks else 0
    if w != (original_cols - k) * block_size:
        raise ResampleError(
            f"shrunk width {w} does not match {(original_cols - k) * block_size}"
        )
    out = np.full(
        (h, original_cols * block_size) + shrunk.shape[2:], PLACEHOLDER_VALUE, dtype=shrunk.dtype
    )
    for i, removed in enumerate(plan_rows):
        removed_set = set(removed)
        kept = [j for j in range(original_cols) if j not in removed_set]
        y = slice(i * block_size, (i + 1) * block_size)
        for src, dst in enumerate(kept):
            out[y, dst * block_size : (dst + 1) * block_size] = shrunk[
                y, src * block_size : (src + 1) * block_size
            ]
    return out


def shrink_sequence(seq: FrameSequence, plan: RemovalPlan, block_size: int) -> FrameSequence:
    frames = np.stack(
        [shrink_frame(seq.frames[n], plan.removed[n], block_size) for n in range(seq.frame_count)]
    )
    return FrameSequence(frames, seq.frame_rate, seq.original_width, seq.original_height)


def stretch_sequence(seq: FrameSequence, plan: RemovalPlan, block_size: int) -> FrameSequence:
    frames = np.stack(
        [
            stretch_frame(seq.frames[n], plan.removed[n], block_size, plan.block_cols)
            for n in range(seq.frame_count)
        ]
    )
    return FrameSequence(frames, seq.frame_rate, seq.original_width, seq.original_height)
