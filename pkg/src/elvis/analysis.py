"""Per-block spatial/temporal complexity tensors and foreground saliency masks."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import _kernels
from .media import PNG_PATTERN, FrameSequence

DEFAULT_MASK_COVERAGE = 0.25
DEFAULT_MOTION_QUANTILE = 0.75


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class ComplexityTensors:
    """Spatial and temporal complexity, shape (I, J, N), values in [0, 1].

    The temporal slice of the last frame is stored as zero and never consumed
    by selection.
    """

    S: np.ndarray
    T: np.ndarray
    block_size: int

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.S.shape


@dataclass(frozen=True)
class SaliencyMask:
    """Binary per-block foreground indicator, shape (I, J, N)."""

    M: np.ndarray
    provenance: str  # "file" | "motion-heuristic" | "none"

    @classmethod
    def empty(cls, shape: tuple[int, int, int]) -> "SaliencyMask":
        return cls(np.zeros(shape, dtype=np.uint8), "none")


def _check_aligned(seq: FrameSequence, block_size: int) -> None:
    if seq.height % block_size or seq.width % block_size:
        raise AnalysisError(
            f"sequence {seq.width}x{seq.height} is not aligned to block size {block_size}"
        )


def spatial_complexity(seq: FrameSequence, block_size: int) -> np.ndarray:
    """S[i,j,n]: normalized mean Sobel gradient magnitude per block."""
    _check_aligned(seq, block_size)
    lumas = seq.lumas()
    slices = [_kernels.sobel_block_means(lumas[n], block_size) for n in range(seq.frame_count)]
    return np.stack(slices, axis=-1)


def temporal_complexity(seq: FrameSequence, block_size: int) -> np.ndarray:
    """T[i,j,n]: normalized mean absolute luma difference to the next frame; last frame zero."""
    _check_aligned(seq, block_size)
    lumas = seq.lumas()
    i, j = seq.height // block_size, seq.width // block_size
    out = np.zeros((i, j, seq.frame_count), dtype=np.float64)
    for n in range(seq.frame_count - 1):
        out[:, :, n] = _kernels.absdiff_block_means(lumas[n], lumas[n + 1], block_size)
    return out


def compute_complexity(seq: FrameSequence, block_size: int) -> ComplexityTensors:
    return ComplexityTensors(
        S=spatial_complexity(seq, block_size),
        T=temporal_complexity(seq, block_size),
        block_size=block_size,
    )


def load_masks(
    path,
    seq: FrameSequence,
    block_size: int,
    coverage: float = DEFAULT_MASK_COVERAGE,
) -> SaliencyMask:
    """Blockify per-frame binary mask PNGs: a block is salient when at least
    ``coverage`` of its pixels are nonzero."""
    _check_aligned(seq, block_size)
    p = Path(path)
    bi, bj = seq.height // block_size, seq.width // block_size
    m = np.zeros((bi, bj, seq.frame_count), dtype=np.uint8)
    for n in range(seq.frame_count):
        mask_file = p / (PNG_PATTERN % (n + 1))
        if not mask_file.exists():
            raise AnalysisError(f"missing mask frame {mask_file}")
        arr = np.asarray(Image.open(mask_file).convert("L"), dtype=np.uint8)
        if arr.shape[0] < seq.original_height or arr.shape[1] < seq.original_width:
            raise AnalysisError(
                f"mask {mask_file.name} is {arr.shape[1]}x{arr.shape[0]}, smaller than frame"
            )
        # pad (or crop) masks to the aligned geometry; padding counts as background
        full = np.zeros((seq.height, seq.width), dtype=np.uint8)
        full[: min(arr.shape[0], seq.height), : min(arr.shape[1], seq.width)] = arr[
            : seq.height, : seq.width
        ]
        frac = (full.reshape(bi, block_size, bj, block_size) != 0).mean(axis=(1, 3))
        m[:, :, n] = frac >= coverage
    return SaliencyMask(m, "file")


def motion_saliency(
    seq: FrameSequence,
    block_size: int,
    quantile: float = DEFAULT_MOTION_QUANTILE,
) -> SaliencyMask:
    """Flag blocks whose temporal complexity strictly exceeds the per-frame quantile.

    The last frame has no forward difference, so it copies the previous
    frame's mask.
    """
    if not 0.0 < quantile < 1.0:
        raise AnalysisError("quantile must be in (0, 1)")
    t = temporal_complexity(seq, block_size)
    m = np.zeros(t.shape, dtype=np.uint8)
    n_frames = t.shape[2]
    for n in range(n_frames - 1):
        thresh = np.quantile(t[:, :, n], quantile)
        m[:, :, n] = t[:, :, n] > thresh
    if n_frames >= 2:
        m[:, :, n_frames - 1] = m[:, :, n_frames - 2]
    return SaliencyMask(m, "motion-heuristic")


def export_complexity_csv(tensors: ComplexityTensors, path) -> None:
    """One row per (tensor, frame, block-row) with J comma-separated values."""
    with open(path, "w") as fh:
        fh.write("tensor,frame,row,values\n")
        for name, t in (("S", tensors.S), ("T", tensors.T)):
            bi, _, n_frames = t.shape
            for n in range(n_frames):
                for i in range(bi):
                    vals = ";".join(f"{v:.6f}" for v in t[i, :, n])
                    fh.write(f"{name},{n},{i},{vals}\n")
