"""Placeholder-block restoration: temporal copy and diffusion baselines plus a
subprocess adapter for external in-painting tools."""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import _kernels
from .media import PNG_PATTERN, FrameSequence, write_sequence

DEFAULT_TOL = 1e-3  # normalized intensity
DEFAULT_MAX_ITERS = 500

BACKENDS = ("temporal-copy", "diffusion", "external")


class InpaintError(RuntimeError):
    pass


@dataclass(frozen=True)
class InpaintRequest:
    """Stretched frames plus the per-frame block masks marking what to fill.

    ``block_masks`` has shape (N, I, J) with 1 = missing block.
    """

    frames: FrameSequence
    block_masks: np.ndarray
    block_size: int

    def __post_init__(self):
        n, bi, bj = self.block_masks.shape
        if n != self.frames.frame_count:
            raise InpaintError("mask count does not match frame count")
        if bi * self.block_size != self.frames.height or bj * self.block_size != self.frames.width:
            raise InpaintError("mask grid does not match frame geometry")

    def pixel_mask(self, n: int) -> np.ndarray:
        """(H, W) uint8 pixel mask for frame n."""
        b = self.block_size
        return np.kron(self.block_masks[n], np.ones((b, b), dtype=np.uint8))


def _fill_frame_diffusion(frame: np.ndarray, pixel_mask: np.ndarray, tol: float, max_iters: int) -> np.ndarray:
    out = frame.astype(np.float64)
    mask = np.ascontiguousarray(pixel_mask)
    for ch in range(out.shape[2]):
        plane = np.ascontiguousarray(out[:, :, ch])
        _kernels.diffusion_fill_plane(plane, mask, tol * 255.0, max_iters)
        out[:, :, ch] = plane
    filled = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    # known pixels stay bit exact
    keep = pixel_mask == 0
    filled[keep] = frame[keep]
    return filled


def inpaint_diffusion(
    request: InpaintRequest,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> FrameSequence:
    """Fill each masked pixel with the converged mean of its 4-neighbors."""
    if tol <= 0:
        raise InpaintError("tol must be positive")
    frames = np.stack(
        [
            _fill_frame_diffusion(request.frames.frames[n], request.pixel_mask(n), tol, max_iters)
            for n in range(request.frames.frame_count)
        ]
    )
    return request.frames.with_frames(frames)


def inpaint_temporal_copy(request: InpaintRequest) -> FrameSequence:
    """Copy each missing block from the nearest frame where it is present
    (earlier frame wins ties); blocks missing everywhere fall back to diffusion."""
    seq = request.frames
    n_frames = seq.frame_count
    present = request.block_masks == 0  # (N, I, J)
    b = request.block_size
    out = seq.frames.copy()
    leftovers = np.zeros_like(request.block_masks)
    for n in range(n_frames):
        miss_i, miss_j = np.nonzero(request.block_masks[n])
        for i, j in zip(miss_i, miss_j):
            candidates = np.flatnonzero(present[:, i, j])
            if candidates.size == 0:
                leftovers[n, i, j] = 1
                continue
            src = int(candidates[np.argmin(np.abs(candidates - n))])
            # argmin returns the first (earlier) frame on distance ties
            y, x = slice(i * b, (i + 1) * b), slice(j * b, (j + 1) * b)
            out[n, y, x] = seq.frames[src, y, x]
    if leftovers.any():
        partial = seq.with_frames(out)
        fallback = InpaintRequest(partial, leftovers, b)
        return inpaint_diffusion(fallback)
    return seq.with_frames(out)


def inpaint_external(request: InpaintRequest, tool_command: str, workdir) -> FrameSequence:
    """Run an external tool over the frames+masks directory convention.

    Writes ``frames/%05d.png`` and pixel-level ``masks/%05d.png`` (white =
    fill) under workdir, substitutes {frames}, {masks}, {out} into the command
    template, and reads ``results/%05d.png`` back.
    """
    wd = Path(workdir)
    frames_dir, masks_dir, out_dir = wd / "frames", wd / "masks", wd / "results"
    for d in (frames_dir, masks_dir, out_dir):
        d.mkdir(parents=True, exist_ok=True)
    write_sequence(request.frames, frames_dir, "png-directory")
    for n in range(request.frames.frame_count):
        mask_img = (request.pixel_mask(n) * 255).astype(np.uint8)
        Image.fromarray(mask_img, mode="L").save(masks_dir / (PNG_PATTERN % (n + 1)))

    cmd = tool_command.format(frames=str(frames_dir), masks=str(masks_dir), out=str(out_dir))
    proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
    if proc.returncode != 0:
        raise InpaintError(
            f"in-paint tool exited with {proc.returncode}\nstdout: {proc.stdout}\nstderr: {proc.stderr}"
        )
    outputs = sorted(out_dir.glob("*.png"))
    if len(outputs) != request.frames.frame_count:
        raise InpaintError(
            f"output count mismatch: tool produced {len(outputs)} frames, "
            f"expected {request.frames.frame_count}"
        )
    frames = []
    for p in outputs:
        arr = np.asarray(Image.open(p).convert("RGB"), dtype=np.uint8)
        if arr.shape[:2] != (request.frames.height, request.frames.width):
            raise InpaintError(f"output {p.name} has wrong geometry {arr.shape[1]}x{arr.shape[0]}")
        frames.append(arr)
    return request.frames.with_frames(np.stack(frames))


def run_inpaint(
    request: InpaintRequest,
    backend: str,
    tool_command: str | None = None,
    workdir=None,
    **kwargs,
) -> FrameSequence:
    if backend == "temporal-copy":
        return inpaint_temporal_copy(request)
    if backend == "diffusion":
        return inpaint_diffusion(request, **kwargs)
    if backend == "external":
        if not tool_command or workdir is None:
            raise InpaintError("external backend needs tool_command and workdir")
        return inpaint_external(request, tool_command, workdir)
    raise InpaintError(f"unknown backend {backend!r}")
