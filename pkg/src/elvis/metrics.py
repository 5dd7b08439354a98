"""Full-reference quality metrics (MSE, PSNR, SSIM), Pearson correlation, and
subprocess hooks for external metrics such as VMAF or LPIPS."""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .media import FrameSequence

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_L = 255.0


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr: float
    ssim: float
    vmaf: float | None = None
    lpips: float | None = None


def _check_geometry(a: FrameSequence, b: FrameSequence) -> None:
    if a.frames.shape != b.frames.shape:
        raise MetricError(f"geometry mismatch: {a.frames.shape} vs {b.frames.shape}")


def mse(a: FrameSequence, b: FrameSequence) -> float:
    """Mean squared pixel difference over all frames and channels, 8-bit domain."""
    _check_geometry(a, b)
    diff = a.frames.astype(np.float64) - b.frames.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(a: FrameSequence, b: FrameSequence, peak: float = 255.0) -> float:
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(peak * peak / err))


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _ssim_plane(x: np.ndarray, y: np.ndarray, window: np.ndarray) -> np.ndarray:
    # Gaussian-weighted local stats over every valid window position
    def filt(img: np.ndarray) -> np.ndarray:
        patches = sliding_window_view(img, window.shape)
        return np.tensordot(patches, window, axes=([2, 3], [0, 1]))

    c1 = (SSIM_K1 * SSIM_L) ** 2
    c2 = (SSIM_K2 * SSIM_L) ** 2
    mu_x = filt(x)
    mu_y = filt(y)
    xx = filt(x * x) - mu_x * mu_x
    yy = filt(y * y) - mu_y * mu_y
    xy = filt(x * y) - mu_x * mu_y
    return ((2 * mu_x * mu_y + c1) * (2 * xy + c2)) / (
        (mu_x**2 + mu_y**2 + c1) * (xx + yy + c2)
    )


def ssim(a: FrameSequence, b: FrameSequence) -> float:
    """Single-scale SSIM on luma, mean over all valid window positions and frames."""
    _check_geometry(a, b)
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise MetricError(f"frames smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    window = _gaussian_window()
    lumas_a = a.lumas().astype(np.float64)
    lumas_b = b.lumas().astype(np.float64)
    vals = [
        _ssim_plane(lumas_a[n], lumas_b[n], window).mean() for n in range(a.frame_count)
    ]
    return float(np.mean(vals))


def pearson(xs, ys) -> float:
    """Sample Pearson correlation; errors on constant input."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise MetricError("length mismatch")
    if xs.size < 2:
        raise MetricError("need at least two samples")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sx = np.sqrt(np.sum(dx * dx))
    sy = np.sqrt(np.sum(dy * dy))
    if sx == 0.0 or sy == 0.0:
        raise MetricError("correlation undefined for constant input")
    return float(np.clip(np.sum(dx * dy) / (sx * sy), -1.0, 1.0))


def external_metric(
    tool_command: str,
    ref_path,
    dist_path,
    json_path: str | None = None,
) -> float:
    """Run a metric tool with {ref} and {dist} substituted; parse one scalar.

    With ``json_path`` set (dot-separated keys), the tool's stdout is parsed
    as JSON and the value extracted; otherwise the last stdout line must be a
    float.
    """
    cmd = tool_command.format(ref=str(ref_path), dist=str(dist_path))
    try:
        proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
    except FileNotFoundError as exc:
        raise MetricError(f"tool not found: {exc}") from exc
    if proc.returncode != 0:
        raise MetricError(f"metric tool failed ({proc.returncode}): {proc.stderr}")
    out = proc.stdout.strip()
    try:
        if json_path:
            node = json.loads(out)
            for key in json_path.split("."):
                node = node[int(key)] if isinstance(node, list) else node[key]
            return float(node)
        return float(out.splitlines()[-1])
    except (ValueError, KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
        raise MetricError(f"cannot parse metric output: {out!r}") from exc


def quality_report(reference: FrameSequence, distorted: FrameSequence) -> QualityReport:
    return QualityReport(
        mse=mse(reference, distorted),
        psnr=psnr(reference, distorted),
        ssim=ssim(reference, distorted),
    )
