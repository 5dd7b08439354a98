"""Frame sequence I/O: PNG directories and y4m files, block alignment, scene splitting."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from PIL import Image

PNG_PATTERN = "%05d.png"
DEFAULT_FRAME_RATE = 30.0
DEFAULT_SCENE_THRESHOLD = 30.0

# BT.601 integer-domain luma weights
_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)


class MediaError(ValueError):
    pass


def luma_plane(pixels: np.ndarray) -> np.ndarray:
    """Rounded BT.601 luma of an (H, W, 3) uint8 array, as uint8."""
    y = np.rint(pixels.astype(np.float64) @ _LUMA_WEIGHTS)
    return np.clip(y, 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class FrameSequence:
    """Ordered uint8 frames of identical geometry.

    ``frames`` has shape (N, H, W, 3). ``original_width/height`` track the
    pre-padding geometry so stretched output can be cropped back.
    """

    frames: np.ndarray
    frame_rate: float = DEFAULT_FRAME_RATE
    original_width: int = 0
    original_height: int = 0

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.uint8)
        if f.ndim != 4 or f.shape[-1] != 3:
            raise MediaError(f"expected (N, H, W, 3) frames, got shape {f.shape}")
        if f.shape[1] == 0 or f.shape[2] == 0:
            raise MediaError("zero-sized frames")
        f.setflags(write=False)
        object.__setattr__(self, "frames", f)
        if self.original_width == 0:
            object.__setattr__(self, "original_width", f.shape[2])
        if self.original_height == 0:
            object.__setattr__(self, "original_height", f.shape[1])

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def lumas(self) -> np.ndarray:
        """(N, H, W) uint8 luma planes."""
        return luma_plane(self.frames)

    def with_frames(self, frames: np.ndarray) -> "FrameSequence":
        return FrameSequence(frames, self.frame_rate, self.original_width, self.original_height)


def _load_png_directory(path: Path) -> np.ndarray:
    files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise MediaError(f"no PNG frames in {path}")
    frames = []
    for p in files:
        arr = np.asarray(Image.open(p).convert("RGB"), dtype=np.uint8)
        if frames and arr.shape != frames[0].shape:
            raise MediaError(
                f"inconsistent dimensions: {p.name} is {arr.shape[1]}x{arr.shape[0]}, "
                f"expected {frames[0].shape[1]}x{frames[0].shape[0]}"
            )
        frames.append(arr)
    return np.stack(frames)


_Y4M_RATE = re.compile(r"^(\d+):(\d+)$")


def _parse_y4m_header(line: bytes) -> dict:
    parts = line.decode("ascii", "replace").strip().split(" ")
    if parts[0] != "YUV4MPEG2":
        raise MediaError("not a YUV4MPEG2 stream")
    params: dict = {"colorspace": "C420"}
    for tok in parts[1:]:
        if not tok:
            continue
        key, val = tok[0], tok[1:]
        if key == "W":
            params["width"] = int(val)
        elif key == "H":
            params["height"] = int(val)
        elif key == "F":
            m = _Y4M_RATE.match(val)
            if not m:
                raise MediaError(f"bad frame rate token {tok!r}")
            params["rate"] = int(m.group(1)) / int(m.group(2))
        elif key == "C":
            params["colorspace"] = "C" + val
    if "width" not in params or "height" not in params:
        raise MediaError("y4m header missing geometry")
    return params


def _load_y4m(path: Path) -> tuple[np.ndarray, float]:
    data = path.read_bytes()
    eol = data.find(b"\n")
    if eol < 0:
        raise MediaError("truncated y4m header")
    params = _parse_y4m_header(data[:eol])
    w, h = params["width"], params["height"]
    rate = params.get("rate", DEFAULT_FRAME_RATE)
    cs = params["colorspace"]
    if cs.startswith("C444"):
        subsampled = False
    elif cs.startswith("C420"):
        subsampled = True
    else:
        raise MediaError(f"unsupported y4m colorspace {cs}")
    if "p10" in cs or "p12" in cs or "p16" in cs:
        raise MediaError(f"unsupported bit depth in colorspace {cs}")

    frames = []
    pos = eol + 1
    y_size = w * h
    c_size = (w // 2) * (h // 2) if subsampled else y_size
    frame_size = y_size + 2 * c_size
    while pos < len(data):
        feol = data.find(b"\n", pos)
        if feol < 0 or not data[pos:feol].startswith(b"FRAME"):
            raise MediaError("malformed y4m FRAME marker")
        start = feol + 1
        if start + frame_size > len(data):
            raise MediaError("truncated y4m frame payload")
        raw = np.frombuffer(data[start : start + frame_size], dtype=np.uint8)
        y = raw[:y_size].reshape(h, w)
        if subsampled:
            ch, cw = h // 2, w // 2
            cb = raw[y_size : y_size + c_size].reshape(ch, cw)
            cr = raw[y_size + c_size :].reshape(ch, cw)
            # chroma replication up to 4:4:4
            cb = np.repeat(np.repeat(cb, 2, axis=0), 2, axis=1)[:h, :w]
            cr = np.repeat(np.repeat(cr, 2, axis=0), 2, axis=1)[:h, :w]
        else:
            cb = raw[y_size : y_size + c_size].reshape(h, w)
            cr = raw[y_size + c_size :].reshape(h, w)
        frames.append(np.stack([y, cb, cr], axis=-1))
        pos = start + frame_size
    if not frames:
        raise MediaError(f"no frames in {path}")
    return np.stack(frames), rate


def load_sequence(path, kind: str, frame_rate: float = DEFAULT_FRAME_RATE) -> FrameSequence:
    """Load a frame sequence from a PNG directory or a y4m file.

    y4m planes are kept as the three channels verbatim (no color conversion),
    so write-then-load round trips are bit exact. 4:2:0 chroma is upsampled
    by replication.
    """
    p = Path(path)
    if not p.exists():
        raise MediaError(f"path does not exist: {p}")
    if kind == "png-directory":
        return FrameSequence(_load_png_directory(p), frame_rate)
    if kind == "y4m-file":
        frames, rate = _load_y4m(p)
        return FrameSequence(frames, rate)
    raise MediaError(f"unknown sequence kind {kind!r}")


def write_sequence(seq: FrameSequence, path, kind: str) -> int:
    """Write a sequence losslessly; returns total bytes on disk."""
    if seq.frame_count == 0:
        raise MediaError("no frames")
    p = Path(path)
    if kind == "png-directory":
        p.mkdir(parents=True, exist_ok=True)
        total = 0
        for n in range(seq.frame_count):
            out = p / (PNG_PATTERN % (n + 1))
            Image.fromarray(seq.frames[n]).save(out, format="PNG")
            total += out.stat().st_size
        return total
    if kind == "y4m-file":
        rate = Fraction(seq.frame_rate).limit_denominator(1001)
        header = f"YUV4MPEG2 W{seq.width} H{seq.height} F{rate.numerator}:{rate.denominator} Ip A1:1 C444\n"
        with open(p, "wb") as fh:
            fh.write(header.encode("ascii"))
            for n in range(seq.frame_count):
                fh.write(b"FRAME\n")
                for ch in range(3):
                    fh.write(np.ascontiguousarray(seq.frames[n, :, :, ch]).tobytes())
        return p.stat().st_size
    raise MediaError(f"unknown sequence kind {kind!r}")


ALLOWED_BLOCK_SIZES = (8, 16, 32, 64)


def align_to_blocks(seq: FrameSequence, block_size: int) -> FrameSequence:
    """Pad right/bottom by edge replication so both dims divide block_size."""
    if block_size not in ALLOWED_BLOCK_SIZES:
        raise MediaError(f"block size must be one of {ALLOWED_BLOCK_SIZES}, got {block_size}")
    pad_h = -seq.height % block_size
    pad_w = -seq.width % block_size
    if pad_h == 0 and pad_w == 0:
        return seq
    frames = np.pad(seq.frames, ((0, 0), (0, pad_h), (0, pad_w), (0, 0)), mode="edge")
    return FrameSequence(frames, seq.frame_rate, seq.original_width, seq.original_height)


def split_scenes(seq: FrameSequence, threshold: float = DEFAULT_SCENE_THRESHOLD) -> list[FrameSequence]:
    """Cut between frames whose mean absolute luma difference exceeds threshold."""
    if threshold < 0:
        raise MediaError("threshold must be >= 0")
    lumas = seq.lumas().astype(np.int16)
    cuts = [0]
    for n in range(seq.frame_count - 1):
        diff = np.abs(lumas[n] - lumas[n + 1]).mean()
        if diff > threshold:
            cuts.append(n + 1)
    cuts.append(seq.frame_count)
    return [seq.with_frames(seq.frames[a:b]) for a, b in zip(cuts, cuts[1:])]
