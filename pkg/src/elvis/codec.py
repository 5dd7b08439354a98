"""Encoders: a lossless null codec for hermetic runs, a subprocess wrapper for
real encoders, and size-matched benchmark generation."""

from __future__ import annotations

import shlex
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

from .media import FrameSequence, load_sequence, write_sequence


class CodecError(RuntimeError):
    pass


@dataclass(frozen=True)
class EncodedArtifact:
    payload_path: Path
    size: int
    codec_id: str
    encode_seconds: float
    quality_param: int | None = None
    size_match_warning: bool = False


def encode_null(seq: FrameSequence, out_dir) -> EncodedArtifact:
    """Lossless PNG-directory 'codec'; size is the sum of member file sizes."""
    if seq.frame_count == 0:
        raise CodecError("empty sequence")
    start = time.monotonic()
    size = write_sequence(seq, out_dir, "png-directory")
    return EncodedArtifact(
        payload_path=Path(out_dir),
        size=size,
        codec_id="null",
        encode_seconds=time.monotonic() - start,
    )


def decode_null(artifact: EncodedArtifact, frame_rate: float = 30.0) -> FrameSequence:
    return load_sequence(artifact.payload_path, "png-directory", frame_rate)


def _run(cmd: str) -> None:
    proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
    if proc.returncode != 0:
        raise CodecError(
            f"command failed ({proc.returncode}): {cmd}\nstdout: {proc.stdout}\nstderr: {proc.stderr}"
        )


def encode_external(
    seq: FrameSequence,
    command_template: str,
    quality_param: int,
    workdir,
    name: str = "external",
) -> EncodedArtifact:
    """Encode through a subprocess; the template exposes {q}, {in}, {out}.

    Input is handed to the tool as a 4:4:4 y4m file.
    """
    wd = Path(workdir)
    wd.mkdir(parents=True, exist_ok=True)
    src = wd / "input.y4m"
    if not src.exists():
        write_sequence(seq, src, "y4m-file")
    out = wd / f"encoded_q{quality_param}.bin"
    cmd = command_template.format(q=quality_param, **{"in": str(src), "out": str(out)})
    start = time.monotonic()
    _run(cmd)
    elapsed = time.monotonic() - start
    if not out.exists():
        raise CodecError(f"encoder produced no output at {out}")
    return EncodedArtifact(
        payload_path=out,
        size=out.stat().st_size,
        codec_id=f"external:{name}",
        encode_seconds=elapsed,
        quality_param=quality_param,
    )


def decode_external(
    artifact: EncodedArtifact,
    decode_template: str,
    workdir,
) -> FrameSequence:
    """Decode back to frames via the paired template with {in}, {out}."""
    wd = Path(workdir)
    wd.mkdir(parents=True, exist_ok=True)
    out = wd / "decoded.y4m"
    cmd = decode_template.format(**{"in": str(artifact.payload_path), "out": str(out)})
    _run(cmd)
    if not out.exists():
        raise CodecError(f"decoder produced no output at {out}")
    return load_sequence(out, "y4m-file")


def match_size_benchmark(
    full_seq: FrameSequence,
    target_bytes: int,
    command_template: str,
    workdir,
    quality_range: tuple[int, int] = (0, 51),
    tolerance: float = 0.05,
    name: str = "external",
) -> EncodedArtifact:
    """Binary-search the integer quality parameter for an encoding whose size
    is within ``tolerance`` of ``target_bytes``; returns the closest probe.

    Assumes size is non-increasing in the quality parameter (higher = smaller),
    per the usual QP convention. Endpoints are probed first.
    """
    if target_bytes <= 0:
        raise CodecError("target size must be positive")
    lo, hi = quality_range
    if lo > hi:
        raise CodecError("empty quality range")
    cache: dict[int, EncodedArtifact] = {}

    def probe(q: int) -> EncodedArtifact:
        if q not in cache:
            cache[q] = encode_external(full_seq, command_template, q, workdir, name)
        return cache[q]

    def miss(a: EncodedArtifact) -> float:
        return abs(a.size - target_bytes) / target_bytes

    best = probe(lo)
    if miss(best) > tolerance:
        cand = probe(hi)
        if miss(cand) < miss(best):
            best = cand
    # size(lo) is the largest achievable, size(hi) the smallest
    if miss(best) > tolerance and cache[hi].size <= target_bytes <= cache[lo].size:
        a, b = lo, hi
        while b - a > 1 and miss(best) > tolerance:
            mid = (a + b) // 2
            cand = probe(mid)
            if miss(cand) < miss(best):
                best = cand
            if cand.size > target_bytes:
                a = mid
            else:
                b = mid
    if miss(best) > tolerance:
        best = EncodedArtifact(
            payload_path=best.payload_path,
            size=best.size,
            codec_id=best.codec_id,
            encode_seconds=best.encode_seconds,
            quality_param=best.quality_param,
            size_match_warning=True,
        )
    return best
