"""Wire format for the removal mask: 17-byte header plus a DEFLATE-compressed
bit-packed mask tensor. File extension ``.elvs``."""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .selection import RemovalPlan

MAGIC = b"ELVS"
VERSION = 1
_HEADER = struct.Struct(">4sBHHHIH")  # magic, version, width, height, block, frames, k
HEADER_SIZE = _HEADER.size  # 17


class SidecarError(ValueError):
    pass


@dataclass(frozen=True)
class SidecarGeometry:
    original_width: int
    original_height: int
    block_size: int

    @property
    def block_cols(self) -> int:
        return math.ceil(self.original_width / self.block_size)

    @property
    def block_rows(self) -> int:
        return math.ceil(self.original_height / self.block_size)


def encode_sidecar(plan: RemovalPlan, geometry: SidecarGeometry) -> bytes:
    """Serialize a plan: header, then zlib-compressed rows of J bits, each row
    padded to a byte boundary, rows concatenated per frame, frames in order."""
    if geometry.block_rows != plan.block_rows or geometry.block_cols != plan.block_cols:
        raise SidecarError(
            f"geometry grid {geometry.block_rows}x{geometry.block_cols} does not match "
            f"plan {plan.block_rows}x{plan.block_cols}"
        )
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        geometry.original_width,
        geometry.original_height,
        geometry.block_size,
        plan.frame_count,
        plan.k,
    )
    rows = np.zeros((plan.frame_count * plan.block_rows, plan.block_cols), dtype=np.uint8)
    for n in range(plan.frame_count):
        for i, cols in enumerate(plan.removed[n]):
            if len(cols) != plan.k:
                raise SidecarError(f"row ({n},{i}) removes {len(cols)} blocks, expected {plan.k}")
            rows[n * plan.block_rows + i, list(cols)] = 1
    packed = np.packbits(rows, axis=1)  # per-row byte padding
    return header + zlib.compress(packed.tobytes(), 9)


def decode_sidecar(data: bytes) -> tuple[RemovalPlan, SidecarGeometry]:
    """Exact inverse of encode_sidecar; validates magic, payload length, and
    per-row popcounts."""
    if len(data) < HEADER_SIZE:
        raise SidecarError("truncated: shorter than header")
    magic, version, width, height, block, frames, k = _HEADER.unpack(data[:HEADER_SIZE])
    if magic != MAGIC:
        raise SidecarError("bad magic")
    if version != VERSION:
        raise SidecarError(f"unsupported version {version}")
    geometry = SidecarGeometry(width, height, block)
    bi, bj = geometry.block_rows, geometry.block_cols
    try:
        payload = zlib.decompress(data[HEADER_SIZE:])
    except zlib.error as exc:
        raise SidecarError(f"truncated or corrupt payload: {exc}") from exc
    row_bytes = (bj + 7) // 8
    expected = frames * bi * row_bytes
    if len(payload) != expected:
        raise SidecarError(f"payload is {len(payload)} bytes, expected {expected}")
    packed = np.frombuffer(payload, dtype=np.uint8).reshape(frames * bi, row_bytes)
    bits = np.unpackbits(packed, axis=1)[:, :bj]
    if not (bits.sum(axis=1) == k).all():
        raise SidecarError("row popcount does not match k (corrupt mask)")
    removed = tuple(
        tuple(
            tuple(int(j) for j in np.flatnonzero(bits[n * bi + i]))
            for i in range(bi)
        )
        for n in range(frames)
    )
    plan = RemovalPlan(
        removed=removed,
        block_rows=bi,
        block_cols=bj,
        frame_count=frames,
        removed_fraction=k / bj if bj else 0.0,
        k=k,
    )
    return plan, geometry


def sidecar_overhead(sidecar_bytes: int, encoded_video_bytes: int) -> float:
    if encoded_video_bytes <= 0:
        raise SidecarError("encoded video size must be positive")
    return sidecar_bytes / encoded_video_bytes
