import numpy as np
import pytest

from elvis.media import FrameSequence
from elvis.selection import RemovalPlan


def synthetic_sequence(n_frames, height, width, seed=0, frame_rate=30.0) -> FrameSequence:
    """Natural-ish clip: smooth gradient + moving sine pattern + fixed noise."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    base = 60 + 100 * (xx / width) + 40 * (yy / height)
    noise = rng.normal(0, 12, size=(height, width, 3))
    frames = []
    for n in range(n_frames):
        moving = 50 * np.sin(2 * np.pi * (xx + 4 * n) / 48.0) * np.cos(2 * np.pi * yy / 64.0)
        plane = base + moving
        f = np.stack([plane, plane * 0.9 + 10, plane * 0.8 + 20], axis=-1) + noise
        frames.append(np.clip(f, 0, 255).astype(np.uint8))
    return FrameSequence(np.stack(frames), frame_rate)


def random_sequence(n_frames, height, width, seed=0) -> FrameSequence:
    rng = np.random.default_rng(seed)
    return FrameSequence(rng.integers(0, 256, (n_frames, height, width, 3), dtype=np.uint8))


def static_sequence(n_frames, height, width, seed=0) -> FrameSequence:
    rng = np.random.default_rng(seed)
    frame = rng.integers(0, 256, (height, width, 3), dtype=np.uint8)
    return FrameSequence(np.repeat(frame[None], n_frames, axis=0))


def random_plan(rng, block_rows, block_cols, k, n_frames) -> RemovalPlan:
    removed = tuple(
        tuple(
            tuple(sorted(rng.choice(block_cols, size=k, replace=False).tolist()))
            for _ in range(block_rows)
        )
        for _ in range(n_frames)
    )
    return RemovalPlan(
        removed=removed,
        block_rows=block_rows,
        block_cols=block_cols,
        frame_count=n_frames,
        removed_fraction=k / block_cols if block_cols else 0.0,
        k=k,
    )


def write_rotating_masks(path, n_frames, height, width, block, k):
    """Foreground masks leaving exactly k block-columns unmasked per frame,
    rotating so every column is protected (and thus transmitted) somewhere."""
    from PIL import Image

    path.mkdir(parents=True, exist_ok=True)
    bj = width // block
    for n in range(n_frames):
        unmasked = {(k * n + t) % bj for t in range(k)}
        mask = np.full((height, width), 255, np.uint8)
        for j in unmasked:
            mask[:, j * block : (j + 1) * block] = 0
        Image.fromarray(mask, mode="L").save(path / f"{n + 1:05d}.png")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
