import sys

import numpy as np
import pytest

from elvis import inpaint
from elvis.inpaint import InpaintError, InpaintRequest
from elvis.media import FrameSequence

from conftest import random_sequence, static_sequence


def make_request(seq, block_masks, block=8):
    return InpaintRequest(seq, np.asarray(block_masks, np.uint8), block)


def laplace_oracle(frame_channel, pixel_mask):
    """Dense solve of the discrete Laplace system over masked pixels."""
    h, w = frame_channel.shape
    unknowns = [(y, x) for y in range(h) for x in range(w) if pixel_mask[y, x]]
    index = {p: i for i, p in enumerate(unknowns)}
    n = len(unknowns)
    a = np.zeros((n, n))
    b = np.zeros(n)
    for i, (y, x) in enumerate(unknowns):
        neighbors = [
            (y + dy, x + dx)
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1))
            if 0 <= y + dy < h and 0 <= x + dx < w
        ]
        a[i, i] = len(neighbors)
        for p in neighbors:
            if p in index:
                a[i, index[p]] -= 1.0
            else:
                b[i] += frame_channel[p]
    return unknowns, np.linalg.solve(a, b)


class TestDiffusion:
    def test_constant_surround_fills_constant(self):
        frame = np.full((24, 24, 3), 128, np.uint8)
        frame[8:16, 8:16] = 0
        masks = np.zeros((1, 3, 3), np.uint8)
        masks[0, 1, 1] = 1
        seq = FrameSequence(frame[None])
        out = inpaint.inpaint_diffusion(make_request(seq, masks), tol=1e-6, max_iters=20000)
        assert (out.frames == 128).all()

    def test_matches_dense_laplace_solve(self):
        rng = np.random.default_rng(7)
        frame = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
        masks = np.zeros((1, 4, 4), np.uint8)
        masks[0, 1, 2] = 1
        seq = FrameSequence(frame[None])
        req = make_request(seq, masks)
        out = inpaint.inpaint_diffusion(req, tol=1e-6, max_iters=20000)
        pix = req.pixel_mask(0).astype(bool)
        for ch in range(3):
            unknowns, solution = laplace_oracle(frame[:, :, ch].astype(np.float64), pix)
            got = np.array([out.frames[0, y, x, ch] for y, x in unknowns], dtype=np.float64)
            assert np.abs(got - solution).max() <= 1.0  # 8-bit rounding

    def test_monotone_gradient_between_boundaries(self):
        frame = np.zeros((24, 24, 3), np.uint8)
        frame[:, 16:] = 255
        masks = np.zeros((1, 3, 3), np.uint8)
        masks[0, 1, 1] = 1  # missing block with dark left, bright right
        seq = FrameSequence(frame[None])
        out = inpaint.inpaint_diffusion(make_request(seq, masks), tol=1e-6, max_iters=20000)
        center = out.frames[0, 11, 8:16, 0].astype(int)
        assert (np.diff(center) >= 0).all()
        assert 0 < center[3] < 255

    def test_huge_tol_single_sweep(self):
        frame = np.full((16, 16, 3), 200, np.uint8)
        frame[0:8, 0:8] = 0
        masks = np.zeros((1, 2, 2), np.uint8)
        masks[0, 0, 0] = 1
        seq = FrameSequence(frame[None])
        out = inpaint.inpaint_diffusion(make_request(seq, masks), tol=1e9)
        # one Jacobi sweep from zeros: interior masked pixels stay 0, masked
        # pixels adjacent to known ones get the neighbor mean
        assert out.frames[0, 3, 3, 0] == 0
        assert out.frames[0, 3, 7, 0] == round(200 / 4)

    def test_known_pixels_untouched(self, rng):
        seq = random_sequence(2, 16, 16, seed=81)
        masks = np.zeros((2, 2, 2), np.uint8)
        masks[:, 0, 1] = 1
        req = make_request(seq, masks)
        out = inpaint.inpaint_diffusion(req)
        for n in range(2):
            keep = req.pixel_mask(n) == 0
            assert (out.frames[n][keep] == seq.frames[n][keep]).all()

    def test_sweep_order_independence(self):
        # Jacobi vs a reversed-order Gauss-Seidel-style sweep agree at convergence
        rng = np.random.default_rng(9)
        frame = rng.integers(0, 256, (24, 24), dtype=np.uint8).astype(np.float64)
        mask = np.zeros((24, 24), np.uint8)
        mask[8:16, 8:16] = 1
        tol = 1e-4
        a = frame.copy()
        a[mask != 0] = 0.0
        from elvis._kernels import diffusion_fill_plane

        diffusion_fill_plane(a, mask, tol, 100000)

        b = frame.copy()
        b[mask != 0] = 0.0
        coords = [(y, x) for y in range(24) for x in range(24) if mask[y, x]][::-1]
        for _ in range(100000):
            change = 0.0
            for y, x in coords:
                nb = []
                for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    if 0 <= y + dy < 24 and 0 <= x + dx < 24:
                        nb.append(b[y + dy, x + dx])
                new = sum(nb) / len(nb)
                change = max(change, abs(new - b[y, x]))
                b[y, x] = new
            if change < tol:
                break
        assert np.abs(a - b).max() <= 2 * tol * 255


class TestTemporalCopy:
    def test_nearest_frame_earlier_wins_tie(self):
        frames = np.zeros((3, 8, 8, 3), np.uint8)
        frames[0] = 10
        frames[2] = 30
        seq = FrameSequence(frames)
        masks = np.zeros((3, 1, 1), np.uint8)
        masks[1, 0, 0] = 1  # missing at frame 1, present at 0 and 2
        out = inpaint.inpaint_temporal_copy(make_request(seq, masks))
        assert (out.frames[1] == 10).all()

    def test_static_content_exact(self, rng):
        seq = static_sequence(5, 16, 16, seed=91)
        masks = np.zeros((5, 2, 2), np.uint8)
        for n in range(5):
            masks[n, n % 2, (n + 1) % 2] = 1
        out = inpaint.inpaint_temporal_copy(make_request(seq, masks))
        assert (out.frames == seq.frames).all()

    def test_block_missing_everywhere_falls_back(self):
        seq = static_sequence(3, 16, 16, seed=92)
        masks = np.zeros((3, 2, 2), np.uint8)
        masks[:, 0, 0] = 1  # never present
        out = inpaint.inpaint_temporal_copy(make_request(seq, masks))
        # diffusion fallback engaged: block is filled, not left black
        assert out.frames[0, :8, :8].mean() > 0
        keep = np.kron(masks[0] == 0, np.ones((8, 8), bool))
        assert (out.frames[0][keep] == seq.frames[0][keep]).all()


class TestExternal:
    def _tool(self, tmp_path, body):
        script = tmp_path / "tool.py"
        script.write_text(body)
        return f"{sys.executable} {script} {{frames}} {{masks}} {{out}}"

    COPY_TOOL = """
import shutil, sys, pathlib
frames, masks, out = map(pathlib.Path, sys.argv[1:4])
for p in sorted(frames.glob('*.png')):
    shutil.copy(p, out / p.name)
"""

    def test_identity_tool(self, tmp_path, rng):
        seq = random_sequence(3, 16, 16, seed=93)
        masks = np.zeros((3, 2, 2), np.uint8)
        masks[:, 0, 0] = 1
        cmd = self._tool(tmp_path, self.COPY_TOOL)
        out = inpaint.inpaint_external(make_request(seq, masks), cmd, tmp_path / "work")
        assert (out.frames == seq.frames).all()

    def test_nonzero_exit(self, tmp_path, rng):
        seq = random_sequence(1, 16, 16, seed=94)
        cmd = self._tool(tmp_path, "import sys; sys.exit(3)")
        with pytest.raises(InpaintError, match="exited with 3"):
            inpaint.inpaint_external(
                make_request(seq, np.zeros((1, 2, 2), np.uint8)), cmd, tmp_path / "work"
            )

    def test_wrong_frame_count(self, tmp_path, rng):
        seq = random_sequence(2, 16, 16, seed=95)
        body = self.COPY_TOOL + "\nsorted(out.glob('*.png'))[-1].unlink()\n"
        cmd = self._tool(tmp_path, body)
        with pytest.raises(InpaintError, match="output count mismatch"):
            inpaint.inpaint_external(
                make_request(seq, np.zeros((2, 2, 2), np.uint8)), cmd, tmp_path / "work"
            )

    def test_masks_written_white(self, tmp_path, rng):
        from PIL import Image

        seq = random_sequence(1, 16, 16, seed=96)
        masks = np.zeros((1, 2, 2), np.uint8)
        masks[0, 1, 0] = 1
        cmd = self._tool(tmp_path, self.COPY_TOOL)
        inpaint.inpaint_external(make_request(seq, masks), cmd, tmp_path / "work")
        m = np.asarray(Image.open(tmp_path / "work" / "masks" / "00001.png"))
        assert (m[8:, :8] == 255).all() and m.sum() == 255 * 64


def test_run_inpaint_dispatch(rng):
    seq = static_sequence(2, 16, 16)
    masks = np.zeros((2, 2, 2), np.uint8)
    req = make_request(seq, masks)
    assert (inpaint.run_inpaint(req, "temporal-copy").frames == seq.frames).all()
    assert (inpaint.run_inpaint(req, "diffusion").frames == seq.frames).all()
    with pytest.raises(InpaintError, match="unknown backend"):
        inpaint.run_inpaint(req, "nope")
    with pytest.raises(InpaintError, match="needs tool_command"):
        inpaint.run_inpaint(req, "external")
