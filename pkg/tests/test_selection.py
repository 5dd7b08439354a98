import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elvis import selection
from elvis.analysis import ComplexityTensors, SaliencyMask
from elvis.selection import SelectionError


def make_tensors(s, t, block_size=16):
    return ComplexityTensors(S=np.asarray(s, float), T=np.asarray(t, float), block_size=block_size)


def random_tensors(rng, bi, bj, n):
    return make_tensors(rng.uniform(0, 1, (bi, bj, n)), rng.uniform(0, 1, (bi, bj, n)))


class TestImportance:
    def test_alpha_one_is_spatial(self, rng):
        s, t = rng.uniform(0, 1, (3, 4)), rng.uniform(0, 1, (3, 4))
        np.testing.assert_array_equal(selection.importance(s, t, 1.0, False), s)

    def test_alpha_zero_is_temporal(self, rng):
        s, t = rng.uniform(0, 1, (3, 4)), rng.uniform(0, 1, (3, 4))
        np.testing.assert_array_equal(selection.importance(s, t, 0.0, False), t)

    def test_blend_arithmetic(self):
        s = np.array([[0.8]])
        t = np.array([[0.4]])
        assert selection.importance(s, t, 0.25, False)[0, 0] == pytest.approx(0.5)

    def test_last_frame_rule(self, rng):
        s, t = rng.uniform(0, 1, (3, 4)), rng.uniform(0, 1, (3, 4))
        np.testing.assert_array_equal(selection.importance(s, t, 0.25, True), s)

    def test_shape_mismatch(self):
        with pytest.raises(SelectionError):
            selection.importance(np.zeros((2, 2)), np.zeros((2, 3)), 0.5, False)


class TestApplySaliency:
    def test_no_mask_unchanged(self, rng):
        c = rng.uniform(-1, 1, (3, 4))
        np.testing.assert_array_equal(selection.apply_saliency(c, np.zeros((3, 4))), c)

    def test_masked_negated(self):
        c = np.array([[0.6]])
        m = np.array([[1]])
        assert selection.apply_saliency(c, m)[0, 0] == -0.6

    def test_zero_fixed_point(self):
        assert selection.apply_saliency(np.array([[0.0]]), np.array([[1]]))[0, 0] == 0.0


class TestSmoothRow:
    def test_beta_one_identity(self, rng):
        row = rng.uniform(0, 1, 5)
        np.testing.assert_array_equal(selection.smooth_row(row, rng.uniform(0, 1, 5), 1.0), row)

    def test_beta_zero_previous(self, rng):
        prev = rng.uniform(0, 1, 5)
        np.testing.assert_array_equal(selection.smooth_row(rng.uniform(0, 1, 5), prev, 0.0), prev)

    def test_half_blend(self):
        out = selection.smooth_row(np.array([0.2, 0.4]), np.array([0.6, 0.0]), 0.5)
        np.testing.assert_allclose(out, [0.4, 0.2])

    def test_absent_previous(self):
        row = np.array([0.1, 0.2])
        np.testing.assert_array_equal(selection.smooth_row(row, None, 0.3), row)

    def test_length_mismatch(self):
        with pytest.raises(SelectionError):
            selection.smooth_row(np.zeros(3), np.zeros(4), 0.5)


class TestSelectBlocks:
    def test_r_zero_empty(self, rng):
        tensors = random_tensors(rng, 2, 4, 3)
        plan = selection.select_blocks(tensors, SaliencyMask.empty((2, 4, 3)), 0.5, 0.5, 0.0)
        assert all(cols == () for frame in plan.removed for cols in frame)

    def test_single_frame_top_two(self):
        s = np.array([0.9, 0.1, 0.5, 0.3]).reshape(1, 4, 1)
        tensors = make_tensors(s, np.zeros_like(s))
        plan = selection.select_blocks(tensors, SaliencyMask.empty(s.shape), 0.5, 1.0, 0.5)
        assert plan.row(0, 0) == (0, 2)

    def test_masked_column_inverted(self):
        s = np.array([0.9, 0.1, 0.5, 0.3]).reshape(1, 4, 1)
        m = np.zeros(s.shape, np.uint8)
        m[0, 0, 0] = 1
        tensors = make_tensors(s, np.zeros_like(s))
        plan = selection.select_blocks(tensors, SaliencyMask(m, "file"), 0.5, 1.0, 0.5)
        # post-inversion values [-0.9, 0.1, 0.5, 0.3]: top-2 are columns 2, 3
        assert plan.row(0, 0) == (2, 3)

    def test_count_invariant(self, rng):
        for _ in range(10):
            bi, bj, n = rng.integers(1, 5), rng.integers(1, 9), rng.integers(1, 6)
            r = float(rng.uniform(0, 1))
            tensors = random_tensors(rng, bi, bj, n)
            plan = selection.select_blocks(tensors, SaliencyMask.empty((bi, bj, n)), 0.5, 0.5, r)
            k = math.floor(r * bj)
            assert plan.k == k
            for frame in plan.removed:
                for cols in frame:
                    assert len(cols) == k and len(set(cols)) == k
                    assert all(0 <= j < bj for j in cols)

    def test_positive_scale_invariance(self, rng):
        tensors = random_tensors(rng, 3, 6, 4)
        mask = SaliencyMask((rng.uniform(0, 1, (3, 6, 4)) > 0.7).astype(np.uint8), "file")
        base = selection.select_blocks(tensors, mask, 0.3, 0.6, 0.5)
        for c in (0.1, 0.5, 1.0):
            scaled = make_tensors(tensors.S * c, tensors.T * c)
            plan = selection.select_blocks(scaled, mask, 0.3, 0.6, 0.5)
            assert plan.removed == base.removed

    def test_beta_one_ignores_earlier_frames(self, rng):
        tensors = random_tensors(rng, 2, 6, 5)
        mask = SaliencyMask.empty((2, 6, 5))
        plan = selection.select_blocks(tensors, mask, 0.4, 1.0, 0.5)
        # permute earlier frames' values; frame 3 plan must not change
        s2, t2 = tensors.S.copy(), tensors.T.copy()
        perm = [1, 0, 2]
        s2[:, :, :3] = s2[:, :, perm]
        t2[:, :, :3] = t2[:, :, perm]
        plan2 = selection.select_blocks(make_tensors(s2, t2), mask, 0.4, 1.0, 0.5)
        assert plan2.removed[3] == plan.removed[3]
        assert plan2.removed[4] == plan.removed[4]

    def test_foreground_protection(self, rng):
        bi, bj, n = 2, 8, 3
        s = rng.uniform(0.1, 1.0, (bi, bj, n))  # strictly positive
        t = rng.uniform(0.1, 1.0, (bi, bj, n))
        m = np.zeros((bi, bj, n), np.uint8)
        m[:, :3, :] = 1  # 5 unmasked >= k=4
        plan = selection.select_blocks(make_tensors(s, t), SaliencyMask(m, "file"), 0.5, 0.5, 0.5)
        for frame in plan.removed:
            for cols in frame:
                assert all(j >= 3 for j in cols)

    def test_smoothing_reads_previous_inverted_unsmoothed(self):
        # two frames, one row; frame 1 smoothing must read frame 0's
        # post-inversion values, not its smoothed ones
        s = np.zeros((1, 2, 2))
        t = np.zeros((1, 2, 2))
        s[0, :, 0] = [0.8, 0.2]
        s[0, :, 1] = [0.1, 0.2]  # frame 1 is last -> C = S
        m = np.zeros((1, 2, 2), np.uint8)
        m[0, 0, 0] = 1  # frame 0 col 0 inverted: C0 = [-0.8, 0.2]
        plan = selection.select_blocks(make_tensors(s, t), SaliencyMask(m, "file"), 1.0, 0.5, 0.5)
        # frame 1 row: 0.5*[0.1,0.2] + 0.5*[-0.8,0.2] = [-0.35, 0.2] -> top-1 is col 1
        assert plan.row(1, 0) == (1,)

    def test_tie_break_smaller_column(self):
        s = np.full((1, 4, 1), 0.5)
        tensors = make_tensors(s, np.zeros_like(s))
        plan = selection.select_blocks(tensors, SaliencyMask.empty(s.shape), 1.0, 1.0, 0.5)
        assert plan.row(0, 0) == (0, 1)

    def test_determinism(self, rng):
        tensors = random_tensors(rng, 3, 5, 4)
        mask = SaliencyMask.empty((3, 5, 4))
        a = selection.select_blocks(tensors, mask, 0.5, 0.5, 0.4)
        b = selection.select_blocks(tensors, mask, 0.5, 0.5, 0.4)
        assert a == b

    def test_r_out_of_range(self, rng):
        tensors = random_tensors(rng, 1, 2, 1)
        with pytest.raises(SelectionError):
            selection.select_blocks(tensors, SaliencyMask.empty((1, 2, 1)), 0.5, 0.5, 1.5)

    def test_geometry_mismatch(self, rng):
        tensors = random_tensors(rng, 2, 2, 2)
        with pytest.raises(SelectionError):
            selection.select_blocks(tensors, SaliencyMask.empty((2, 3, 2)), 0.5, 0.5, 0.5)


@settings(max_examples=50, deadline=None)
@given(
    bi=st.integers(1, 4),
    bj=st.integers(1, 8),
    n=st.integers(1, 4),
    r=st.floats(0, 1),
    alpha=st.floats(0, 1),
    beta=st.floats(0, 1),
    seed=st.integers(0, 2**16),
)
def test_plan_count_property(bi, bj, n, r, alpha, beta, seed):
    rng = np.random.default_rng(seed)
    tensors = random_tensors(rng, bi, bj, n)
    plan = selection.select_blocks(tensors, SaliencyMask.empty((bi, bj, n)), alpha, beta, r)
    k = math.floor(r * bj)
    assert all(len(cols) == k for frame in plan.removed for cols in frame)


def test_export_plan_csv(tmp_path, rng):
    tensors = random_tensors(rng, 2, 4, 2)
    plan = selection.select_blocks(tensors, SaliencyMask.empty((2, 4, 2)), 0.5, 0.5, 0.5)
    out = tmp_path / "plan.csv"
    selection.export_plan_csv(plan, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "frame,row,cols"
    assert len(lines) == 1 + 2 * 2
    frame, row, cols = lines[1].split(",")
    assert cols.count(";") == plan.k - 1
