import numpy as np
import pytest

from pedscan.hog import (HogConfig, cell_histograms, descriptors_for_patches,
                         descriptors_for_windows, get_lut, gradients,
                         level_block_grid, lut_build, split_votes,
                         window_descriptor, window_descriptor_direct)
from pedscan.images import Rect

CFG = HogConfig()


class TestLut:
    def test_zero_gradient_votes_nothing(self):
        lut = get_lut(CFG)
        assert lut.w0[255, 255] == 0.0 and lut.w1[255, 255] == 0.0

    def test_horizontal_gradient_splits_between_wrap_bins(self):
        # (dx, dy) = (255, 0): angle 0, continuous coordinate -0.5,
        # so bin0 = 8, bin1 = 0, and the 255 magnitude splits evenly.
        lut = get_lut(CFG)
        i, j = 255 + 255, 0 + 255
        assert lut.bin0[i, j] == 8 and lut.bin1[i, j] == 0
        assert lut.w0[i, j] == pytest.approx(127.5) == lut.w1[i, j]

    def test_vertical_gradient_hits_bin_center(self):
        # (dx, dy) = (0, 255): angle 90, exactly the center of bin 4.
        lut = get_lut(CFG)
        i, j = 255, 255 + 255
        assert lut.bin0[i, j] == 4
        assert lut.w0[i, j] == pytest.approx(255.0)
        assert lut.w1[i, j] == pytest.approx(0.0)

    def test_table_invariants(self):
        lut = lut_build(CFG)
        assert lut.w0.shape == (511, 511)
        mags = np.hypot(np.arange(-255, 256)[:, None], np.arange(-255, 256)[None, :])
        assert np.abs(lut.w0 + lut.w1 - mags).max() <= 1e-9
        assert np.all(lut.bin1 == (lut.bin0 + 1) % 9)
        assert np.all(lut.w0 >= 0) and np.all(lut.w1 >= 0)

    def test_unsigned_orientation_symmetry(self):
        rng = np.random.default_rng(0)
        dx = rng.integers(-255, 256, size=200)
        dy = rng.integers(-255, 256, size=200)
        b0a, b1a, w0a, w1a = split_votes(dx, dy)
        b0b, b1b, w0b, w1b = split_votes(-dx, -dy)
        assert np.array_equal(b0a, b0b) and np.array_equal(b1a, b1b)
        assert np.allclose(w0a, w0b) and np.allclose(w1a, w1b)


class TestGradients:
    def test_constant_image(self):
        img = np.full((8, 8), 50, dtype=np.uint8)
        assert gradients(img, 3, 3) == (0, 0)
        assert gradients(img, 0, 0) == (0, 0)

    def test_vertical_step_edge(self):
        img = np.zeros((4, 6), dtype=np.uint8)
        img[:, 3:] = 255
        # boundary column: left neighbor 0, right neighbor 255
        assert gradients(img, 2, 1) == (255, 0)
        assert gradients(img, 3, 1) == (255, 0)

    def test_rotated_step_edge(self):
        img = np.zeros((6, 4), dtype=np.uint8)
        img[3:, :] = 255
        assert gradients(img, 1, 2) == (0, 255)


class TestWindowDescriptor:
    def test_constant_window_is_zero(self):
        img = np.full((64, 32), 190, dtype=np.uint8)
        d = window_descriptor(img, Rect(0, 0, 32, 64))
        assert d.shape == (756,)
        assert np.all(d == 0.0)

    def test_descriptor_length_is_756(self):
        assert CFG.descriptor_length == 3 * 7 * 4 * 9 == 756

    def test_lut_matches_direct_on_random_windows(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            img = rng.integers(0, 256, size=(64, 32), dtype=np.uint8)
            a = window_descriptor(img, Rect(0, 0, 32, 64))
            b = window_descriptor_direct(img, Rect(0, 0, 32, 64))
            assert np.abs(a - b).max() <= 1e-6

    def test_block_norms_at_most_one(self):
        rng = np.random.default_rng(2)
        img = rng.integers(0, 256, size=(64, 32), dtype=np.uint8)
        d = window_descriptor_direct(img, Rect(0, 0, 32, 64))
        norms = np.sqrt((d.reshape(21, 36) ** 2).sum(axis=1))
        assert norms.max() <= 1.0 + 1e-6
        assert np.all(d >= 0)

    def test_vote_conservation_before_normalization(self):
        rng = np.random.default_rng(3)
        patch = rng.integers(0, 256, size=(1, 64, 32), dtype=np.uint8)
        hist = cell_histograms(patch, CFG)
        padded = np.pad(patch[0], 1, mode="edge").astype(np.int16)
        dx = padded[1:-1, 2:] - padded[1:-1, :-2]
        dy = padded[2:, 1:-1] - padded[:-2, 1:-1]
        total_mag = np.hypot(dx, dy).sum()
        assert hist.sum() == pytest.approx(total_mag, rel=1e-6)

    def test_out_of_bounds_window(self):
        img = np.zeros((70, 40), dtype=np.uint8)
        with pytest.raises(ValueError):
            window_descriptor(img, Rect(10, 10, 32, 64))
        with pytest.raises(ValueError):
            window_descriptor(img, Rect(0, 0, 16, 16))

    def test_interior_window_uses_host_context(self):
        # a window inside a larger image sees its true neighbors, so its
        # descriptor matches the crop extended by one pixel of context
        rng = np.random.default_rng(4)
        img = rng.integers(0, 256, size=(100, 80), dtype=np.uint8)
        r = Rect(17, 23, 32, 64)
        d_inplace = window_descriptor(img, r)
        crop = img[r.y:r.y + r.h, r.x:r.x + r.w]
        d_standalone = window_descriptor(crop, Rect(0, 0, 32, 64))
        assert not np.array_equal(d_inplace, d_standalone)  # borders differ
        stack = np.asarray([crop])
        assert np.array_equal(descriptors_for_patches(stack, CFG)[0], d_standalone)


class TestSharedGrid:
    def test_level_grid_reproduces_window_descriptors_exactly(self):
        rng = np.random.default_rng(5)
        level = rng.integers(0, 256, size=(160, 120), dtype=np.uint8)
        grid = level_block_grid(level, CFG)
        for x, y in [(0, 0), (8, 16), (64, 88), (88, 96)]:
            want = window_descriptor(level, Rect(x, y, 32, 64))
            cy, cx = y // CFG.cell, x // CFG.cell
            got = np.concatenate([grid[cy + by, cx + bx]
                                  for by in range(CFG.blocks_y)
                                  for bx in range(CFG.blocks_x)])
            assert np.array_equal(want, got)

    def test_descriptors_for_windows_matches_single_calls(self):
        rng = np.random.default_rng(6)
        img = rng.integers(0, 256, size=(128, 96), dtype=np.uint8)
        rects = [Rect(0, 0, 32, 64), Rect(5, 9, 32, 64), Rect(64, 64, 32, 64)]
        batch = descriptors_for_windows(img, rects, CFG)
        for k, r in enumerate(rects):
            assert np.array_equal(batch[k], window_descriptor(img, r))


def test_config_validation():
    with pytest.raises(ValueError):
        HogConfig(window_w=30)
    with pytest.raises(ValueError):
        HogConfig(block_stride=6)
    with pytest.raises(ValueError):
        HogConfig(n_bins=1)
