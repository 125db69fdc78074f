import numpy as np
import pytest

from pedscan.detector import (DetectConfig, Detection, DetectStats, detect,
                              format_detection_line, map_to_original, nms,
                              pyramid_build, scan, window_grid)
from pedscan.estimators import HogSvmDetector
from pedscan.hog import window_descriptor
from pedscan.images import Rect

from conftest import scene_with_patch


class StubModel:
    """Scores every window with a constant; geometry-only tests."""

    window_w, window_h = 32, 64

    def __init__(self, value=1.0):
        self.value = value

    def score_level_windows(self, level, step=8):
        cfg = DetectConfig(step=step)
        xs, ys = window_grid(level.shape[1], level.shape[0], cfg)
        return np.full((len(ys), len(xs)), self.value)


def rasterized_iou(a: Rect, b: Rect) -> float:
    """Oracle: paint both rects on a grid and count cells."""
    w = max(a.x + a.w, b.x + b.w) + 1
    h = max(a.y + a.h, b.y + b.h) + 1
    ga = np.zeros((h, w), dtype=bool)
    gb = np.zeros((h, w), dtype=bool)
    ga[a.y:a.y + a.h, a.x:a.x + a.w] = True
    gb[b.y:b.y + b.h, b.x:b.x + b.w] = True
    inter = np.sum(ga & gb)
    union = np.sum(ga | gb)
    return inter / union


class TestPyramid:
    def test_window_sized_image_has_one_level(self):
        img = np.zeros((64, 32), dtype=np.uint8)
        assert len(pyramid_build(img, DetectConfig())) == 1

    def test_factor_two_halving(self):
        img = np.zeros((256, 128), dtype=np.uint8)
        levels = pyramid_build(img, DetectConfig(scale_factor=2.0))
        assert [lv.shape[1] for lv, _ in levels] == [128, 64, 32]
        assert [s for _, s in levels] == [1.0, 2.0, 4.0]

    def test_level_count_matches_recurrence(self):
        img = np.zeros((480, 640), dtype=np.uint8)
        cfg = DetectConfig(scale_factor=1.2)
        levels = pyramid_build(img, cfg)
        # oracle: iterate the scaling recurrence
        expected = 0
        k = 0
        while round(640 / 1.2 ** k) >= 32 and round(480 / 1.2 ** k) >= 64:
            expected += 1
            k += 1
        assert len(levels) == expected
        dims = [(lv.shape[1], lv.shape[0]) for lv, _ in levels]
        assert all(a > b for a, b in zip(dims, dims[1:]))  # strictly shrinking

    def test_max_levels_cap(self):
        img = np.zeros((256, 128), dtype=np.uint8)
        levels = pyramid_build(img, DetectConfig(scale_factor=2.0, max_levels=2))
        assert len(levels) == 2

    def test_too_small_image(self):
        with pytest.raises(ValueError):
            pyramid_build(np.zeros((63, 32), dtype=np.uint8), DetectConfig())


class TestScan:
    def test_window_sized_level_single_window(self):
        level = np.zeros((64, 32), dtype=np.uint8)
        hits = scan(level, StubModel(2.0), step=8, threshold=0.0)
        assert hits == [(Rect(0, 0, 32, 64), 2.0)]

    def test_infinite_threshold(self):
        level = np.zeros((128, 64), dtype=np.uint8)
        assert scan(level, StubModel(5.0), threshold=np.inf) == []

    def test_window_count_formula(self):
        level = np.zeros((128, 64), dtype=np.uint8)
        hits = scan(level, StubModel(1.0), step=32, threshold=0.0)
        assert len(hits) == 2 * 3  # floor((64-32)/32)+1 times floor((128-64)/32)+1

    def test_row_major_order(self):
        level = np.zeros((80, 48), dtype=np.uint8)
        hits = scan(level, StubModel(1.0), step=8)
        coords = [(r.y, r.x) for r, _ in hits]
        assert coords == sorted(coords)


class TestMapToOriginal:
    def test_identity_at_unit_scale(self):
        r = Rect(3, 4, 32, 64)
        assert map_to_original(r, 1.0, (100, 100)) == r

    def test_exact_doubling(self):
        assert map_to_original(Rect(10, 10, 32, 64), 2.0, (640, 480)) == \
            Rect(20, 20, 64, 128)

    def test_clamped_into_bounds_randomized(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            r = Rect(int(rng.integers(0, 200)), int(rng.integers(0, 200)), 32, 64)
            scale = float(rng.uniform(1.0, 4.0))
            ow, oh = int(rng.integers(64, 400)), int(rng.integers(128, 400))
            m = map_to_original(r, scale, (ow, oh))
            assert 0 <= m.x < ow and 0 <= m.y < oh
            assert m.w >= 1 and m.h >= 1
            assert m.x + m.w <= ow and m.y + m.h <= oh


class TestNms:
    def test_single_detection_unchanged(self):
        d = Detection(Rect(0, 0, 10, 10), 1.0, 0)
        assert nms([d]) == [d]

    def test_identical_rects_keep_higher_score(self):
        a = Detection(Rect(5, 5, 10, 10), 2.0, 0)
        b = Detection(Rect(5, 5, 10, 10), 1.0, 0)
        assert nms([b, a]) == [a]

    def test_three_box_survivors_match_oracle(self):
        # A and B overlap below threshold, C overlaps A above it
        a = Detection(Rect(0, 0, 10, 10), 3.0, 0)
        b = Detection(Rect(5, 0, 10, 10), 2.0, 0)
        c = Detection(Rect(2, 0, 10, 10), 1.0, 0)
        assert rasterized_iou(a.rect, b.rect) == pytest.approx(50 / 150)
        assert rasterized_iou(a.rect, c.rect) == pytest.approx(80 / 120)
        kept = nms([c, b, a], overlap_thresh=0.5)
        assert kept == [a, b]
        # oracle: survivors form an antichain and every suppressed box
        # overlaps a kept one of higher-or-equal score
        for i, x in enumerate(kept):
            for y_ in kept[i + 1:]:
                assert rasterized_iou(x.rect, y_.rect) <= 0.5
        for d in (c,):
            assert any(rasterized_iou(d.rect, k.rect) > 0.5 and k.score >= d.score
                       for k in kept)

    def test_tie_break_by_position(self):
        a = Detection(Rect(0, 8, 10, 10), 1.0, 0)
        b = Detection(Rect(0, 0, 10, 10), 1.0, 0)
        kept = nms([a, b], overlap_thresh=0.9)
        assert kept[0] == b  # smaller y first on equal scores


class TestDetect:
    def _zero_svm(self, bias=0.0):
        m = HogSvmDetector()
        m.coef_ = np.zeros(756)
        m.intercept_ = bias
        m.classes_ = np.array([0, 1])
        return m

    def test_blank_image_zero_model_above_bias_threshold(self):
        img = np.full((240, 320), 128, dtype=np.uint8)
        model = self._zero_svm(bias=0.0)
        cfg = DetectConfig(score_threshold=0.5)  # threshold > bias
        assert detect(img, model, cfg) == []

    def test_planted_pattern_detected_exactly_once(self):
        rng = np.random.default_rng(123)
        patch = rng.integers(0, 256, size=(64, 32), dtype=np.uint8)
        scene, plant = scene_with_patch(patch, x=64, y=48)
        template = window_descriptor(scene, plant)
        model = HogSvmDetector()
        model.coef_ = template / float(template @ template)
        model.intercept_ = 0.0
        model.classes_ = np.array([0, 1])
        # threshold sits between the planted window's unit self-score and
        # the strongest partially overlapping response (about 0.85)
        dets = detect(scene, model, DetectConfig(score_threshold=0.9))
        assert len(dets) == 1
        inter = dets[0].rect.intersection_area(plant)
        assert inter > 0.5 * plant.area()

    def test_deterministic_across_runs(self):
        rng = np.random.default_rng(9)
        img = rng.integers(0, 256, size=(200, 160), dtype=np.uint8)
        model = HogSvmDetector()
        model.coef_ = rng.normal(0, 1, 756)
        model.intercept_ = 0.0
        model.classes_ = np.array([0, 1])
        cfg = DetectConfig(score_threshold=1.0)
        assert detect(img, model, cfg) == detect(img, model, cfg)

    def test_window_count_stats_match_formula(self):
        img = np.zeros((200, 144), dtype=np.uint8)
        cfg = DetectConfig(step=8)
        stats = DetectStats()
        detect(img, self._zero_svm(), cfg, stats=stats)
        expected = 0
        for lw, lh in stats.levels:
            expected += ((lw - 32) // 8 + 1) * ((lh - 64) // 8 + 1)
        assert stats.windows_evaluated == expected
        assert len(stats.levels) == len(pyramid_build(img, cfg))


def test_format_detection_line():
    d = Detection(Rect(4, 5, 32, 64), 1.25, 0)
    assert format_detection_line("img7", d) == "img7\t4\t5\t32\t64\t1.250000"
