"""Scikit-learn style detector estimators.

Both classifiers consume stacks of window-sized grayscale patches, either
as (n, window_h, window_w) arrays or flattened to (n, window_h*window_w)
so they compose with standard model-selection tooling.  Besides the usual
fit/predict/decision_function surface, each estimator scores full sliding
-window lattices for the detector module and exposes ``detect`` for whole
images.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import hog
from .classify import adaboost_train, svm_train
from .detector import DetectConfig, Detection, detect, window_grid
from .images import as_gray
from .lbp import LbpConfig, feature_pool, lbp_map_integral


def as_patch_stack(X, window_w: int, window_h: int) -> np.ndarray:
    """Validate patch input; accepts (n, h, w) or (n, h*w) integer arrays."""
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] == window_w * window_h:
        arr = arr.reshape(-1, window_h, window_w)
    if arr.ndim != 3 or arr.shape[1:] != (window_h, window_w):
        raise ValueError(f"expected (n, {window_h}, {window_w}) patches or their "
                         f"flattened rows, got shape {np.asarray(X).shape}")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"patch intensities must be integers, got {arr.dtype}")
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("patch intensities outside [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def _binary_targets(y) -> tuple[np.ndarray, np.ndarray]:
    """Map arbitrary two-class labels onto -1/+1; larger label is positive."""
    y = np.asarray(y)
    classes = np.unique(y)
    if classes.shape[0] != 2:
        raise ValueError(f"expected exactly 2 classes, got {classes!r}")
    return classes, np.where(y == classes[1], 1.0, -1.0)


class HogSvmDetector(BaseEstimator, ClassifierMixin):
    """Linear SVM over table-accelerated orientation-histogram descriptors."""

    def __init__(self, lam: float = 1e-3, epochs: int = 30, seed: int = 0,
                 hog_config: hog.HogConfig | None = None):
        self.lam = lam
        self.epochs = epochs
        self.seed = seed
        self.hog_config = hog_config

    def _cfg(self) -> hog.HogConfig:
        return self.hog_config if self.hog_config is not None else hog.HogConfig()

    @property
    def window_w(self) -> int:
        return self._cfg().window_w

    @property
    def window_h(self) -> int:
        return self._cfg().window_h

    def fit(self, X, y):
        cfg = self._cfg()
        patches = as_patch_stack(X, cfg.window_w, cfg.window_h)
        self.classes_, targets = _binary_targets(y)
        desc = hog.descriptors_for_patches(patches, cfg)
        self.coef_, self.intercept_ = svm_train(desc[targets > 0], desc[targets < 0],
                                                lam=self.lam, epochs=self.epochs,
                                                seed=self.seed)
        return self

    def decision_function(self, X) -> np.ndarray:
        cfg = self._cfg()
        patches = as_patch_stack(X, cfg.window_w, cfg.window_h)
        desc = hog.descriptors_for_patches(patches, cfg)
        return desc @ self.coef_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        return self.classes_[(self.decision_function(X) > 0).astype(int)]

    def score_level_windows(self, level, step: int = 8) -> np.ndarray:
        """Scores of every lattice window of one pyramid level.

        Cell-aligned steps share a single whole-level block grid; other
        steps fall back to batched per-window descriptors.
        """
        cfg = self._cfg()
        level = as_gray(level)
        dcfg = DetectConfig(window_w=cfg.window_w, window_h=cfg.window_h, step=step)
        xs, ys = window_grid(level.shape[1], level.shape[0], dcfg)
        if len(xs) == 0 or len(ys) == 0:
            return np.zeros((len(ys), len(xs)))
        if step % cfg.cell == 0:
            grid = hog.level_block_grid(level, cfg)
            wblock = self.coef_.reshape(cfg.blocks_y, cfg.blocks_x, cfg.block_len)
            cy0, cx0 = ys // cfg.cell, xs // cfg.cell
            scores = np.full((len(ys), len(xs)), self.intercept_)
            sc = cfg.stride_cells
            for by in range(cfg.blocks_y):
                for bx in range(cfg.blocks_x):
                    scores += grid[np.ix_(cy0 + by * sc, cx0 + bx * sc)] @ wblock[by, bx]
            return scores
        from .images import Rect
        rects = [Rect(int(x), int(y), cfg.window_w, cfg.window_h)
                 for y in ys for x in xs]
        desc = hog.descriptors_for_windows(level, rects, cfg)
        return (desc @ self.coef_ + self.intercept_).reshape(len(ys), len(xs))

    def detect(self, image, cfg: DetectConfig | None = None) -> list[Detection]:
        return detect(image, self, cfg if cfg is not None else DetectConfig())


class LbpAdaBoostDetector(BaseEstimator, ClassifierMixin):
    """AdaBoost over lookup-table stumps on batch-LBP codes."""

    def __init__(self, n_rounds: int = 64, scales: tuple[int, ...] = (2,),
                 window_w: int = 32, window_h: int = 64):
        self.n_rounds = n_rounds
        self.scales = scales
        self.window_w = window_w
        self.window_h = window_h

    def _pool_codes(self, patches: np.ndarray) -> np.ndarray:
        """Codes of every pool feature for every patch.

        For each scale the dense code map of a patch, flattened row-major,
        lines up exactly with the (scale, y, x) pool enumeration.
        """
        per_patch = []
        for p in patches:
            parts = [lbp_map_integral(p, LbpConfig(batch_w=s, batch_h=s)).ravel()
                     for s in self.scales]
            per_patch.append(np.concatenate(parts))
        return np.stack(per_patch)

    def fit(self, X, y):
        patches = as_patch_stack(X, self.window_w, self.window_h)
        self.classes_, targets = _binary_targets(y)
        pool = feature_pool(self.window_w, self.window_h, self.scales)
        codes = self._pool_codes(patches)
        self.rounds_, self.train_errors_ = adaboost_train(codes, targets, pool,
                                                          n_rounds=self.n_rounds)
        self.decision_threshold_ = 0.0
        return self

    def decision_function(self, X) -> np.ndarray:
        patches = as_patch_stack(X, self.window_w, self.window_h)
        by_scale = self._rounds_by_scale()
        scores = np.zeros(len(patches))
        for k, p in enumerate(patches):
            total = 0.0
            for scale, (fy, fx, votes, alphas) in by_scale.items():
                cmap = lbp_map_integral(p, LbpConfig(batch_w=scale, batch_h=scale))
                codes = cmap[fy, fx]
                total += float((alphas * votes[np.arange(len(alphas)), codes]).sum())
            scores[k] = total
        return scores

    def predict(self, X) -> np.ndarray:
        return self.classes_[(self.decision_function(X) > self.decision_threshold_)
                             .astype(int)]

    def _rounds_by_scale(self):
        grouped: dict[int, tuple] = {}
        for scale in sorted({wl.feature.scale for wl, _ in self.rounds_}):
            sel = [(wl, a) for wl, a in self.rounds_ if wl.feature.scale == scale]
            fy = np.array([wl.feature.y for wl, _ in sel])
            fx = np.array([wl.feature.x for wl, _ in sel])
            votes = np.stack([wl.votes for wl, _ in sel])
            alphas = np.array([a for _, a in sel])
            grouped[scale] = (fy, fx, votes, alphas)
        return grouped

    def score_level_windows(self, level, step: int = 8) -> np.ndarray:
        """Scores of every lattice window from shared dense code maps.

        A window at (x, y) reads the code of feature (fx, fy) at map
        position (y + fy, x + fx), so one map per scale serves every
        window of the level; the result is exactly the per-window score.
        """
        level = as_gray(level)
        dcfg = DetectConfig(window_w=self.window_w, window_h=self.window_h, step=step)
        xs, ys = window_grid(level.shape[1], level.shape[0], dcfg)
        scores = np.zeros((len(ys), len(xs)))
        if len(xs) == 0 or len(ys) == 0:
            return scores
        for scale, (fy, fx, votes, alphas) in self._rounds_by_scale().items():
            cmap = lbp_map_integral(level, LbpConfig(batch_w=scale, batch_h=scale))
            for r in range(len(alphas)):
                codes = cmap[fy[r] + ys[0]:fy[r] + ys[-1] + 1:step,
                             fx[r] + xs[0]:fx[r] + xs[-1] + 1:step]
                scores += alphas[r] * votes[r][codes]
        return scores

    def detect(self, image, cfg: DetectConfig | None = None) -> list[Detection]:
        return detect(image, self, cfg if cfg is not None else DetectConfig())
