"""Sliding-window detection over an image pyramid with greedy NMS.

The three tuning knobs are the scan step, the pyramid scale factor / level
cap, and the window size.  Each pyramid level is resized directly from the
original image; detections are mapped back by the level's nominal scale
and merged with greedy IoU suppression.  Everything is deterministic for a
fixed configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .images import Rect, as_gray, resize


@dataclass(frozen=True)
class DetectConfig:
    window_w: int = 32
    window_h: int = 64
    step: int = 8
    scale_factor: float = 1.2
    max_levels: int | None = None  # None = stop only when the window no longer fits
    score_threshold: float = 0.0
    nms_overlap: float = 0.5

    def __post_init__(self) -> None:
        if self.step < 1:
            raise ValueError("step must be >= 1")
        if self.scale_factor <= 1.0:
            raise ValueError("scale_factor must be > 1")
        if self.max_levels is not None and self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")
        if not 0.0 <= self.nms_overlap <= 1.0:
            raise ValueError("nms_overlap must lie in [0, 1]")


class Detection(NamedTuple):
    rect: Rect      # original-image coordinates
    score: float
    level: int      # pyramid index the hit came from


@dataclass
class DetectStats:
    """Instrumented counters filled in by ``detect``."""

    windows_evaluated: int = 0
    levels: list[tuple[int, int]] = field(default_factory=list)  # (w, h) per level


def pyramid_build(img, cfg: DetectConfig = DetectConfig()) -> list[tuple[np.ndarray, float]]:
    """Levels (image, scale) with level k resized to round(dim / factor^k).

    Level 0 is the original.  Construction stops when the next level would
    not fit the window, would not shrink, or when max_levels is reached.
    """
    src = as_gray(img)
    h, w = src.shape
    if w < cfg.window_w or h < cfg.window_h:
        raise ValueError(f"image {w}x{h} smaller than the {cfg.window_w}x"
                         f"{cfg.window_h} window")
    levels: list[tuple[np.ndarray, float]] = [(src, 1.0)]
    k = 1
    while cfg.max_levels is None or k < cfg.max_levels:
        scale = cfg.scale_factor ** k
        lw, lh = round(w / scale), round(h / scale)
        if lw < cfg.window_w or lh < cfg.window_h:
            break
        prev = levels[-1][0]
        if lw >= prev.shape[1] or lh >= prev.shape[0]:
            break
        levels.append((resize(src, lw, lh), scale))
        k += 1
    return levels


def window_grid(level_w: int, level_h: int, cfg: DetectConfig) -> tuple[np.ndarray, np.ndarray]:
    """Window origin coordinates: floor((L - W) / step) + 1 per axis."""
    xs = np.arange(0, level_w - cfg.window_w + 1, cfg.step)
    ys = np.arange(0, level_h - cfg.window_h + 1, cfg.step)
    return xs, ys


def scan(level_img, model, step: int = 8,
         threshold: float = 0.0) -> list[tuple[Rect, float]]:
    """Raw detections in level coordinates, row-major scan order.

    The model supplies a (ny, nx) score grid for the window lattice; every
    window scoring strictly above the threshold is kept.
    """
    level = as_gray(level_img)
    cfg = DetectConfig(window_w=model.window_w, window_h=model.window_h,
                       step=step, score_threshold=threshold)
    xs, ys = window_grid(level.shape[1], level.shape[0], cfg)
    if len(xs) == 0 or len(ys) == 0:
        return []
    scores = model.score_level_windows(level, step)
    hits = []
    for j, i in zip(*np.nonzero(scores > threshold)):
        hits.append((Rect(int(xs[i]), int(ys[j]), cfg.window_w, cfg.window_h),
                     float(scores[j, i])))
    return hits


def map_to_original(rect: Rect, scale: float, bounds: tuple[int, int]) -> Rect:
    """Scale a level rect back to original coordinates, round, clamp in-bounds."""
    ow, oh = bounds
    x = int(rect.x * scale + 0.5)
    y = int(rect.y * scale + 0.5)
    w = max(1, int(rect.w * scale + 0.5))
    h = max(1, int(rect.h * scale + 0.5))
    x = min(max(x, 0), ow - 1)
    y = min(max(y, 0), oh - 1)
    return Rect(x, y, min(w, ow - x), min(h, oh - y))


def nms(detections: list[Detection], overlap_thresh: float = 0.5) -> list[Detection]:
    """Greedy suppression: accept by descending score unless the IoU with an
    already accepted detection exceeds the threshold.

    Score ties order by smaller (y, x, level) so the result never depends
    on input ordering of equals.
    """
    ordered = sorted(detections,
                     key=lambda d: (-d.score, d.rect.y, d.rect.x, d.level))
    kept: list[Detection] = []
    for det in ordered:
        if all(det.rect.iou(k.rect) <= overlap_thresh for k in kept):
            kept.append(det)
    return kept


def detect(img, model, cfg: DetectConfig = DetectConfig(),
           stats: DetectStats | None = None) -> list[Detection]:
    """Full pipeline: pyramid, per-level scan, coordinate mapping, NMS."""
    src = as_gray(img)
    if (model.window_w, model.window_h) != (cfg.window_w, cfg.window_h):
        raise ValueError("model window size does not match the detect config")
    oh, ow = src.shape
    raw: list[Detection] = []
    for k, (level, scale) in enumerate(pyramid_build(src, cfg)):
        xs, ys = window_grid(level.shape[1], level.shape[0], cfg)
        if stats is not None:
            stats.windows_evaluated += len(xs) * len(ys)
            stats.levels.append((level.shape[1], level.shape[0]))
        for rect, score in scan(level, model, cfg.step, cfg.score_threshold):
            raw.append(Detection(map_to_original(rect, scale, (ow, oh)), score, k))
    raw.sort(key=lambda d: (d.level, d.rect.y, d.rect.x))
    return nms(raw, cfg.nms_overlap)


def format_detection_line(image_id: str, det: Detection) -> str:
    """One output line: id, x, y, w, h, score to six decimals, tab-separated."""
    r = det.rect
    return f"{image_id}\t{r.x}\t{r.y}\t{r.w}\t{r.h}\t{det.score:.6f}"
