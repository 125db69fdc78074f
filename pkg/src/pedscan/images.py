"""Image primitives shared by every pipeline.

Grayscale rasters are plain 2-D uint8 numpy arrays, row-major, shape
(height, width).  Integral images are (height+1, width+1) int64 arrays
whose first row and column are zero (exclusive-prefix convention), so
rectangle sums need no edge special-cases.  All functions here are pure.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Rect(NamedTuple):
    """Axis-aligned rectangle: top-left corner (x, y), size w x h, all pixels."""

    x: int
    y: int
    w: int
    h: int

    def area(self) -> int:
        return self.w * self.h

    def intersection_area(self, other: "Rect") -> int:
        ix = max(self.x, other.x)
        iy = max(self.y, other.y)
        ix2 = min(self.x + self.w, other.x + other.w)
        iy2 = min(self.y + self.h, other.y + other.h)
        if ix2 <= ix or iy2 <= iy:
            return 0
        return (ix2 - ix) * (iy2 - iy)

    def iou(self, other: "Rect") -> float:
        inter = self.intersection_area(other)
        if inter == 0:
            return 0.0
        return inter / float(self.area() + other.area() - inter)


class OpCounter:
    """Accumulates instrumented operation counts by kind.

    The counting model mirrors the cost analysis of the batch code-map
    strategy: one count per pixel folded into a prefix table, one count per
    neighbor comparison.  O(1) prefix-table lookups are reads, not counted.
    """

    def __init__(self) -> None:
        self.counts: dict[str, int] = {}

    def add(self, kind: str, n: int) -> None:
        self.counts[kind] = self.counts.get(kind, 0) + int(n)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def as_gray(img) -> np.ndarray:
    """Validate and return a 2-D uint8 grayscale raster."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale array, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("empty image")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"expected integer intensities, got dtype {arr.dtype}")
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("intensities outside [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def check_rect_in_bounds(r: Rect, width: int, height: int) -> None:
    if r.w < 1 or r.h < 1:
        raise ValueError(f"degenerate rect {r}")
    if r.x < 0 or r.y < 0 or r.x + r.w > width or r.y + r.h > height:
        raise ValueError(f"rect {r} outside {width}x{height} image")


def to_grayscale(rgb) -> np.ndarray:
    """Convert an interleaved 8-bit RGB raster to 8-bit luma.

    Per-pixel value is round(0.299 R + 0.587 G + 0.114 B) clamped to
    [0, 255] (BT.601 weights).
    """
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) RGB raster, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("empty image")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() > 255:
            raise ValueError("RGB values must be integers in [0, 255]")
    f = arr.astype(np.float64)
    luma = 0.299 * f[..., 0] + 0.587 * f[..., 1] + 0.114 * f[..., 2]
    return np.clip(np.rint(luma), 0, 255).astype(np.uint8)


def resize(img, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize to exactly (out_w, out_h), corner-aligned sampling.

    Aspect ratio is deliberately not preserved.  Output corner pixels map
    exactly onto source corner pixels; a size-preserving call is the
    identity, so resizing is idempotent on dimensions.
    """
    src = as_gray(img)
    if out_w < 1 or out_h < 1:
        raise ValueError("target size must be at least 1x1")
    h, w = src.shape
    if (out_h, out_w) == (h, w):
        return src.copy()

    sx = _corner_aligned_coords(w, out_w)
    sy = _corner_aligned_coords(h, out_h)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0

    f = src.astype(np.float64)
    top = f[y0[:, None], x0] * (1.0 - fx) + f[y0[:, None], x1] * fx
    bot = f[y1[:, None], x0] * (1.0 - fx) + f[y1[:, None], x1] * fx
    out = top * (1.0 - fy)[:, None] + bot * fy[:, None]
    return np.rint(out).astype(np.uint8)


def _corner_aligned_coords(src_n: int, out_n: int) -> np.ndarray:
    if out_n == 1:
        return np.full(1, (src_n - 1) / 2.0)
    return np.arange(out_n, dtype=np.float64) * ((src_n - 1) / (out_n - 1))


def integral_build(img, counter: OpCounter | None = None) -> np.ndarray:
    """Build the exclusive-prefix integral image.

    sums[i][j] equals the sum of all pixels in rows < i and columns < j.
    int64 accumulators hold 255 * w * h without overflow for any realistic
    raster.
    """
    src = as_gray(img)
    h, w = src.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(src, axis=1, dtype=np.int64, out=ii[1:, 1:])
    np.cumsum(ii[1:, 1:], axis=0, out=ii[1:, 1:])
    if counter is not None:
        counter.add("pixel_ingest", w * h)
    return ii


def rect_sum(ii: np.ndarray, r: Rect) -> int:
    """O(1) sum of the pixels covered by ``r`` using four table lookups."""
    height, width = ii.shape[0] - 1, ii.shape[1] - 1
    check_rect_in_bounds(r, width, height)
    x2, y2 = r.x + r.w, r.y + r.h
    return int(ii[y2, x2] - ii[r.y, x2] - ii[y2, r.x] + ii[r.y, r.x])


def batch_sum_field(ii: np.ndarray, bw: int, bh: int) -> np.ndarray:
    """All sums of bw x bh rectangles, one per valid top-left position.

    Returns an (h - bh + 1, w - bw + 1) int64 array; entry (y, x) is the
    sum of the batch whose top-left pixel is (x, y).
    """
    return ii[bh:, bw:] + ii[:-bh, :-bw] - ii[:-bh, bw:] - ii[bh:, :-bw]
