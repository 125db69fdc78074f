"""Batch-based local binary patterns computed from an integral image.

Each code compares eight neighbor batch sums against a center batch sum in
a 3x3 arrangement of bw x bh pixel batches.  The integral-image route
computes every batch sum in O(1); ``lbp_map_direct`` recomputes the sums by
explicit pixel summation and exists as the testing oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .images import OpCounter, as_gray, batch_sum_field, integral_build

# Neighbor order is fixed: TL, T, TR, R, BR, B, BL, L; TL holds the most
# significant bit.  Offsets are in batch-size units within the 3x3 layout.
_NEIGHBOR_OFFSETS = (
    (0, 0),  # TL
    (1, 0),  # T
    (2, 0),  # TR
    (2, 1),  # R
    (2, 2),  # BR
    (1, 2),  # B
    (0, 2),  # BL
    (0, 1),  # L
)
_CENTER_OFFSET = (1, 1)


@dataclass(frozen=True)
class LbpConfig:
    """Batch geometry for code maps; stride 1 gives the dense map."""

    batch_w: int = 2
    batch_h: int = 2
    stride: int = 1

    def __post_init__(self) -> None:
        if self.batch_w < 1 or self.batch_h < 1:
            raise ValueError("batch dimensions must be >= 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass(frozen=True)
class LbpFeature:
    """Top-left corner of a 3x3 batch neighborhood inside a window."""

    x: int
    y: int
    scale: int  # batch edge in pixels


def lbp_code(neighbor_sums, center_sum) -> int:
    """Code with bit k set iff neighbor k strictly exceeds the center.

    Neighbor order is TL, T, TR, R, BR, B, BL, L; TL is the MSB.  Ties
    yield a 0 bit, so a flat neighborhood codes to 0.
    """
    sums = list(neighbor_sums)
    if len(sums) != 8:
        raise ValueError("exactly 8 neighbor sums required")
    code = 0
    for s in sums:
        code = (code << 1) | (1 if s > center_sum else 0)
    return code


def _grid_starts(img_w: int, img_h: int, cfg: LbpConfig) -> tuple[np.ndarray, np.ndarray]:
    span_x = img_w - 3 * cfg.batch_w
    span_y = img_h - 3 * cfg.batch_h
    if span_x < 0 or span_y < 0:
        raise ValueError(
            f"image {img_w}x{img_h} smaller than one 3x3 batch neighborhood "
            f"({3 * cfg.batch_w}x{3 * cfg.batch_h})"
        )
    xs = np.arange(0, span_x + 1, cfg.stride)
    ys = np.arange(0, span_y + 1, cfg.stride)
    return xs, ys


def _offset_view(field: np.ndarray, ox: int, oy: int, xs, ys,
                 cfg: LbpConfig) -> np.ndarray:
    """Strided view of the sum field at one 3x3 offset, no copy."""
    bw, bh = cfg.batch_w, cfg.batch_h
    return field[oy * bh + ys[0]:oy * bh + ys[-1] + 1:cfg.stride,
                 ox * bw + xs[0]:ox * bw + xs[-1] + 1:cfg.stride]


def _codes_from_sum_field(field: np.ndarray, xs, ys, cfg: LbpConfig,
                          counter: OpCounter | None = None) -> np.ndarray:
    cx, cy = _CENTER_OFFSET
    center = _offset_view(field, cx, cy, xs, ys, cfg)
    bits = np.empty((8,) + center.shape, dtype=bool)
    for k, (ox, oy) in enumerate(_NEIGHBOR_OFFSETS):
        np.greater(_offset_view(field, ox, oy, xs, ys, cfg), center, out=bits[k])
    if counter is not None:
        counter.add("comparison", 8 * center.size)
    # TL first in the offset table = most significant bit
    return np.packbits(bits, axis=0, bitorder="big")[0]


def lbp_map_integral(img, cfg: LbpConfig = LbpConfig(),
                     counter: OpCounter | None = None) -> np.ndarray:
    """Code map via one integral image and O(1) batch sums.

    Returns a uint8 array of shape (grid_h, grid_w) with
    grid_w = floor((img_w - 3*batch_w) / stride) + 1 and the analogous
    grid_h; entry (gy, gx) is the code of the neighborhood whose top-left
    pixel is (gx*stride, gy*stride).
    """
    src = as_gray(img)
    h, w = src.shape
    xs, ys = _grid_starts(w, h, cfg)
    ii = integral_build(src, counter=counter)
    field = batch_sum_field(ii, cfg.batch_w, cfg.batch_h)
    return _codes_from_sum_field(field, xs, ys, cfg, counter=counter)


def lbp_map_direct(img, cfg: LbpConfig = LbpConfig()) -> np.ndarray:
    """Reference code map with batch sums formed by explicit pixel summation.

    No integral image is involved; used as the oracle for
    ``lbp_map_integral``.
    """
    src = as_gray(img)
    h, w = src.shape
    xs, ys = _grid_starts(w, h, cfg)
    bw, bh = cfg.batch_w, cfg.batch_h
    field = np.zeros((h - bh + 1, w - bw + 1), dtype=np.int64)
    for j in range(bh):
        for i in range(bw):
            field += src[j:j + h - bh + 1, i:i + w - bw + 1]
    center = field[np.ix_(ys + bh, xs + bw)]
    codes = np.zeros(center.shape, dtype=np.uint8)
    for ox, oy in _NEIGHBOR_OFFSETS:
        nb = field[np.ix_(ys + oy * bh, xs + ox * bw)]
        codes = (codes << 1) | (nb > center).astype(np.uint8)
    return codes


def lbp_map_classic(img, counter: OpCounter | None = None) -> np.ndarray:
    """Classic single-pixel LBP over every pixel, replicate border.

    This is the unbatched baseline strategy: each of the w*h pixels is a
    center compared against its 8 neighbors, so the instrumented comparison
    count is exactly 8 * w * h.
    """
    src = as_gray(img)
    h, w = src.shape
    padded = np.pad(src, 1, mode="edge")
    center = src
    codes = np.zeros((h, w), dtype=np.uint8)
    for ox, oy in _NEIGHBOR_OFFSETS:
        nb = padded[oy:oy + h, ox:ox + w]
        codes = (codes << 1) | (nb > center).astype(np.uint8)
    if counter is not None:
        counter.add("comparison", 8 * h * w)
    return codes


def feature_pool(window_w: int = 32, window_h: int = 64,
                 scales=(2,)) -> list[LbpFeature]:
    """Every (x, y, scale) whose 3x3 batch neighborhood fits in the window.

    Enumerated in deterministic (scale, y, x) order; an empty scale list
    yields an empty pool.
    """
    pool: list[LbpFeature] = []
    for scale in scales:
        if scale < 1:
            raise ValueError("batch scale must be >= 1")
        span = 3 * scale
        for y in range(window_h - span + 1):
            for x in range(window_w - span + 1):
                pool.append(LbpFeature(x=x, y=y, scale=scale))
    return pool


def codes_for_features(window, features) -> np.ndarray:
    """Codes of one 32x64-style window at the given features, via its integral.

    Dense code maps are built once per distinct scale; each feature then
    reads its code at (y, x).
    """
    src = as_gray(window)
    maps: dict[int, np.ndarray] = {}
    out = np.empty(len(features), dtype=np.uint8)
    for k, f in enumerate(features):
        m = maps.get(f.scale)
        if m is None:
            m = lbp_map_integral(src, LbpConfig(batch_w=f.scale, batch_h=f.scale))
            maps[f.scale] = m
        out[k] = m[f.y, f.x]
    return out
