"""Orientation-histogram descriptors with a precomputed gradient-vote table.

Gradients of 8-bit images lie in [-255, 255], so every (dx, dy) pair maps
to a fixed pair of orientation bins and magnitude-split vote weights.  The
511 x 511 table stores all of them; descriptor computation then replaces
per-pixel square roots and arctangents with four table reads.  The runtime
(trigonometric) path is kept as the oracle and speed baseline.

Gradients are taken over the host image (central differences, replicate
padding at host borders), so a window's descriptor is identical whether it
is computed in place or from a crop carrying one pixel of context.  Cell
histograms therefore agree between the per-window path and the shared
whole-image grid used by the sliding-window scanner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .images import Rect, as_gray, check_rect_in_bounds

L2_HYS_CLIP = 0.2


@dataclass(frozen=True)
class HogConfig:
    window_w: int = 32
    window_h: int = 64
    cell: int = 8          # pixels per cell edge
    block: int = 2         # cells per block edge
    block_stride: int = 8  # pixels between block origins
    n_bins: int = 9        # unsigned orientations over [0, 180)

    def __post_init__(self) -> None:
        if self.n_bins < 2:
            raise ValueError("need at least 2 orientation bins")
        if self.window_w % self.cell or self.window_h % self.cell:
            raise ValueError("window must be divisible by the cell size")
        if self.block_stride % self.cell:
            raise ValueError("block stride must be a multiple of the cell size")
        span = self.block * self.cell
        if (self.window_w - span) % self.block_stride or (self.window_h - span) % self.block_stride:
            raise ValueError("block stride must divide (window - block) in both axes")

    @property
    def cells_x(self) -> int:
        return self.window_w // self.cell

    @property
    def cells_y(self) -> int:
        return self.window_h // self.cell

    @property
    def blocks_x(self) -> int:
        return (self.window_w - self.block * self.cell) // self.block_stride + 1

    @property
    def blocks_y(self) -> int:
        return (self.window_h - self.block * self.cell) // self.block_stride + 1

    @property
    def stride_cells(self) -> int:
        return self.block_stride // self.cell

    @property
    def block_len(self) -> int:
        return self.block * self.block * self.n_bins

    @property
    def descriptor_length(self) -> int:
        return self.blocks_x * self.blocks_y * self.block_len


class GradientLut:
    """Vote table indexed by (dx + 255, dy + 255)."""

    def __init__(self, bin0, bin1, w0, w1, n_bins: int):
        self.bin0 = bin0
        self.bin1 = bin1
        self.w0 = w0
        self.w1 = w1
        self.n_bins = n_bins


def split_votes(dx, dy, n_bins: int = 9):
    """Magnitude-weighted votes for the two bins adjacent to a gradient.

    magnitude = sqrt(dx^2 + dy^2); the unsigned angle (direction and
    direction + 180 degrees identified) is interpolated between the two
    neighboring bin centers at (k + 0.5) * (180 / n_bins) degrees.
    Returns (bin0, bin1, w0, w1); w0 + w1 equals the magnitude.
    """
    dxf = np.asarray(dx, dtype=np.float64)
    dyf = np.asarray(dy, dtype=np.float64)
    mag = np.hypot(dxf, dyf)
    ang = np.degrees(np.arctan2(dyf, dxf)) % 180.0
    t = ang / (180.0 / n_bins) - 0.5
    f0 = np.floor(t)
    frac = t - f0
    bin0 = (f0.astype(np.int64) % n_bins).astype(np.uint8)
    bin1 = ((bin0 + 1) % n_bins).astype(np.uint8)
    return bin0, bin1, mag * (1.0 - frac), mag * frac


def lut_build(cfg: HogConfig = HogConfig()) -> GradientLut:
    """Precompute votes for every gradient pair in [-255, 255]^2."""
    d = np.arange(-255, 256, dtype=np.float64)
    dx = d[:, None]
    dy = d[None, :]
    bin0, bin1, w0, w1 = split_votes(dx, dy, cfg.n_bins)
    return GradientLut(bin0, bin1, w0, w1, cfg.n_bins)


_LUT_CACHE: dict[int, GradientLut] = {}


def get_lut(cfg: HogConfig = HogConfig()) -> GradientLut:
    """Process-wide cache; tables are immutable once built."""
    lut = _LUT_CACHE.get(cfg.n_bins)
    if lut is None:
        lut = lut_build(cfg)
        _LUT_CACHE[cfg.n_bins] = lut
    return lut


def gradients(img, x: int, y: int) -> tuple[int, int]:
    """Central differences at one pixel with replicate-border padding.

    dx = p(x+1, y) - p(x-1, y) and dy = p(x, y+1) - p(x, y-1); both lie in
    [-255, 255] for 8-bit input.
    """
    src = as_gray(img)
    h, w = src.shape
    dx = int(src[y, min(x + 1, w - 1)]) - int(src[y, max(x - 1, 0)])
    dy = int(src[min(y + 1, h - 1), x]) - int(src[max(y - 1, 0), x])
    return dx, dy


def _field_from_padded(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradient fields of the interior of a (n, h+2, w+2) padded stack."""
    p = stack.astype(np.int16)
    dx = p[:, 1:-1, 2:] - p[:, 1:-1, :-2]
    dy = p[:, 2:, 1:-1] - p[:, :-2, 1:-1]
    return dx, dy


def _votes(dx, dy, cfg: HogConfig, lut: GradientLut | None):
    if lut is None:
        return split_votes(dx, dy, cfg.n_bins)
    xi = dx.astype(np.intp) + 255
    yi = dy.astype(np.intp) + 255
    return lut.bin0[xi, yi], lut.bin1[xi, yi], lut.w0[xi, yi], lut.w1[xi, yi]


def _cell_index_grid(cfg: HogConfig) -> np.ndarray:
    py = np.arange(cfg.window_h) // cfg.cell
    px = np.arange(cfg.window_w) // cfg.cell
    return (py[:, None] * cfg.cells_x + px[None, :]).astype(np.int64)


def _normalize_blocks(blocks: np.ndarray) -> np.ndarray:
    """L2 normalize, clip at 0.2, renormalize; zero-norm blocks stay zero."""
    def _div_by_norm(b: np.ndarray) -> np.ndarray:
        norms = np.sqrt((b * b).sum(axis=-1))
        safe = np.where(norms > 0.0, norms, 1.0)
        return b / safe[..., None]

    out = _div_by_norm(blocks)
    np.clip(out, None, L2_HYS_CLIP, out=out)
    return _div_by_norm(out)


def _gather_blocks(hist: np.ndarray, cfg: HogConfig) -> np.ndarray:
    """(n, cells_y, cells_x, bins) -> (n, n_blocks, block_len), row-major blocks."""
    n = hist.shape[0]
    sc = cfg.stride_cells
    parts = []
    for by in range(cfg.blocks_y):
        for bx in range(cfg.blocks_x):
            cy, cx = by * sc, bx * sc
            part = hist[:, cy:cy + cfg.block, cx:cx + cfg.block, :]
            parts.append(part.reshape(n, cfg.block_len))
    return np.stack(parts, axis=1)


def _cell_histograms_from_padded(stack: np.ndarray, cfg: HogConfig,
                                 lut: GradientLut | None) -> np.ndarray:
    n = stack.shape[0]
    dx, dy = _field_from_padded(stack)
    bin0, bin1, w0, w1 = _votes(dx, dy, cfg, lut)

    ncells = cfg.cells_x * cfg.cells_y
    cell9 = _cell_index_grid(cfg) * cfg.n_bins
    base = (np.arange(n, dtype=np.int64) * (ncells * cfg.n_bins))[:, None, None]
    nbuckets = n * ncells * cfg.n_bins
    idx0 = (base + cell9 + bin0).ravel()
    idx1 = (base + cell9 + bin1).ravel()
    hist = np.bincount(idx0, weights=w0.ravel(), minlength=nbuckets)
    hist += np.bincount(idx1, weights=w1.ravel(), minlength=nbuckets)
    return hist.reshape(n, cfg.cells_y, cfg.cells_x, cfg.n_bins)


def cell_histograms(patches, cfg: HogConfig = HogConfig(),
                    lut: GradientLut | None = None) -> np.ndarray:
    """Unnormalized per-cell vote histograms of standalone patches.

    The sum over one patch's histogram equals the sum of its gradient
    magnitudes (every pixel's two votes add up to its magnitude).
    """
    arr = np.asarray(patches)
    if arr.ndim != 3 or arr.shape[1:] != (cfg.window_h, cfg.window_w):
        raise ValueError(f"expected (n, {cfg.window_h}, {cfg.window_w}) patch stack, "
                         f"got shape {arr.shape}")
    if lut is None:
        lut = get_lut(cfg)
    stack = np.pad(arr, ((0, 0), (1, 1), (1, 1)), mode="edge")
    return _cell_histograms_from_padded(stack, cfg, lut)


def _descriptors_from_padded(stack: np.ndarray, cfg: HogConfig,
                             lut: GradientLut | None) -> np.ndarray:
    hist = _cell_histograms_from_padded(stack, cfg, lut)
    blocks = _normalize_blocks(_gather_blocks(hist, cfg))
    return blocks.reshape(stack.shape[0], cfg.descriptor_length)


def _padded_crop(src: np.ndarray, origin: Rect) -> np.ndarray:
    """Crop with one pixel of host context on every side, clamped at borders."""
    h, w = src.shape
    ys = np.clip(np.arange(origin.y - 1, origin.y + origin.h + 1), 0, h - 1)
    xs = np.clip(np.arange(origin.x - 1, origin.x + origin.w + 1), 0, w - 1)
    return src[np.ix_(ys, xs)]


def window_descriptor(img, origin: Rect, cfg: HogConfig = HogConfig(),
                      lut: GradientLut | None = None) -> np.ndarray:
    """Block-normalized descriptor of one window, votes from the table."""
    src = as_gray(img)
    check_rect_in_bounds(origin, src.shape[1], src.shape[0])
    if (origin.w, origin.h) != (cfg.window_w, cfg.window_h):
        raise ValueError(f"window {origin.w}x{origin.h} does not match config "
                         f"{cfg.window_w}x{cfg.window_h}")
    if lut is None:
        lut = get_lut(cfg)
    stack = _padded_crop(src, origin)[None, :, :]
    return _descriptors_from_padded(stack, cfg, lut)[0]


def window_descriptor_direct(img, origin: Rect, cfg: HogConfig = HogConfig()) -> np.ndarray:
    """Same contract as ``window_descriptor``, magnitude and angle computed
    per pixel with runtime square roots and arctangents."""
    src = as_gray(img)
    check_rect_in_bounds(origin, src.shape[1], src.shape[0])
    if (origin.w, origin.h) != (cfg.window_w, cfg.window_h):
        raise ValueError(f"window {origin.w}x{origin.h} does not match config "
                         f"{cfg.window_w}x{cfg.window_h}")
    stack = _padded_crop(src, origin)[None, :, :]
    return _descriptors_from_padded(stack, cfg, None)[0]


def descriptors_for_patches(patches, cfg: HogConfig = HogConfig(),
                            lut: GradientLut | None = None,
                            use_lut: bool = True) -> np.ndarray:
    """Descriptors for a stack of standalone window-sized patches.

    ``patches`` is (n, window_h, window_w) uint8; border gradients use
    replicate padding (each patch is its own host image).  With
    ``use_lut=False`` the runtime vote path is used instead of the table.
    """
    arr = np.asarray(patches)
    if arr.ndim != 3 or arr.shape[1:] != (cfg.window_h, cfg.window_w):
        raise ValueError(f"expected (n, {cfg.window_h}, {cfg.window_w}) patch stack, "
                         f"got shape {arr.shape}")
    if arr.dtype != np.uint8:
        arr = np.stack([as_gray(p) for p in arr])
    if arr.shape[0] == 0:
        return np.zeros((0, cfg.descriptor_length))
    if use_lut and lut is None:
        lut = get_lut(cfg)
    stack = np.pad(arr, ((0, 0), (1, 1), (1, 1)), mode="edge")
    return _descriptors_from_padded(stack, cfg, lut if use_lut else None)


def descriptors_for_windows(img, origins, cfg: HogConfig = HogConfig(),
                            lut: GradientLut | None = None,
                            chunk: int = 512) -> np.ndarray:
    """Descriptors for many windows of one host image, batched in chunks."""
    src = as_gray(img)
    if lut is None:
        lut = get_lut(cfg)
    out = np.empty((len(origins), cfg.descriptor_length))
    for lo in range(0, len(origins), chunk):
        group = origins[lo:lo + chunk]
        stack = np.stack([_padded_crop(src, r) for r in group])
        out[lo:lo + len(group)] = _descriptors_from_padded(stack, cfg, lut)
    return out


def level_block_grid(level, cfg: HogConfig = HogConfig(),
                     lut: GradientLut | None = None) -> np.ndarray:
    """Normalized block grid of a whole image, shared by aligned windows.

    Returns (grid_h, grid_w, block_len) where entry (cy, cx) is the
    L2-Hys-normalized block whose top-left cell is (cy, cx).  A window with
    its origin at cell (cy0, cx0) reads blocks (cy0 + by*stride_cells,
    cx0 + bx*stride_cells), which reproduces ``window_descriptor`` exactly
    for cell-aligned windows.
    """
    src = as_gray(level)
    if lut is None:
        lut = get_lut(cfg)
    h, w = src.shape
    cells_y, cells_x = h // cfg.cell, w // cfg.cell
    if cells_y < cfg.block or cells_x < cfg.block:
        raise ValueError("image smaller than one block")

    stack = np.pad(src, 1, mode="edge")[None, :, :]
    dx, dy = _field_from_padded(stack)
    uy, ux = cells_y * cfg.cell, cells_x * cfg.cell
    dx, dy = dx[0, :uy, :ux], dy[0, :uy, :ux]
    bin0, bin1, w0, w1 = _votes(dx, dy, cfg, lut)

    py = np.arange(uy) // cfg.cell
    px = np.arange(ux) // cfg.cell
    cell9 = ((py[:, None] * cells_x + px[None, :]) * cfg.n_bins).astype(np.int64)
    nbuckets = cells_y * cells_x * cfg.n_bins
    hist = np.bincount((cell9 + bin0).ravel(), weights=w0.ravel(), minlength=nbuckets)
    hist += np.bincount((cell9 + bin1).ravel(), weights=w1.ravel(), minlength=nbuckets)
    hist = hist.reshape(cells_y, cells_x, cfg.n_bins)

    gh, gw = cells_y - cfg.block + 1, cells_x - cfg.block + 1
    blocks = np.empty((gh, gw, cfg.block_len))
    k = 0
    for by in range(cfg.block):
        for bx in range(cfg.block):
            blocks[:, :, k * cfg.n_bins:(k + 1) * cfg.n_bins] = \
                hist[by:by + gh, bx:bx + gw, :]
            k += 1
    return _normalize_blocks(blocks)
