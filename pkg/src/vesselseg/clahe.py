"""Contrast-limited adaptive histogram equalization (uniform target)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClaheConfig:
    """CLAHE settings.

    ``clip_limit`` caps every histogram bin at ``clip_limit * tile_pixels``
    counts, so any value >= 1 disables clipping.
    """

    tiles_x: int = 8
    tiles_y: int = 8
    clip_limit: float = 0.04
    bins: int = 256

    def __post_init__(self):
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise ValueError("CLAHE tile grid must be at least 1x1")
        if self.bins < 2:
            raise ValueError("CLAHE needs at least 2 histogram bins")
        if not self.clip_limit > 0:
            raise ValueError("CLAHE clip limit must be positive")


def bin_index(img: np.ndarray, bins: int) -> np.ndarray:
    """Histogram bin of each sample for ``bins`` equal bins over [0, 1]."""
    return np.minimum((np.asarray(img) * bins).astype(np.int64), bins - 1)


def clip_histogram(hist: np.ndarray, cap: int) -> np.ndarray:
    """Clip counts at ``cap`` and hand the excess back uniformly.

    The integer remainder goes one count per bin starting at bin 0, so the
    total mass is preserved exactly.
    """
    hist = np.asarray(hist, dtype=np.int64)
    clipped = np.minimum(hist, cap)
    excess = int(hist.sum() - clipped.sum())
    if excess == 0:
        return clipped
    share, remainder = divmod(excess, hist.size)
    clipped += share
    clipped[:remainder] += 1
    return clipped


def _tile_edges(n: int, tiles: int) -> np.ndarray:
    return np.array([(i * n) // tiles for i in range(tiles + 1)], dtype=np.int64)


def _interp_axis(n: int, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """For each coordinate, the two neighbouring tile indices and the weight of the second."""
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    pos = np.arange(n, dtype=np.float64)
    hi = np.searchsorted(centers, pos, side="right")
    lo = np.clip(hi - 1, 0, len(centers) - 1)
    hi = np.clip(hi, 0, len(centers) - 1)
    span = centers[hi] - centers[lo]
    weight = np.where(span > 0, (pos - centers[lo]) / np.where(span > 0, span, 1.0), 0.0)
    return lo, hi, weight


def clahe(img: np.ndarray, cfg: ClaheConfig = ClaheConfig()) -> np.ndarray:
    """Equalize ``img`` tile by tile and blend tile mappings bilinearly.

    Each tile maps a sample in bin ``k`` to the clipped histogram's CDF at
    ``k``. A tile whose samples all fall in one bin maps every value to
    itself. Pixels outside the ring of tile centres use only the nearest
    tiles.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if h < cfg.tiles_y or w < cfg.tiles_x:
        raise ValueError(f"image {w}x{h} is smaller than the {cfg.tiles_x}x{cfg.tiles_y} tile grid")

    bins = cfg.bins
    idx = bin_index(img, bins)
    row_edges = _tile_edges(h, cfg.tiles_y)
    col_edges = _tile_edges(w, cfg.tiles_x)

    luts = np.empty((cfg.tiles_y, cfg.tiles_x, bins), dtype=np.float64)
    degenerate = np.zeros((cfg.tiles_y, cfg.tiles_x), dtype=bool)
    for ty in range(cfg.tiles_y):
        for tx in range(cfg.tiles_x):
            tile = idx[row_edges[ty] : row_edges[ty + 1], col_edges[tx] : col_edges[tx + 1]]
            hist = np.bincount(tile.ravel(), minlength=bins)
            n = tile.size
            if np.count_nonzero(hist) <= 1:
                degenerate[ty, tx] = True
                luts[ty, tx] = 0.0
                continue
            cap = max(1, int(cfg.clip_limit * n))
            luts[ty, tx] = np.cumsum(clip_histogram(hist, cap)) / n

    r0, r1, wy = _interp_axis(h, row_edges)
    c0, c1, wx = _interp_axis(w, col_edges)

    def mapped(rows, cols):
        rr = rows[:, None]
        cc = cols[None, :]
        return np.where(degenerate[rr, cc], img, luts[rr, cc, idx])

    m00 = mapped(r0, c0)
    m01 = mapped(r0, c1)
    m10 = mapped(r1, c0)
    m11 = mapped(r1, c1)
    wx = wx[None, :]
    top = m00 + wx * (m01 - m00)
    bottom = m10 + wx * (m11 - m10)
    out = top + wy[:, None] * (bottom - top)
    return np.clip(out, 0.0, 1.0)
