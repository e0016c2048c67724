"""Grayscale morphology with flat disk structuring elements."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StructuringElement:
    """Flat structuring element given as integer (dx, dy) offsets.

    ``dx`` runs along columns and ``dy`` along rows.
    """

    offsets: tuple[tuple[int, int], ...]
    diameter: int

    @property
    def radius(self) -> int:
        return max(max(abs(dx), abs(dy)) for dx, dy in self.offsets)

    def footprint(self) -> np.ndarray:
        """Boolean (2r+1, 2r+1) array view of the offsets."""
        r = self.radius
        fp = np.zeros((2 * r + 1, 2 * r + 1), dtype=bool)
        for dx, dy in self.offsets:
            fp[dy + r, dx + r] = True
        return fp

    def __len__(self) -> int:
        return len(self.offsets)


def disk_se(diameter: int) -> StructuringElement:
    """Discrete disk: all offsets with dx² + dy² <= ((diameter - 1) / 2)².

    >>> len(disk_se(11))
    81
    """
    if diameter < 1 or diameter % 2 == 0:
        raise ValueError(f"disk diameter must be odd and >= 1, got {diameter}")
    r = (diameter - 1) // 2
    offsets = tuple(
        (dx, dy)
        for dy in range(-r, r + 1)
        for dx in range(-r, r + 1)
        if dx * dx + dy * dy <= r * r
    )
    return StructuringElement(offsets=offsets, diameter=diameter)


def _rank_filter(img: np.ndarray, se: StructuringElement, reduce, pad_mode: str, **pad_kw) -> np.ndarray:
    img = np.asarray(img)
    r = se.radius
    padded = np.pad(img, r, mode=pad_mode, **pad_kw)
    h, w = img.shape
    out = None
    for dx, dy in se.offsets:
        window = padded[r + dy : r + dy + h, r + dx : r + dx + w]
        out = window.copy() if out is None else reduce(out, window, out=out)
    return out


def erode(img: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Minimum of ``img`` over the SE neighbourhood, edge samples replicated."""
    return _rank_filter(img, se, np.minimum, "edge")


def dilate(img: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Maximum of ``img`` over the SE neighbourhood, edge samples replicated."""
    return _rank_filter(img, se, np.maximum, "edge")


def open(img: np.ndarray, se: StructuringElement) -> np.ndarray:  # noqa: A001
    return dilate(erode(img, se), se)


opening = open


def white_top_hat(img: np.ndarray, se: StructuringElement) -> np.ndarray:
    """``img`` minus its opening: keeps bright detail narrower than the SE."""
    return np.clip(img - open(img, se), 0.0, 1.0)


def erode_binary(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Binary erosion where pixels beyond the frame count as background."""
    return _rank_filter(np.asarray(mask, dtype=bool), se, np.logical_and, "constant", constant_values=False)
