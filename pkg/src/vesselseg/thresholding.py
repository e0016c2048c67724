"""Global Otsu thresholding restricted to the field of view."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clahe import bin_index


class UnthresholdableImage(ValueError):
    """The FOV histogram occupies a single bin, so no split exists."""


@dataclass(frozen=True)
class Histogram:
    counts: np.ndarray

    @property
    def bins(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def fov_histogram(img: np.ndarray, fov: np.ndarray | None = None, bins: int = 256) -> Histogram:
    if bins < 2:
        raise ValueError("need at least 2 bins")
    values = np.asarray(img) if fov is None else np.asarray(img)[np.asarray(fov, dtype=bool)]
    return Histogram(np.bincount(bin_index(values, bins).ravel(), minlength=bins).astype(np.int64))


def otsu_split(hist: Histogram) -> int:
    """Last bin index of the lower class maximizing between-class variance.

    The variance ratio is compared in exact integer arithmetic:
    sigma_B² ∝ (n1 s0 - n0 s1)² / (n0 n1), where n and s are the count and
    the sum of bin indices per class. Ties go to the lowest index.
    """
    counts = [int(c) for c in hist.counts]
    if sum(1 for c in counts if c) < 2:
        raise UnthresholdableImage("histogram has a single occupied bin")
    n_total = sum(counts)
    s_total = sum(i * c for i, c in enumerate(counts))
    best_k, best_num, best_den = -1, -1, 1
    n0 = s0 = 0
    for k in range(len(counts) - 1):
        n0 += counts[k]
        s0 += k * counts[k]
        n1 = n_total - n0
        if n0 == 0 or n1 == 0:
            continue
        s1 = s_total - s0
        num = (n1 * s0 - n0 * s1) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_k, best_num, best_den = k, num, den
    return best_k


def otsu_threshold(img: np.ndarray, fov: np.ndarray | None = None, bins: int = 256) -> float:
    """Otsu threshold of the FOV samples, reported as the upper edge of the lower class."""
    return (otsu_split(fov_histogram(img, fov, bins)) + 1) / bins


def binarize(img: np.ndarray, t: float, fov: np.ndarray | None = None) -> np.ndarray:
    """Vessel where the sample strictly exceeds ``t`` inside the FOV."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold {t} outside [0, 1]")
    out = np.asarray(img) > t
    if fov is not None:
        out &= np.asarray(fov, dtype=bool)
    return out
