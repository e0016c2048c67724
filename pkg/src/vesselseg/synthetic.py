"""Synthetic fundus-like phantoms with exact vessel ground truth.

Used by the test-suite and for smoke runs when no real dataset is at hand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi


@dataclass
class Phantom:
    rgb: np.ndarray  # (H, W, 3) in [0, 1], 8-bit quantized
    fov: np.ndarray
    truth: np.ndarray


def _draw_polyline(shape, points) -> np.ndarray:
    """One-pixel centreline through densely resampled ``points`` (x, y)."""
    h, w = shape
    line = np.zeros(shape, dtype=bool)
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        n = int(math.ceil(max(abs(x1 - x0), abs(y1 - y0)) * 2)) + 1
        xs = np.rint(np.linspace(x0, x1, n)).astype(int)
        ys = np.rint(np.linspace(y0, y1, n)).astype(int)
        ok = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
        line[ys[ok], xs[ok]] = True
    return line


def _random_vessel(rng, start, angle, length, step=3.0, wiggle=0.12):
    x, y = start
    pts = [(x, y)]
    for _ in range(int(length / step)):
        angle += rng.normal(0.0, wiggle)
        x += step * math.cos(angle)
        y += step * math.sin(angle)
        pts.append((x, y))
    return pts


def make_phantom(size: int = 256, seed: int = 0, n_vessels: int = 10, noise: float = 0.006) -> Phantom:
    """Circular-FOV phantom: illumination gradient, bright disc, dark fovea and
    a set of dark curvilinear vessels 1-8 px wide."""
    rng = np.random.default_rng(seed)
    h = w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = (w - 1) / 2, (h - 1) / 2
    fov = (xx - cx) ** 2 + (yy - cy) ** 2 <= (0.46 * size) ** 2

    green = 0.42 + 0.08 * (xx / w) - 0.05 * (yy / h)
    disc_x, disc_y = cx + 0.28 * size, cy - 0.05 * size
    disc_r = 0.07 * size
    green += 0.35 * np.exp(-((xx - disc_x) ** 2 + (yy - disc_y) ** 2) / (2 * disc_r**2))
    fov_x, fov_y = cx - 0.12 * size, cy + 0.02 * size
    green -= 0.06 * np.exp(-((xx - fov_x) ** 2 + (yy - fov_y) ** 2) / (2 * (0.08 * size) ** 2))

    truth = np.zeros((h, w), dtype=bool)
    darkening = np.zeros((h, w))
    for i in range(n_vessels):
        width = [8, 6, 5, 4, 3, 3, 2, 2, 1, 1][i % 10]
        angle = math.pi + rng.uniform(-1.2, 1.2)
        pts = _random_vessel(rng, (disc_x, disc_y), angle, length=size * rng.uniform(0.45, 0.8))
        dist = ndi.distance_transform_edt(~_draw_polyline((h, w), pts))
        half = width / 2.0
        truth |= dist <= half
        contrast = 0.07 + 0.012 * width
        darkening = np.maximum(darkening, contrast * np.exp(-(dist**2) / (2 * max(half, 0.6) ** 2)))
    green -= darkening

    green += rng.normal(0.0, noise, size=(h, w))
    green = np.where(fov, green, 0.02)
    red = np.where(fov, np.clip(green * 1.6, 0, 1), 0.02)
    blue = np.where(fov, green * 0.3, 0.02)
    rgb = np.clip(np.stack([red, green, blue], axis=-1), 0.0, 1.0)
    rgb = np.rint(rgb * 255) / 255
    return Phantom(rgb=rgb, fov=fov, truth=truth & fov)
