"""2D Gabor wavelet bank and maximum-modulus filtering.

Coordinates: ``x`` runs along columns (left to right) and ``y`` along rows
(top to bottom). The carrier of a kernel with orientation ``theta``
oscillates along ``u = x cos(theta) + y sin(theta)``, so it responds best to
a vessel whose cross-section lies along that direction, i.e. a vessel whose
axis is perpendicular to ``theta``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve

DEFAULT_OMEGA0 = (0.7, 0.9, 1.1, 1.3)


class KernelTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class GaborParams:
    omega0: float
    theta: float
    K: float = 2.2
    scale_a: float = 1.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if not 0 <= self.theta < math.pi:
            raise ValueError("theta must lie in [0, pi)")
        if not self.K > 0:
            raise ValueError("K must be positive")

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)


@dataclass(frozen=True)
class ComplexKernel:
    params: GaborParams
    coefficients: np.ndarray = field(repr=False)

    @property
    def radius(self) -> int:
        return self.coefficients.shape[0] // 2

    @property
    def size(self) -> int:
        return self.coefficients.shape[0]


@dataclass(frozen=True)
class BankConfig:
    omega0_values: tuple[float, ...] = DEFAULT_OMEGA0
    theta_start: float = 0.0
    theta_stop: float = 180.0
    theta_step: float = 20.0
    K: float = 2.2
    truncation_sigmas: float = 3.5
    max_radius: int = 128

    def __post_init__(self):
        if not self.omega0_values:
            raise ValueError("omega0 grid is empty")
        if not self.theta_step > 0:
            raise ValueError("theta step must be positive")
        if not (0 <= self.theta_start < self.theta_stop <= 180):
            raise ValueError("theta grid must lie within [0, 180) degrees")

    def thetas_deg(self) -> list[float]:
        # integer stepping avoids accumulated float drift in the grid
        n = math.ceil((self.theta_stop - self.theta_start) / self.theta_step - 1e-9)
        return [self.theta_start + i * self.theta_step for i in range(n)]


def envelope_sigmas(omega0: float, K: float) -> tuple[float, float]:
    """Gaussian widths along the carrier (u) and along the vessel axis (v)."""
    return K / omega0, 2.0 * K / omega0


def kernel_radius(omega0: float, K: float, truncation_sigmas: float) -> int:
    sigma_major = envelope_sigmas(omega0, K)[1]
    # tolerance keeps products like 3.5 * 6.2857... = 22.000000000000004 at 22
    return int(math.ceil(truncation_sigmas * sigma_major - 1e-9))


def gabor_kernel(p: GaborParams, truncation_sigmas: float = 3.5, max_radius: int = 128) -> ComplexKernel:
    """Sample the Gabor wavelet on an integer grid and scale it to unit L2 norm.

    psi(x, y) = omega0 / (sqrt(2 pi) K)
                * exp(-omega0² / (8 K²) * (4 u² + v²))
                * (exp(i omega0 u) - exp(-K² / 2))
    """
    if not truncation_sigmas > 0:
        raise ValueError("truncation_sigmas must be positive")
    radius = kernel_radius(p.omega0, p.K, truncation_sigmas)
    if radius > max_radius:
        raise KernelTooLarge(
            f"kernel radius {radius} exceeds cap {max_radius} (omega0={p.omega0} is too small)"
        )
    coords = np.arange(-radius, radius + 1, dtype=np.float64)
    y, x = np.meshgrid(coords, coords, indexing="ij")
    c, s = math.cos(p.theta), math.sin(p.theta)
    u = x * c + y * s
    v = -x * s + y * c
    w0, K = p.omega0, p.K
    envelope = (w0 / (math.sqrt(2 * math.pi) * K)) * np.exp(-(w0**2) / (8 * K**2) * (4 * u**2 + v**2))
    psi = envelope * (np.exp(1j * w0 * u) - math.exp(-(K**2) / 2))
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2))
    return ComplexKernel(params=p, coefficients=psi)


def build_bank(cfg: BankConfig = BankConfig()) -> list[ComplexKernel]:
    """One kernel per (omega0, theta) grid point, omega0-major order."""
    return [
        gabor_kernel(
            GaborParams(omega0=w0, theta=math.radians(t), K=cfg.K),
            truncation_sigmas=cfg.truncation_sigmas,
            max_radius=cfg.max_radius,
        )
        for w0 in cfg.omega0_values
        for t in cfg.thetas_deg()
    ]


def convolve_direct(img: np.ndarray, kernel: ComplexKernel) -> np.ndarray:
    """Reference spatial correlation with reflect padding.

    out(y0, x0) = sum_{x, y} img(y0 + y, x0 + x) * k(x, y)
    """
    img = np.asarray(img, dtype=np.float64)
    k = kernel.coefficients
    r = kernel.radius
    h, w = img.shape
    padded = np.pad(img, r, mode="reflect")
    out = np.zeros((h, w), dtype=np.complex128)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            out += k[dy + r, dx + r] * padded[r + dy : r + dy + h, r + dx : r + dx + w]
    return out


def convolve_fft(img: np.ndarray, kernel: ComplexKernel) -> np.ndarray:
    """FFT evaluation of :func:`convolve_direct`."""
    img = np.asarray(img, dtype=np.float64)
    r = kernel.radius
    padded = np.pad(img, r, mode="reflect")
    flipped = kernel.coefficients[::-1, ::-1]
    return fftconvolve(padded, flipped, mode="valid")


def convolve(img: np.ndarray, kernel: ComplexKernel, method: str = "fft") -> np.ndarray:
    """Correlate ``img`` with a complex kernel; output has the image's shape."""
    img = np.asarray(img)
    if img.size < 2:
        raise ValueError("image must be larger than 1x1")
    if method == "fft":
        return convolve_fft(img, kernel)
    if method == "direct":
        return convolve_direct(img, kernel)
    raise ValueError(f"unknown convolution method {method!r}")


def max_response(
    img: np.ndarray,
    bank: Sequence[ComplexKernel],
    method: str = "fft",
    return_argmax: bool = False,
):
    """Per-pixel maximum of |response| over the bank.

    With ``return_argmax`` the index of the winning kernel is returned too
    (first index wins ties).
    """
    if not bank:
        raise ValueError("filter bank is empty")
    best = None
    arg = None
    for i, k in enumerate(bank):
        mag = np.abs(convolve(img, k, method))
        if best is None:
            best = mag
            arg = np.zeros(mag.shape, dtype=np.int64)
        else:
            better = mag > best
            best = np.where(better, mag, best)
            arg[better] = i
    if return_argmax:
        return best, arg
    return best


class DegenerateFieldWarning(UserWarning):
    pass


def normalize01(field_: np.ndarray, fov: np.ndarray) -> np.ndarray:
    """Affinely map the FOV range of ``field_`` onto [0, 1]; zero outside the FOV.

    A field that is constant over the FOV maps to all zeros and emits a
    :class:`DegenerateFieldWarning`.
    """
    field_ = np.asarray(field_, dtype=np.float64)
    fov = np.asarray(fov, dtype=bool)
    if field_.shape != fov.shape:
        raise ValueError(f"dimension mismatch: field {field_.shape} vs FOV {fov.shape}")
    out = np.zeros_like(field_)
    if not fov.any():
        warnings.warn("empty FOV; normalized field is all zeros", DegenerateFieldWarning, stacklevel=2)
        return out
    inside = field_[fov]
    lo, hi = inside.min(), inside.max()
    if not hi > lo:
        warnings.warn("field is constant over the FOV; normalized field is all zeros",
                      DegenerateFieldWarning, stacklevel=2)
        return out
    out[fov] = (inside - lo) / (hi - lo)
    return out
