"""Image containers, raster I/O and the first preprocessing steps.

Images are plain numpy arrays:

* gray image  -- ``float64`` array of shape (H, W), samples in [0, 1]
* RGB image   -- ``float64`` array of shape (H, W, 3), samples in [0, 1]
* binary mask -- ``bool`` array of shape (H, W)

8-bit data maps to floats by ``v / 255`` and back by ``round(s * 255)``
with clamping.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .morphology import disk_se, erode_binary

SUPPORTED_EXTENSIONS = (".png", ".pgm", ".ppm", ".pnm", ".tif", ".tiff", ".gif")


class ImageError(ValueError):
    """Raised when a raster cannot be decoded or has invalid content."""


def load_image(path: str | Path) -> np.ndarray:
    """Read an 8-bit raster into a normalized float array.

    Grayscale and palette files with gray palettes become (H, W) arrays;
    colour files become (H, W, 3). Alpha channels are dropped.
    """
    path = Path(path)
    if path.suffix.lower() not in SUPPORTED_EXTENSIONS:
        raise ImageError(f"{path}: unsupported format {path.suffix!r}")
    try:
        with Image.open(path) as im:
            im.load()
            data = _to_array(im)
    except (OSError, UnidentifiedImageError, SyntaxError) as exc:
        raise ImageError(f"{path}: cannot decode image ({exc})") from exc
    if data.shape[0] == 0 or data.shape[1] == 0:
        raise ImageError(f"{path}: zero-dimension image")
    return data.astype(np.float64) / 255.0


def _to_array(im: Image.Image) -> np.ndarray:
    mode = im.mode
    if mode == "P":
        im = im.convert("RGB")
        arr = np.asarray(im)
        if np.array_equal(arr[..., 0], arr[..., 1]) and np.array_equal(arr[..., 1], arr[..., 2]):
            return arr[..., 0].copy()
        return arr.copy()
    if mode in ("1", "L"):
        return np.asarray(im.convert("L")).copy()
    if mode == "LA":
        return np.asarray(im.convert("L")).copy()
    if mode in ("RGB", "RGBA", "CMYK", "YCbCr"):
        return np.asarray(im.convert("RGB")).copy()
    if mode in ("I;16", "I;16B", "I;16L", "I", "F"):
        raise ImageError(f"unsupported sample depth (mode {mode}); only 8-bit images are handled")
    raise ImageError(f"unsupported image mode {mode}")


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Quantize [0, 1] samples to 8 bits (round half to even, clamped)."""
    return np.clip(np.rint(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def save_png(path: str | Path, img: np.ndarray) -> None:
    """Write a gray, RGB or boolean array as an 8-bit PNG."""
    arr = np.asarray(img)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    elif arr.dtype != np.uint8:
        arr = to_uint8(arr)
    if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
        raise ImageError(f"cannot write array of shape {arr.shape} as PNG")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed encoder settings keep output bytes reproducible
    Image.fromarray(arr).save(path, format="PNG", optimize=False, compress_level=6)


def split_channels(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return the red, green and blue planes of an RGB image."""
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ImageError(f"expected an RGB image of shape (H, W, 3), got {rgb.shape}")
    return rgb[..., 0].copy(), rgb[..., 1].copy(), rgb[..., 2].copy()


def merge_channels(r: np.ndarray, g: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack([r, g, b], axis=-1)


def green_channel(img: np.ndarray) -> np.ndarray:
    """Green plane of an RGB image; gray images pass through unchanged."""
    if img.ndim == 2:
        return img.astype(np.float64, copy=True)
    return split_channels(img)[1]


def invert(img: np.ndarray) -> np.ndarray:
    return 1.0 - img


def _check_same_shape(img: np.ndarray, mask: np.ndarray) -> None:
    if img.shape[:2] != mask.shape:
        raise ValueError(f"dimension mismatch: image {img.shape[:2]} vs mask {mask.shape}")


def apply_mask(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Zero every sample outside ``mask``."""
    _check_same_shape(img, mask)
    return np.where(mask, img, 0.0)


def as_mask(img: np.ndarray) -> np.ndarray:
    """Binarize a decoded raster at 0.5 (colour rasters use their mean)."""
    if img.ndim == 3:
        img = img.mean(axis=2)
    return img >= 0.5


def erode_mask(mask: np.ndarray, radius: int) -> np.ndarray:
    """Shrink a mask by a disk of ``radius`` pixels.

    A pixel survives only if every pixel of the disk around it is set;
    pixels outside the frame count as unset.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    mask = np.asarray(mask, dtype=bool)
    if radius == 0:
        return mask.copy()
    return erode_binary(mask, disk_se(2 * radius + 1))
