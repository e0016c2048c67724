"""DRIVE-style case discovery and loading."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image import SUPPORTED_EXTENSIONS, as_mask, load_image


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Case:
    id: str
    image_path: Path
    fov_path: Path
    truth_path: Path | None = None


@dataclass(frozen=True)
class DrivePatterns:
    """Directory and filename templates; ``{id}`` marks the case id."""

    image_dir: str = "images"
    image: str = "{id}_test"
    fov_dir: str = "mask"
    fov: str = "{id}_test_mask"
    truth_dir: str = "1st_manual"
    truth: str = "{id}_manual1"


def _index(directory: Path, template: str) -> dict[str, Path]:
    """Map case id -> file for every supported raster matching ``template``."""
    if not directory.is_dir():
        return {}
    head, _, tail = template.partition("{id}")
    pattern = re.compile(re.escape(head) + r"(?P<id>.+?)" + re.escape(tail) + r"$")
    found: dict[str, Path] = {}
    for p in sorted(directory.iterdir()):
        if not p.is_file() or p.suffix.lower() not in SUPPORTED_EXTENSIONS:
            continue
        m = pattern.match(p.stem)
        if m:
            # first match in sorted order wins when several extensions exist
            found.setdefault(m.group("id"), p)
    return found


def scan_drive(root: str | Path, patterns: DrivePatterns = DrivePatterns()) -> list[Case]:
    """Pair images, FOV masks and (optional) manual segmentations under ``root``."""
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"{root}: not a directory")
    images = _index(root / patterns.image_dir, patterns.image)
    masks = _index(root / patterns.fov_dir, patterns.fov)
    truths = _index(root / patterns.truth_dir, patterns.truth)
    if not images:
        raise DatasetError(f"{root}: no images matching {patterns.image_dir}/{patterns.image}.*")
    cases = []
    for cid in sorted(images):
        if cid not in masks:
            raise DatasetError(f"case {cid}: image {images[cid].name} has no matching FOV mask")
        cases.append(Case(cid, images[cid], masks[cid], truths.get(cid)))
    return cases


def read_manifest(path: str | Path) -> list[Case]:
    """Cases from a ``id,image,fov[,truth]`` manifest; paths relative to the manifest."""
    path = Path(path)
    base = path.parent
    cases = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) not in (3, 4) or not all(fields):
            raise DatasetError(f"{path}:{lineno}: expected 'id,image,fov[,truth]'")
        truth = base / fields[3] if len(fields) == 4 else None
        cases.append(Case(fields[0], base / fields[1], base / fields[2], truth))
    if not cases:
        raise DatasetError(f"{path}: manifest lists no cases")
    return sorted(cases, key=lambda c: c.id)


def load_case(case: Case) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Decode a case into (image, FOV mask, truth mask or None)."""
    img = load_image(case.image_path)
    fov = as_mask(load_image(case.fov_path))
    if fov.shape != img.shape[:2]:
        raise DatasetError(f"case {case.id}: FOV mask {fov.shape} does not match image {img.shape[:2]}")
    truth = None
    if case.truth_path is not None:
        truth = as_mask(load_image(case.truth_path))
        if truth.shape != img.shape[:2]:
            raise DatasetError(
                f"case {case.id}: manual segmentation {truth.shape} does not match image {img.shape[:2]}"
            )
    return img, fov, truth
