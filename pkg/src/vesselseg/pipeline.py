"""End-to-end segmentation: green channel -> inversion -> FOV masking ->
white top-hat -> CLAHE -> Gabor bank maximum -> normalization -> Otsu.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import gabor, image, morphology, thresholding
from .clahe import clahe as equalize
from .config import PipelineConfig
from .dataset import Case, load_case
from .evaluation import MetricsRecord, evaluate, format_report

log = logging.getLogger(__name__)

STAGE_ORDER = ("green", "inverted", "masked", "tophat", "clahe", "response", "binary")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:  # re-raised with the stage attached
        raise StageError(name, exc) from exc


@dataclass
class SegmentationResult:
    case_id: str
    response: np.ndarray
    binary: np.ndarray
    threshold_used: float
    backdrop: np.ndarray
    metrics: MetricsRecord | None = None
    stages: dict[str, np.ndarray] = field(default_factory=dict)


def segment(
    img: np.ndarray,
    fov: np.ndarray,
    cfg: PipelineConfig = PipelineConfig(),
    bank: Sequence[gabor.ComplexKernel] | None = None,
    keep_stages: bool = False,
    case_id: str = "",
) -> SegmentationResult:
    """Run the segmentation chain on an in-memory image and FOV mask."""
    stages: dict[str, np.ndarray] = {}
    fov = np.asarray(fov, dtype=bool)

    with _stage("green"):
        green = image.green_channel(img)
        if green.shape != fov.shape:
            raise ValueError(f"FOV mask {fov.shape} does not match image {green.shape}")
    with _stage("invert"):
        inverted = image.invert(green)
    with _stage("mask"):
        masked = image.apply_mask(inverted, fov)
    with _stage("tophat"):
        tophat = morphology.white_top_hat(masked, morphology.disk_se(cfg.se_diameter))
    with _stage("clahe"):
        enhanced = image.apply_mask(equalize(tophat, cfg.clahe), fov)
    with _stage("gabor"):
        if bank is None:
            bank = gabor.build_bank(cfg.bank)
        raw = gabor.max_response(enhanced, bank, method=cfg.gabor_method)
    with _stage("normalize"):
        response = gabor.normalize01(raw, fov)
    with _stage("threshold"):
        if cfg.threshold_method == "fixed":
            t = cfg.threshold_value
        else:
            try:
                t = thresholding.otsu_threshold(response, fov, cfg.threshold_bins)
            except thresholding.UnthresholdableImage as exc:
                warnings.warn(f"{case_id or 'image'}: {exc}; producing an empty vessel map",
                              RuntimeWarning, stacklevel=2)
                t = 1.0
        binary = thresholding.binarize(response, t, fov)

    if keep_stages:
        stages = {
            "green": green,
            "inverted": inverted,
            "masked": masked,
            "tophat": tophat,
            "clahe": enhanced,
            "response": response,
            "binary": binary,
        }
    return SegmentationResult(case_id, response, binary, t, green, stages=stages)


def evaluation_fov(fov: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    return image.erode_mask(fov, cfg.eval_erode_fov) if cfg.eval_erode_fov else fov


def run_single(
    cfg: PipelineConfig,
    case: Case,
    bank: Sequence[gabor.ComplexKernel] | None = None,
    keep_stages: bool = False,
) -> SegmentationResult:
    """Segment one case and score it when a manual segmentation is present."""
    with _stage("load"):
        img, fov, truth = load_case(case)
    result = segment(img, fov, cfg, bank=bank, keep_stages=keep_stages, case_id=case.id)
    if truth is not None:
        with _stage("evaluate"):
            result.metrics = evaluate(case.id, result.binary, truth, evaluation_fov(fov, cfg), result.response)
    return result


def overlay(result: SegmentationResult, truth: np.ndarray, fov: np.ndarray | None = None) -> np.ndarray:
    """RGB uint8 comparison map: TP green, FP red, FN blue, rest gray backdrop."""
    truth = np.asarray(truth, dtype=bool)
    pred = result.binary
    if fov is None:
        fov = np.ones(truth.shape, dtype=bool)
    if not (pred.shape == truth.shape == fov.shape):
        raise ValueError("overlay inputs differ in size")
    gray = image.to_uint8(result.backdrop)
    rgb = np.stack([gray, gray, gray], axis=-1)
    tp = pred & truth & fov
    fp = pred & ~truth & fov
    fn = ~pred & truth & fov
    rgb[tp] = (0, 255, 0)
    rgb[fp] = (255, 0, 0)
    rgb[fn] = (0, 0, 255)
    return rgb


def emit_overlay(result: SegmentationResult, truth: np.ndarray, fov: np.ndarray | None, path: str | Path) -> Path:
    path = Path(path)
    image.save_png(path, overlay(result, truth, fov))
    return path


def write_outputs(result: SegmentationResult, out_dir: Path, truth=None, fov=None, dump_stages=False) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    cid = result.case_id or "image"
    image.save_png(out_dir / f"{cid}_response.png", result.response)
    image.save_png(out_dir / f"{cid}_binary.png", result.binary)
    if truth is not None:
        emit_overlay(result, truth, fov, out_dir / f"{cid}_overlay.png")
    if dump_stages:
        stage_dir = out_dir / "stages"
        for i, name in enumerate(STAGE_ORDER):
            if name in result.stages:
                image.save_png(stage_dir / f"{cid}_{i}_{name}.png", result.stages[name])


@dataclass
class CaseOutcome:
    case_id: str
    metrics: MetricsRecord | None = None
    threshold: float | None = None
    error: str | None = None


def _process_case(cfg: PipelineConfig, case: Case, out_dir: Path | None, dump_stages: bool) -> CaseOutcome:
    try:
        result = run_single(cfg, case, keep_stages=dump_stages)
        if out_dir is not None:
            truth = None
            fov = None
            if case.truth_path is not None:
                _, fov, truth = load_case(case)
                fov = evaluation_fov(fov, cfg)
            write_outputs(result, out_dir, truth, fov, dump_stages)
        return CaseOutcome(case.id, result.metrics, result.threshold_used)
    except Exception as exc:  # batch keeps going; failure is reported per case
        log.error("case %s failed: %s", case.id, exc)
        return CaseOutcome(case.id, error=str(exc))


@dataclass
class BatchResult:
    outcomes: list[CaseOutcome]
    report: str

    @property
    def failures(self) -> list[CaseOutcome]:
        return [o for o in self.outcomes if o.error is not None]

    @property
    def records(self) -> list[MetricsRecord]:
        return [o.metrics for o in self.outcomes if o.metrics is not None]


def run_batch(
    cfg: PipelineConfig,
    cases: Sequence[Case],
    out_dir: Path | None = None,
    report_path: Path | None = None,
    dump_stages: bool = False,
) -> BatchResult:
    """Segment every case, optionally with a process pool, and build the CSV report.

    Results are collected in case order, so output does not depend on the
    worker count.
    """
    if not cases:
        raise ValueError("batch needs at least one case")
    if cfg.workers > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_process_case, cfg, c, out_dir, dump_stages) for c in cases]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_process_case(cfg, c, out_dir, dump_stages) for c in cases]
    records = [o.metrics for o in outcomes if o.metrics is not None]
    report = format_report(records)
    if report_path is not None:
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(report, encoding="utf-8")
    return BatchResult(outcomes, report)
