"""Pixel-level segmentation metrics inside the field of view.

Counts follow the X/Y/Z/W naming: Z true positives, X false positives,
W true negatives, Y false negatives.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NAN = float("nan")
METRIC_NAMES = ("se", "sp", "acc", "auc", "kappa")


@dataclass(frozen=True)
class ConfusionCounts:
    Z: int  # true positives
    X: int  # false positives
    W: int  # true negatives
    Y: int  # false negatives

    def __post_init__(self):
        if min(self.Z, self.X, self.W, self.Y) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.Z + self.X + self.W + self.Y


@dataclass
class MetricsRecord:
    image_id: str
    se: float = NAN
    sp: float = NAN
    acc: float = NAN
    kappa: float = NAN
    auc: float = NAN
    p_o: float = NAN
    p_e: float = NAN

    def values(self) -> list[float]:
        return [getattr(self, name) for name in METRIC_NAMES]


@dataclass
class RocCurve:
    fpr: np.ndarray  # XR = 1 - Sp
    tpr: np.ndarray  # ZR = Se
    thresholds: list[float | None] = field(default_factory=list)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def _check_shapes(*masks: np.ndarray) -> None:
    shapes = {np.shape(m) for m in masks}
    if len(shapes) != 1:
        raise ValueError(f"dimension mismatch between masks: {sorted(shapes)}")


def confusion(pred: np.ndarray, truth: np.ndarray, fov: np.ndarray | None = None) -> ConfusionCounts:
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if fov is None:
        fov = np.ones(pred.shape, dtype=bool)
    fov = np.asarray(fov, dtype=bool)
    _check_shapes(pred, truth, fov)
    p, t = pred[fov], truth[fov]
    return ConfusionCounts(
        Z=int(np.count_nonzero(p & t)),
        X=int(np.count_nonzero(p & ~t)),
        W=int(np.count_nonzero(~p & ~t)),
        Y=int(np.count_nonzero(~p & t)),
    )


def _ratio(num: int, den: int) -> float:
    return num / den if den > 0 else NAN


def basic_metrics(c: ConfusionCounts) -> tuple[float, float, float]:
    """(Se, Sp, Acc); a metric with a zero denominator is NaN."""
    return (
        _ratio(c.Z, c.Z + c.Y),
        _ratio(c.W, c.X + c.W),
        _ratio(c.Z + c.W, c.total),
    )


def agreement(c: ConfusionCounts) -> tuple[float, float]:
    """Observed agreement p_o and chance agreement p_e."""
    n = c.total
    if n == 0:
        raise ValueError("kappa is undefined for an empty FOV")
    p_o = (c.Z + c.W) / n
    p_e = ((c.Z + c.X) * (c.Z + c.Y) + (c.W + c.X) * (c.W + c.Y)) / (n * n)
    return p_o, p_e


def kappa(c: ConfusionCounts) -> float:
    """Cohen's kappa; 1 when both raters agree on a single constant class."""
    p_o, p_e = agreement(c)
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


def roc_thresholds(steps: int = 100) -> list[float]:
    """1.00, 0.99, ..., 0.00 for the default 100 steps."""
    return [k / steps for k in range(steps, -1, -1)]


def roc_curve(
    response: np.ndarray, truth: np.ndarray, fov: np.ndarray | None = None, steps: int = 100
) -> RocCurve:
    """Sweep a global threshold from 1 to 0 and record (1 - Sp, Se).

    Each threshold labels samples strictly above it as vessel. The curve is
    closed with (0, 0) and (1, 1) when the sweep does not reach them.
    """
    response = np.asarray(response, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    if fov is None:
        fov = np.ones(truth.shape, dtype=bool)
    fov = np.asarray(fov, dtype=bool)
    _check_shapes(response, truth, fov)
    r, t = response[fov], truth[fov]
    pos = int(np.count_nonzero(t))
    neg = t.size - pos
    if pos == 0 or neg == 0:
        raise ValueError("ROC needs both vessel and background pixels inside the FOV")

    # one sort, then counts above each threshold by binary search
    pos_sorted = np.sort(r[t])
    neg_sorted = np.sort(r[~t])
    thresholds = roc_thresholds(steps)
    th = np.asarray(thresholds)
    tp = pos - np.searchsorted(pos_sorted, th, side="right")
    fp = neg - np.searchsorted(neg_sorted, th, side="right")
    tpr = tp / pos
    fpr = fp / neg

    fpr_l, tpr_l, th_l = fpr.tolist(), tpr.tolist(), list(thresholds)
    if (fpr_l[0], tpr_l[0]) != (0.0, 0.0):
        fpr_l.insert(0, 0.0)
        tpr_l.insert(0, 0.0)
        th_l.insert(0, None)
    if (fpr_l[-1], tpr_l[-1]) != (1.0, 1.0):
        fpr_l.append(1.0)
        tpr_l.append(1.0)
        th_l.append(None)
    return RocCurve(np.array(fpr_l), np.array(tpr_l), th_l)


def auc_trapezoid(curve: RocCurve) -> float:
    """Trapezoidal area under the curve ordered by (XR, ZR).

    Points sharing an XR become vertical steps and add no area.
    """
    order = np.lexsort((curve.tpr, curve.fpr))
    x = curve.fpr[order]
    y = curve.tpr[order]
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))


def roc_auc(
    response: np.ndarray, truth: np.ndarray, fov: np.ndarray | None = None, steps: int = 100
) -> tuple[RocCurve, float]:
    curve = roc_curve(response, truth, fov, steps)
    return curve, auc_trapezoid(curve)


def evaluate(
    image_id: str,
    pred: np.ndarray,
    truth: np.ndarray,
    fov: np.ndarray | None = None,
    response: np.ndarray | None = None,
) -> MetricsRecord:
    """All metrics for one image; AUC only when a soft response is given."""
    c = confusion(pred, truth, fov)
    se, sp, acc = basic_metrics(c)
    rec = MetricsRecord(image_id=image_id, se=se, sp=sp, acc=acc)
    if c.total:
        rec.p_o, rec.p_e = agreement(c)
        rec.kappa = kappa(c)
    if response is not None:
        try:
            rec.auc = roc_auc(response, truth, fov)[1]
        except ValueError:
            rec.auc = NAN
    return rec


def summarize(records: Sequence[MetricsRecord]) -> tuple[list[float], list[float]]:
    """Unweighted mean and sample standard deviation (ddof=1) of each metric.

    NaN entries are skipped; a single record has standard deviation 0.
    """
    means, stds = [], []
    for name in METRIC_NAMES:
        vals = [getattr(r, name) for r in records if not math.isnan(getattr(r, name))]
        if not vals:
            means.append(NAN)
            stds.append(NAN)
            continue
        arr = np.asarray(vals, dtype=np.float64)
        means.append(float(arr.mean()))
        stds.append(float(arr.std(ddof=1)) if arr.size > 1 else 0.0)
    return means, stds


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.4f}"


def format_report(records: Iterable[MetricsRecord]) -> str:
    """CSV report: one row per image, then ``average`` and ``stddev`` rows."""
    records = list(records)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["image", *METRIC_NAMES])
    for r in records:
        writer.writerow([r.image_id, *(_fmt(v) for v in r.values())])
    if records:
        means, stds = summarize(records)
        writer.writerow(["average", *(_fmt(v) for v in means)])
        writer.writerow(["stddev", *(_fmt(v) for v in stds)])
    return buf.getvalue()


def parse_report(text: str) -> dict[str, dict[str, float]]:
    rows = {}
    for row in csv.DictReader(io.StringIO(text)):
        rows[row["image"]] = {k: float(row[k]) for k in METRIC_NAMES}
    return rows
