"""Command-line entry point.

    vesselseg segment   --input IMG --fov MASK [--truth GT] --out DIR
    vesselseg batch     (--drive-root DIR | --manifest FILE) --out DIR --report CSV
    vesselseg evaluate  --input PRED --truth GT [--fov MASK]
    vesselseg roc       --input RESPONSE --truth GT [--fov MASK]
    vesselseg bank-dump --out DIR

Exit codes: 0 success, 1 at least one batch case failed, 2 configuration
or I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import gabor
from .config import ConfigError, PipelineConfig, load_config, with_overrides
from .dataset import Case, DatasetError, read_manifest, scan_drive
from .evaluation import evaluate, format_report, roc_auc
from .image import ImageError, as_mask, load_image, save_png
from .pipeline import StageError, run_batch, run_single, write_outputs

log = logging.getLogger("vesselseg")

EXIT_OK, EXIT_CASE_FAILED, EXIT_USAGE = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat 'section.key = value' config file")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--report", type=Path, help="CSV report path")
    p.add_argument("--workers", type=int, help="worker processes for batch runs")
    p.add_argument("--dump-stages", action="store_true", help="write every intermediate stage as PNG")


def get_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vesselseg", description="Unsupervised retinal vessel segmentation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment a single image")
    _common(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--fov", type=Path, required=True)
    p.add_argument("--truth", type=Path)

    p = sub.add_parser("batch", help="segment a dataset tree or manifest")
    _common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--drive-root", type=Path)
    src.add_argument("--manifest", type=Path)

    p = sub.add_parser("evaluate", help="score a binary prediction against ground truth")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--fov", type=Path)
    p.add_argument("--report", type=Path)

    p = sub.add_parser("roc", help="ROC curve and AUC of a soft response")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--fov", type=Path)
    p.add_argument("--report", type=Path, help="write the curve as CSV")

    p = sub.add_parser("bank-dump", help="write the Gabor kernels as PNG triplets")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    return with_overrides(cfg, workers=getattr(args, "workers", None), output=getattr(args, "out", None))


def cmd_segment(args) -> int:
    cfg = _config(args)
    case = Case(args.input.stem, args.input, args.fov, args.truth)
    result = run_single(cfg, case, keep_stages=args.dump_stages)
    if cfg.output is not None:
        truth = fov = None
        if args.truth is not None:
            fov = as_mask(load_image(args.fov))
            truth = as_mask(load_image(args.truth))
        write_outputs(result, cfg.output, truth, fov, args.dump_stages)
    print(f"threshold {result.threshold_used:.6f}, vessel pixels {int(result.binary.sum())}")
    if result.metrics is not None:
        report = format_report([result.metrics])
        print(report, end="")
        if args.report is not None:
            args.report.parent.mkdir(parents=True, exist_ok=True)
            args.report.write_text(report, encoding="utf-8")
    return EXIT_OK


def cmd_batch(args) -> int:
    cfg = _config(args)
    cases = scan_drive(args.drive_root) if args.drive_root else read_manifest(args.manifest)
    report_path = args.report
    if report_path is None and cfg.output is not None:
        report_path = cfg.output / "report.csv"
    batch = run_batch(cfg, cases, cfg.output, report_path, args.dump_stages)
    print(batch.report, end="")
    for f in batch.failures:
        print(f"FAILED {f.case_id}: {f.error}", file=sys.stderr)
    return EXIT_CASE_FAILED if batch.failures else EXIT_OK


def cmd_evaluate(args) -> int:
    pred = as_mask(load_image(args.input))
    truth = as_mask(load_image(args.truth))
    fov = as_mask(load_image(args.fov)) if args.fov else None
    rec = evaluate(args.input.stem, pred, truth, fov)
    report = format_report([rec])
    print(report, end="")
    if args.report is not None:
        args.report.write_text(report, encoding="utf-8")
    return EXIT_OK


def cmd_roc(args) -> int:
    response = load_image(args.input)
    if response.ndim == 3:
        response = response.mean(axis=2)
    truth = as_mask(load_image(args.truth))
    fov = as_mask(load_image(args.fov)) if args.fov else None
    curve, auc = roc_auc(response, truth, fov)
    print(f"auc {auc:.4f}")
    if args.report is not None:
        lines = ["threshold,fpr,tpr"]
        for t, x, y in zip(curve.thresholds, curve.fpr, curve.tpr):
            lines.append(f"{'' if t is None else f'{t:.2f}'},{x:.6f},{y:.6f}")
        args.report.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def _scaled(a: np.ndarray, symmetric: bool) -> np.ndarray:
    if symmetric:
        m = np.abs(a).max()
        return 0.5 + 0.5 * a / m if m > 0 else np.full(a.shape, 0.5)
    m = a.max()
    return a / m if m > 0 else a


def cmd_bank_dump(args) -> int:
    cfg = load_config(args.config)
    for k in gabor.build_bank(cfg.bank):
        tag = f"w{k.params.omega0:.2f}_t{round(k.params.theta_deg):03d}"
        c = k.coefficients
        save_png(args.out / f"{tag}_real.png", _scaled(c.real, True))
        save_png(args.out / f"{tag}_imag.png", _scaled(c.imag, True))
        save_png(args.out / f"{tag}_mag.png", _scaled(np.abs(c), False))
    print(f"wrote {3 * len(cfg.bank.omega0_values) * len(cfg.bank.thetas_deg())} kernel images to {args.out}")
    return EXIT_OK


COMMANDS = {
    "segment": cmd_segment,
    "batch": cmd_batch,
    "evaluate": cmd_evaluate,
    "roc": cmd_roc,
    "bank-dump": cmd_bank_dump,
}


def main(argv: list[str] | None = None) -> int:
    args = get_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DatasetError, ImageError, OSError, StageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
