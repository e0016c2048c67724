"""Pipeline configuration and its flat ``section.key = value`` text format.

An empty file yields the published settings::

    morphology.se_diameter = 11
    clahe.tiles = 8x8
    clahe.clip = 0.04
    clahe.bins = 256
    gabor.omega0 = 0.7, 0.9, 1.1, 1.3
    gabor.theta_start = 0
    gabor.theta_stop = 180
    gabor.theta_step = 20
    gabor.K = 2.2
    gabor.truncation = 3.5
    gabor.max_radius = 128
    gabor.method = fft
    threshold.method = otsu
    threshold.value = 0.5
    threshold.bins = 256
    eval.erode_fov = 0
    run.workers = 1
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .clahe import ClaheConfig
from .gabor import BankConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    se_diameter: int = 11
    clahe: ClaheConfig = field(default_factory=ClaheConfig)
    bank: BankConfig = field(default_factory=BankConfig)
    gabor_method: str = "fft"
    threshold_method: str = "otsu"
    threshold_value: float = 0.5
    threshold_bins: int = 256
    eval_erode_fov: int = 0
    output: Path | None = None
    workers: int = 1

    def __post_init__(self):
        if self.se_diameter < 1 or self.se_diameter % 2 == 0:
            raise ConfigError(f"morphology.se_diameter must be odd and >= 1, got {self.se_diameter}")
        if self.gabor_method not in ("fft", "direct"):
            raise ConfigError(f"gabor.method must be 'fft' or 'direct', got {self.gabor_method!r}")
        if self.threshold_method not in ("otsu", "fixed"):
            raise ConfigError(f"threshold.method must be 'otsu' or 'fixed', got {self.threshold_method!r}")
        if not 0.0 <= self.threshold_value <= 1.0:
            raise ConfigError("threshold.value must lie in [0, 1]")
        if self.threshold_bins < 2:
            raise ConfigError("threshold.bins must be >= 2")
        if self.eval_erode_fov < 0:
            raise ConfigError("eval.erode_fov must be >= 0")
        if self.workers < 1:
            raise ConfigError("run.workers must be >= 1")


def _tiles(value: str) -> dict:
    parts = [p for p in value.replace("x", ",").replace("X", ",").split(",") if p.strip()]
    if len(parts) == 1:
        n = int(parts[0])
        return {"tiles_x": n, "tiles_y": n}
    if len(parts) == 2:
        return {"tiles_x": int(parts[0]), "tiles_y": int(parts[1])}
    raise ValueError(f"bad tile grid {value!r}")


def _floats(value: str) -> tuple[float, ...]:
    return tuple(float(v) for v in value.split(",") if v.strip())


# key -> (target, field, converter); target is "top", "clahe" or "bank"
_KEYS = {
    "morphology.se_diameter": ("top", "se_diameter", int),
    "clahe.tiles": ("clahe", None, _tiles),
    "clahe.clip": ("clahe", "clip_limit", float),
    "clahe.bins": ("clahe", "bins", int),
    "gabor.omega0": ("bank", "omega0_values", _floats),
    "gabor.theta_start": ("bank", "theta_start", float),
    "gabor.theta_stop": ("bank", "theta_stop", float),
    "gabor.theta_step": ("bank", "theta_step", float),
    "gabor.k": ("bank", "K", float),
    "gabor.truncation": ("bank", "truncation_sigmas", float),
    "gabor.max_radius": ("bank", "max_radius", int),
    "gabor.method": ("top", "gabor_method", str.strip),
    "threshold.method": ("top", "threshold_method", str.strip),
    "threshold.value": ("top", "threshold_value", float),
    "threshold.bins": ("top", "threshold_bins", int),
    "eval.erode_fov": ("top", "eval_erode_fov", int),
    "output.dir": ("top", "output", Path),
    "run.workers": ("top", "workers", int),
}


def parse_config(text: str, source: str = "<config>") -> PipelineConfig:
    updates: dict[str, dict] = {"top": {}, "clahe": {}, "bank": {}}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
        key = key.strip().lower()
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        target, name, convert = _KEYS[key]
        try:
            converted = convert(value.strip())
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
        if name is None:
            updates[target].update(converted)
        else:
            updates[target][name] = converted
    try:
        return PipelineConfig(
            clahe=ClaheConfig(**updates["clahe"]),
            bank=BankConfig(**updates["bank"]),
            **updates["top"],
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def with_overrides(cfg: PipelineConfig, **changes) -> PipelineConfig:
    return dataclasses.replace(cfg, **{k: v for k, v in changes.items() if v is not None})
