"""Flat ``key = value`` configuration shared by all subcommands."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

from .losses import KernelParams, LossWeights
from .propagate import PropagationConfig
from .scribble import BufferParams
from .superpixel import SlicParams

# (gsd_m, a1_m, a2_m) per dataset
PRESETS = {
    "cheng": (1.2, 6.0, 18.0),
    "cheng-tuned": (1.2, 6.0, 15.0),
    "wuhan": (0.5, 2.0, 29.0),
    "deepglobe": (0.5, 2.0, 15.0),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    gsd_m: float = 1.2
    a1_m: float = 6.0
    a2_m: float = 18.0
    slic_target: int = 400
    slic_compactness: float = 20.0
    hist_bins: tuple[int, int] = (20, 20)
    hist_mode: str = "joint"
    pairwise_gamma: float = 1.0
    pairwise_sigma: float = 1.0
    kl_eps: float = 1e-8
    sigma_rgb: float = 15.0
    sigma_xy: float = 100.0
    alpha: float = 0.5
    beta: float = 0.7
    threshold: float = 0.5
    tile_size: int = 512

    def buffer(self) -> BufferParams:
        return BufferParams(self.a1_m, self.a2_m, self.gsd_m)

    def propagation(self) -> PropagationConfig:
        return PropagationConfig(
            buffer=self.buffer(),
            slic=SlicParams(self.slic_target, self.slic_compactness),
            h_bins=self.hist_bins[0], s_bins=self.hist_bins[1], hist_mode=self.hist_mode,
            gamma=self.pairwise_gamma, sigma_h=self.pairwise_sigma, kl_eps=self.kl_eps,
            tile_size=self.tile_size,
        )

    def kernel(self) -> KernelParams:
        return KernelParams(self.sigma_rgb, self.sigma_xy)

    def weights(self) -> LossWeights:
        return LossWeights(self.alpha, self.beta)


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _bins(text: str) -> tuple[int, int]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2:
        raise ValueError("expected one or two integers")
    return int(parts[0]), int(parts[1])


# key -> (parser, check, description of the constraint)
_FIELDS = {
    "gsd_m": (float, _positive, "> 0"),
    "a1_m": (float, _positive, "> 0"),
    "a2_m": (float, _positive, "> 0"),
    "slic_target": (int, _positive, ">= 1"),
    "slic_compactness": (float, _positive, "> 0"),
    "hist_bins": (_bins, lambda v: min(v) >= 1, "two integers >= 1"),
    "hist_mode": (str, lambda v: v in ("joint", "marginal"), "'joint' or 'marginal'"),
    "pairwise_gamma": (float, _nonneg, ">= 0"),
    "pairwise_sigma": (float, _positive, "> 0"),
    "kl_eps": (float, _positive, "> 0"),
    "sigma_rgb": (float, _positive, "> 0"),
    "sigma_xy": (float, _positive, "> 0"),
    "alpha": (float, _nonneg, ">= 0"),
    "beta": (float, _nonneg, ">= 0"),
    "threshold": (float, lambda v: 0 <= v <= 1, "in [0, 1]"),
    "tile_size": (int, _positive, ">= 1"),
}


def _parse_value(key: str, raw: str):
    parser, check, constraint = _FIELDS[key]
    try:
        value = parser(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite")
    if not check(value):
        raise ConfigError(f"{key}: must be {constraint}, got {raw!r}")
    return value


def parse_config_text(text: str) -> Config:
    values: dict[str, object] = {}
    preset = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key == "preset":
            if raw not in PRESETS:
                raise ConfigError(f"preset: unknown dataset {raw!r} (choose from {', '.join(PRESETS)})")
            preset = raw
            continue
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)
    if preset is not None:
        # explicit keys win over the preset
        for key, v in zip(("gsd_m", "a1_m", "a2_m"), PRESETS[preset]):
            values.setdefault(key, v)
    cfg = Config(**values)
    if not cfg.a1_m < cfg.a2_m:
        raise ConfigError(f"a1_m/a2_m: buffer widths must satisfy a1 < a2 (got a1_m={cfg.a1_m}, a2_m={cfg.a2_m})")
    if cfg.hist_mode == "joint" and cfg.hist_bins[0] * cfg.hist_bins[1] > 1 << 16:
        raise ConfigError("hist_bins: joint histogram would exceed 65536 bins")
    return cfg


def parse_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text)


def format_config(cfg: Config) -> str:
    out = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        out.append(f"{f.name} = {','.join(map(str, v)) if isinstance(v, tuple) else v}")
    return "\n".join(out) + "\n"
