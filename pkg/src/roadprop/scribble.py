"""Scribble polylines, rasterization and buffer-based mask inference."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distance import distance_transform
from .raster import NON_ROAD, ROAD, UNKNOWN, read_binary_mask

FOREGROUND = "fg"
BACKGROUND = "bg"


@dataclass(frozen=True)
class Polyline:
    """Ordered ``(x, y)`` vertices in pixel coordinates plus a category tag."""

    vertices: tuple[tuple[float, float], ...]
    category: str = FOREGROUND

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if not verts:
            raise ValueError("a polyline needs at least one vertex")
        if not all(math.isfinite(c) for v in verts for c in v):
            raise ValueError("polyline coordinates must be finite")
        if self.category not in (FOREGROUND, BACKGROUND):
            raise ValueError(f"unknown scribble category {self.category!r}")
        object.__setattr__(self, "vertices", verts)


@dataclass(frozen=True)
class ScribbleSet:
    polylines: tuple[Polyline, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "polylines", tuple(self.polylines))

    def of(self, category: str) -> "ScribbleSet":
        return ScribbleSet(tuple(p for p in self.polylines if p.category == category))

    @property
    def foreground(self) -> "ScribbleSet":
        return self.of(FOREGROUND)

    @property
    def background(self) -> "ScribbleSet":
        return self.of(BACKGROUND)

    def __len__(self) -> int:
        return len(self.polylines)

    def __iter__(self):
        return iter(self.polylines)


@dataclass(frozen=True)
class BufferParams:
    """Inner/outer buffer distances in meters and the ground sampling distance."""

    a1_m: float
    a2_m: float
    gsd_m: float = 1.0

    def __post_init__(self):
        if not self.gsd_m > 0:
            raise ValueError("gsd_m must be > 0")
        if not 0 < self.a1_m < self.a2_m:
            raise ValueError(f"buffer widths must satisfy 0 < a1 < a2 (got a1={self.a1_m}, a2={self.a2_m})")

    @classmethod
    def from_pixels(cls, a1_px: float, a2_px: float) -> "BufferParams":
        return cls(a1_px, a2_px, 1.0)

    @property
    def a1_px(self) -> float:
        return self.a1_m / self.gsd_m

    @property
    def a2_px(self) -> float:
        return self.a2_m / self.gsd_m


# ---------------------------------------------------------------------------
# rasterization

def _round(v: float) -> int:
    return math.floor(v + 0.5)


def bresenham(x0: int, y0: int, x1: int, y1: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer pixels of the 8-connected segment from ``(x0, y0)`` to ``(x1, y1)``."""
    dx, dy = x1 - x0, y1 - y0
    n = max(abs(dx), abs(dy))
    if n == 0:
        return np.array([x0]), np.array([y0])
    i = np.arange(n + 1)
    # Minor axis rounded half away from the start point, as in the integer error form.
    if abs(dx) >= abs(dy):
        xs = x0 + np.sign(dx) * i
        ys = y0 + np.sign(dy) * ((2 * i * abs(dy) + n) // (2 * n))
    else:
        ys = y0 + np.sign(dy) * i
        xs = x0 + np.sign(dx) * ((2 * i * abs(dx) + n) // (2 * n))
    return xs, ys


def rasterize(scribbles, width: int, height: int, category: str | None = FOREGROUND) -> np.ndarray:
    """Trace each polyline (optionally only one category) into a binary mask.

    Pixels outside the ``width x height`` grid are dropped.
    """
    if width < 1 or height < 1:
        raise ValueError("raster dimensions must be >= 1")
    mask = np.zeros((height, width), dtype=bool)
    lines = scribbles if category is None else scribbles.of(category)
    for line in lines:
        pts = [(_round(x), _round(y)) for x, y in line.vertices]
        segs = list(zip(pts, pts[1:])) or [(pts[0], pts[0])]
        for (x0, y0), (x1, y1) in segs:
            xs, ys = bresenham(x0, y0, x1, y1)
            keep = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
            mask[ys[keep], xs[keep]] = True
    return mask


def foreground_raster(scribbles, width: int, height: int) -> np.ndarray:
    """Foreground scribble pixels from a :class:`ScribbleSet` or a pre-rasterized mask."""
    if isinstance(scribbles, ScribbleSet):
        return rasterize(scribbles, width, height)
    raster = np.asarray(scribbles, dtype=bool)
    if raster.shape != (height, width):
        raise ValueError(f"scribble mask is {raster.shape[::-1]}, image is {(width, height)}")
    return raster


# ---------------------------------------------------------------------------
# buffers

def buffer_from_distance(dist: np.ndarray, a1_px: float, a2_px: float) -> np.ndarray:
    out = np.full(dist.shape, UNKNOWN, dtype=np.uint8)
    out[dist <= a1_px] = ROAD
    out[dist > a2_px] = NON_ROAD
    return out


def buffer_mask(scribbles, params: BufferParams, width: int, height: int) -> np.ndarray:
    """Tri-state mask: Road within a1 of the foreground scribbles, NonRoad beyond a2."""
    raster = foreground_raster(scribbles, width, height)
    return buffer_from_distance(distance_transform(raster), params.a1_px, params.a2_px)


# ---------------------------------------------------------------------------
# text format:  "fg x,y x,y ..." one polyline per line

def parse_scribbles(text: str) -> ScribbleSet:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        raw = raw.split("#", 1)[0].strip()
        if not raw:
            continue
        tag, *pairs = raw.split()
        if tag not in (FOREGROUND, BACKGROUND):
            raise ValueError(f"line {lineno}: category must be 'fg' or 'bg', got {tag!r}")
        if not pairs:
            raise ValueError(f"line {lineno}: polyline has no vertices")
        verts = []
        for pair in pairs:
            try:
                x, y = pair.split(",")
                verts.append((float(x), float(y)))
            except ValueError:
                raise ValueError(f"line {lineno}: bad vertex {pair!r}") from None
        try:
            lines.append(Polyline(tuple(verts), tag))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return ScribbleSet(tuple(lines))


def format_scribbles(scribbles: ScribbleSet) -> str:
    out = []
    for line in scribbles:
        verts = " ".join(f"{x:g},{y:g}" for x, y in line.vertices)
        out.append(f"{line.category} {verts}")
    return "\n".join(out) + ("\n" if out else "")


def read_scribbles(path):
    """Load a scribble text file, or a binary PNG mask of foreground scribble pixels.

    Returns a :class:`ScribbleSet` for text files and a ``bool`` array for PNGs.
    """
    path = Path(path)
    if path.suffix.lower() == ".png":
        return read_binary_mask(path)
    return parse_scribbles(path.read_text())


def write_scribbles(path, scribbles: ScribbleSet) -> None:
    Path(path).write_text(format_scribbles(scribbles))
