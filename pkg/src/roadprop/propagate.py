"""Buffer/graph fusion and the per-tile label propagation pipeline."""
from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import graphcut
from .distance import distance_transform
from .raster import (NON_ROAD, ROAD, UNKNOWN, check_image, check_same_shape, check_tristate,
                     read_image, rgb_to_hsv, tile, untile, write_image, write_tristate)
from .scribble import BufferParams, ScribbleSet, buffer_from_distance, foreground_raster, rasterize, read_scribbles
from .superpixel import (H_BINS, KL_EPS, S_BINS, NoSeedsError, SlicParams, compute_stats,
                         cumulative_class_histogram, slic_segment)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PropagationConfig:
    buffer: BufferParams = field(default_factory=lambda: BufferParams(6.0, 18.0, 1.2))
    slic: SlicParams = field(default_factory=SlicParams)
    h_bins: int = H_BINS
    s_bins: int = S_BINS
    hist_mode: str = "joint"
    gamma: float = 1.0
    sigma_h: float = 1.0
    kl_eps: float = KL_EPS
    tile_size: int = 512


@dataclass
class PropagationResult:
    proposal: np.ndarray
    buffer: np.ndarray
    graph: np.ndarray | None = None
    labels: np.ndarray | None = None
    seeds: np.ndarray | None = None
    energy: graphcut.EnergyGraph | None = None
    cut: graphcut.CutResult | None = None
    timings_ms: dict[str, float] = field(default_factory=dict)


def fuse_masks(buffer: np.ndarray, graph: np.ndarray) -> np.ndarray:
    """Graph road over buffer non-road becomes Unknown; everything else keeps the buffer label."""
    buffer = check_tristate(buffer)
    graph = np.asarray(graph, dtype=bool)
    check_same_shape(buffer, graph, names=("buffer mask", "graph mask"))
    out = buffer.copy()
    out[graph & (buffer == NON_ROAD)] = UNKNOWN
    return out


class _Clock:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self._t = time.perf_counter()

    def lap(self, name: str) -> None:
        now = time.perf_counter()
        self.timings[name] = (now - self._t) * 1e3
        self._t = now


def propagate_tile_detailed(img: np.ndarray, scribbles, config: PropagationConfig = PropagationConfig()
                            ) -> PropagationResult:
    img = check_image(img)
    h, w = img.shape[:2]
    clock = _Clock()
    fg = foreground_raster(scribbles, w, h)
    bg = rasterize(scribbles, w, h, "bg") if isinstance(scribbles, ScribbleSet) else None
    buf = buffer_from_distance(distance_transform(fg), config.buffer.a1_px, config.buffer.a2_px)
    clock.lap("buffer")
    result = PropagationResult(proposal=buf, buffer=buf, timings_ms=clock.timings)
    if not fg.any():
        return result

    labels = slic_segment(img, config.slic)
    clock.lap("slic")
    stats = compute_stats(rgb_to_hsv(img), labels, config.h_bins, config.s_bins, config.hist_mode)
    clock.lap("stats")
    result.labels = labels
    try:
        seeds = graphcut.assign_seeds(labels, fg, buf, bg)
    except NoSeedsError as exc:
        log.debug("graph stage skipped: %s", exc)
        return result
    fg_hist = cumulative_class_histogram(stats, np.nonzero(seeds == graphcut.FG_SEED)[0])
    bg_hist = cumulative_class_histogram(stats, np.nonzero(seeds == graphcut.BG_SEED)[0])
    adjacency = graphcut.superpixel_adjacency(stats)
    clock.lap("adjacency")
    energy = graphcut.build_energy(stats, adjacency, seeds, fg_hist, bg_hist,
                                   config.gamma, config.sigma_h, config.kl_eps)
    cut = graphcut.max_flow(energy)
    clock.lap("graphcut")
    gmask = graphcut.graph_mask(labels, cut)
    result.proposal = fuse_masks(buf, gmask)
    clock.lap("fuse")
    result.graph, result.seeds, result.energy, result.cut = gmask, seeds, energy, cut
    return result


def propagate_tile(img: np.ndarray, scribbles, config: PropagationConfig = PropagationConfig()) -> np.ndarray:
    """Tri-state proposal mask for one tile."""
    return propagate_tile_detailed(img, scribbles, config).proposal


def propagate_image(img: np.ndarray, scribbles, config: PropagationConfig = PropagationConfig()) -> np.ndarray:
    """Propagate independently on each ``tile_size`` tile and stitch the result."""
    img = check_image(img)
    h, w = img.shape[:2]
    size = config.tile_size
    if h <= size and w <= size:
        return propagate_tile(img, scribbles, config)
    fg = foreground_raster(scribbles, w, h)
    img_tiles, grid = tile(img, size)
    fg_tiles, _ = tile(fg, size)
    out = [propagate_tile(t, f, config) for t, f in zip(img_tiles, fg_tiles)]
    return untile(out, grid)


def overlay(img: np.ndarray, proposal: np.ndarray) -> np.ndarray:
    """Road tinted red at 50% opacity, Unknown tinted yellow at 30%."""
    out = check_image(img).astype(np.float64)
    for label, color, alpha in ((ROAD, (255, 0, 0), 0.5), (UNKNOWN, (255, 255, 0), 0.3)):
        sel = proposal == label
        out[sel] = (1 - alpha) * out[sel] + alpha * np.array(color, dtype=np.float64)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def label_fractions(mask: np.ndarray) -> tuple[float, float, float]:
    counts = np.bincount(mask.ravel(), minlength=3) / mask.size
    return float(counts[ROAD]), float(counts[UNKNOWN]), float(counts[NON_ROAD])


# ---------------------------------------------------------------------------
# datasets

IMAGE_SUFFIXES = (".png",)
SCRIBBLE_SUFFIXES = (".txt", ".png")


@dataclass
class DatasetSummary:
    rows: list[tuple[str, float, float, float]]
    unmatched: list[str]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["stem", "road", "unknown", "nonroad"])
            for stem, r, u, n in self.rows:
                writer.writerow([stem, f"{r:.6f}", f"{u:.6f}", f"{n:.6f}"])


def pair_files(image_dir, scribble_dir):
    """Match images to scribble files by stem; returns ``(pairs, unmatched_stems)``."""
    images = {p.stem: p for p in sorted(Path(image_dir).iterdir())
              if p.suffix.lower() in IMAGE_SUFFIXES}
    scribbles: dict[str, Path] = {}
    for p in sorted(Path(scribble_dir).iterdir()):
        if p.suffix.lower() in SCRIBBLE_SUFFIXES:
            scribbles.setdefault(p.stem, p)
    pairs = [(stem, images[stem], scribbles[stem]) for stem in sorted(images) if stem in scribbles]
    unmatched = sorted(set(images) ^ set(scribbles))
    return pairs, unmatched


def _process(job):
    stem, image_path, scribble_path, out_dir, overlay_dir, config = job
    t0 = time.perf_counter()
    img = read_image(image_path)
    scribbles = read_scribbles(scribble_path)
    h, w = img.shape[:2]
    if h <= config.tile_size and w <= config.tile_size:
        res = propagate_tile_detailed(img, scribbles, config)
        proposal, timings = res.proposal, res.timings_ms
    else:
        proposal, timings = propagate_image(img, scribbles, config), {}
    write_tristate(Path(out_dir) / f"{stem}.png", proposal)
    if overlay_dir is not None:
        write_image(Path(overlay_dir) / f"{stem}.png", overlay(img, proposal))
    timings["total"] = (time.perf_counter() - t0) * 1e3
    return stem, label_fractions(proposal), timings


def propagate_dataset(image_dir, scribble_dir, out_dir, config: PropagationConfig = PropagationConfig(),
                      jobs: int = 1, overlay_dir=None) -> DatasetSummary:
    pairs, unmatched = pair_files(image_dir, scribble_dir)
    for stem in unmatched:
        log.warning("skipping %s: no matching image/scribble pair", stem)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    if overlay_dir is not None:
        Path(overlay_dir).mkdir(parents=True, exist_ok=True)
    work = [(stem, ip, sp, out_dir, overlay_dir, config) for stem, ip, sp in pairs]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_process, work))
    else:
        results = [_process(job) for job in work]
    rows = []
    for stem, (road, unknown, nonroad), timings in results:
        stages = " ".join(f"{k}={v:.1f}ms" for k, v in timings.items())
        log.info("%s %s road=%.4f unknown=%.4f nonroad=%.4f", stem, stages, road, unknown, nonroad)
        rows.append((stem, road, unknown, nonroad))
    return DatasetSummary(rows, unmatched)
