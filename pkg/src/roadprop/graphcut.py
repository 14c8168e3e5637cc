"""Superpixel graph energy and its exact minimization by s-t min-cut.

The graph has one node per superpixel.  Terminal capacities follow the
usual reduction: ``cap_fg[i]`` links the node to the foreground terminal and
is paid when the node ends up background; ``cap_bg[i]`` is paid when it ends
up foreground.  Neighbouring nodes are joined by symmetric n-links that are
paid when the two labels differ.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .delaunay import delaunay_adjacency
from .maxflow import BKGraph
from .raster import NON_ROAD, check_same_shape
from .superpixel import KL_EPS, NoSeedsError, SuperpixelStats, kl_rows, label_count

FREE, FG_SEED, BG_SEED = 0, 1, 2


@dataclass(frozen=True)
class EnergyGraph:
    cap_fg: np.ndarray   # cost of labeling the node background
    cap_bg: np.ndarray   # cost of labeling the node foreground
    edges: np.ndarray    # (E, 2) node pairs
    weights: np.ndarray  # (E,) n-link capacities
    c_hard: float = 0.0

    @property
    def node_count(self) -> int:
        return len(self.cap_fg)

    def to_text(self) -> str:
        lines = [f"node {i} {f:.10g} {b:.10g}" for i, (f, b) in enumerate(zip(self.cap_fg, self.cap_bg))]
        lines += [f"edge {i} {j} {w:.10g}" for (i, j), w in zip(self.edges.tolist(), self.weights)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CutResult:
    foreground: np.ndarray  # per-node bool
    cut_value: float
    flow_value: float


def superpixel_adjacency(stats: list[SuperpixelStats]) -> np.ndarray:
    return delaunay_adjacency([s.centroid for s in stats])


def assign_seeds(labels: np.ndarray, scribble_raster: np.ndarray, buffer: np.ndarray,
                 background_raster: np.ndarray | None = None) -> np.ndarray:
    """Per-superpixel seed class (``FREE``, ``FG_SEED`` or ``BG_SEED``).

    Foreground: the superpixel holds a scribble pixel.  Background: no
    scribble pixel and every pixel lies outside the outer buffer, or it
    touches an explicit background scribble.  Raises :class:`NoSeedsError`
    when either class ends up empty.
    """
    check_same_shape(labels, scribble_raster, buffer, names=("labeling", "scribbles", "buffer"))
    k = label_count(labels)
    flat = labels.ravel()
    total = np.bincount(flat, minlength=k)
    hits = np.bincount(flat, weights=np.asarray(scribble_raster, dtype=bool).ravel(), minlength=k)
    outside = np.bincount(flat, weights=(np.asarray(buffer) == NON_ROAD).ravel(), minlength=k)
    seeds = np.full(k, FREE, dtype=np.int8)
    seeds[hits > 0] = FG_SEED
    bg = (hits == 0) & (outside == total)
    if background_raster is not None:
        check_same_shape(labels, background_raster, names=("labeling", "background scribbles"))
        bg_hits = np.bincount(flat, weights=np.asarray(background_raster, dtype=bool).ravel(), minlength=k)
        bg |= (hits == 0) & (bg_hits > 0)
    seeds[bg] = BG_SEED
    if not (seeds == FG_SEED).any():
        raise NoSeedsError("no superpixel overlaps a foreground scribble")
    if not (seeds == BG_SEED).any():
        raise NoSeedsError("no superpixel lies entirely outside the outer buffer")
    return seeds


def pairwise_weights(hists: np.ndarray, edges: np.ndarray, gamma: float = 1.0,
                     sigma: float = 1.0, eps: float = KL_EPS) -> np.ndarray:
    """``gamma * exp(-KL_sym / sigma)`` for each edge."""
    if len(edges) == 0:
        return np.zeros(0)
    p, q = hists[edges[:, 0]], hists[edges[:, 1]]
    sym = 0.5 * (kl_rows(p, q, eps) + kl_rows(q, p, eps))
    return gamma * np.exp(-sym / sigma)


def build_energy(stats: list[SuperpixelStats], adjacency: np.ndarray, seeds: np.ndarray,
                 fg_hist: np.ndarray, bg_hist: np.ndarray, gamma: float = 1.0,
                 sigma_h: float = 1.0, eps: float = KL_EPS) -> EnergyGraph:
    """Unary KL costs for free nodes, hard constraints for seeds, KL-similarity n-links."""
    seeds = np.asarray(seeds)
    if len(seeds) != len(stats):
        raise ValueError(f"{len(seeds)} seed entries for {len(stats)} superpixels")
    if not (gamma >= 0 and sigma_h > 0):
        raise ValueError("need gamma >= 0 and sigma_h > 0")
    adjacency = np.asarray(adjacency, dtype=np.int64).reshape(-1, 2)
    hists = np.stack([s.histogram for s in stats])
    cost_fg = kl_rows(hists, fg_hist, eps)
    cost_bg = kl_rows(hists, bg_hist, eps)
    weights = pairwise_weights(hists, adjacency, gamma, sigma_h, eps)

    free = seeds == FREE
    cap_fg = np.where(free, cost_bg, 0.0)
    cap_bg = np.where(free, cost_fg, 0.0)
    c_hard = 1.0 + float(cap_fg.sum() + cap_bg.sum() + weights.sum())
    cap_fg[seeds == FG_SEED] = c_hard
    cap_bg[seeds == BG_SEED] = c_hard
    return EnergyGraph(cap_fg, cap_bg, adjacency, weights, c_hard)


def labeling_energy(graph: EnergyGraph, foreground) -> float:
    """Sum of unary costs plus the weights of edges whose endpoints disagree."""
    fg = np.asarray(foreground, dtype=bool)
    if fg.shape != (graph.node_count,):
        raise ValueError(f"need {graph.node_count} labels, got {fg.shape}")
    unary = float(np.where(fg, graph.cap_bg, graph.cap_fg).sum())
    if len(graph.edges) == 0:
        return unary
    cut = fg[graph.edges[:, 0]] != fg[graph.edges[:, 1]]
    return unary + float(graph.weights[cut].sum())


def max_flow(graph: EnergyGraph) -> CutResult:
    solver = BKGraph(graph.cap_fg, graph.cap_bg, graph.edges, graph.weights)
    flow = solver.solve()
    fg = solver.source_side()
    return CutResult(fg, labeling_energy(graph, fg), flow)


def graph_mask(labels: np.ndarray, cut: CutResult) -> np.ndarray:
    if label_count(labels) != len(cut.foreground):
        raise ValueError("labeling and cut disagree on the number of superpixels")
    return cut.foreground[labels]
