"""SLIC superpixels, per-superpixel HSV histograms and KL comparisons."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import ndimage

from .raster import check_image, check_same_shape

H_BINS = 20
S_BINS = 20
KL_EPS = 1e-8


class NoSeedsError(ValueError):
    """A class has no seed superpixels, so its histogram/graph cannot be built."""


@dataclass(frozen=True)
class SlicParams:
    target_count: int = 400
    compactness: float = 20.0
    max_iterations: int = 10

    def __post_init__(self):
        if self.target_count < 1:
            raise ValueError("target_count must be >= 1")
        if not self.compactness > 0:
            raise ValueError("compactness must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class SuperpixelStats:
    id: int
    centroid: tuple[float, float]  # (x, y)
    pixel_count: int
    histogram: np.ndarray


# ---------------------------------------------------------------------------
# CIELAB (sRGB, D65)

_SRGB_LINEAR = np.array(
    [c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4
     for c in np.arange(256) / 255.0])
_RGB_TO_XYZ = np.array([[0.412453, 0.357580, 0.180423],
                        [0.212671, 0.715160, 0.072169],
                        [0.019334, 0.119193, 0.950227]])
_WHITE = np.array([0.95047, 1.0, 1.08883])


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    lin = _SRGB_LINEAR[check_image(img)]
    xyz = lin @ (_RGB_TO_XYZ.T / _WHITE)
    delta = 6.0 / 29.0
    f = np.where(xyz > delta ** 3, np.cbrt(xyz), xyz / (3 * delta ** 2) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


# ---------------------------------------------------------------------------
# SLIC

@numba.njit(cache=True)
def _slic_iterate(lab, labels, centers, step, compactness, max_iter):
    h, w = labels.shape
    k_count = centers.shape[0]
    dist = np.empty((h, w), dtype=np.float64)
    sums = np.zeros((k_count, 6), dtype=np.float64)
    ratio = compactness / step
    for _ in range(max_iter):
        dist[:, :] = np.inf
        for k in range(k_count):
            cl, ca, cb, cx, cy = centers[k, 0], centers[k, 1], centers[k, 2], centers[k, 3], centers[k, 4]
            x0 = max(int(math.floor(cx - step)), 0)
            x1 = min(int(math.ceil(cx + step)), w - 1)
            y0 = max(int(math.floor(cy - step)), 0)
            y1 = min(int(math.ceil(cy + step)), h - 1)
            for y in range(y0, y1 + 1):
                for x in range(x0, x1 + 1):
                    dl = lab[y, x, 0] - cl
                    da = lab[y, x, 1] - ca
                    db = lab[y, x, 2] - cb
                    dx = x - cx
                    dy = y - cy
                    d = math.sqrt(dl * dl + da * da + db * db) + ratio * math.sqrt(dx * dx + dy * dy)
                    # strict < keeps the lowest id on ties
                    if d < dist[y, x]:
                        dist[y, x] = d
                        labels[y, x] = k
        sums[:, :] = 0.0
        for y in range(h):
            for x in range(w):
                k = labels[y, x]
                sums[k, 0] += lab[y, x, 0]
                sums[k, 1] += lab[y, x, 1]
                sums[k, 2] += lab[y, x, 2]
                sums[k, 3] += x
                sums[k, 4] += y
                sums[k, 5] += 1.0
        moved = 0.0
        for k in range(k_count):
            n = sums[k, 5]
            if n == 0:
                continue
            nx = sums[k, 3] / n
            ny = sums[k, 4] / n
            m = math.sqrt((nx - centers[k, 3]) ** 2 + (ny - centers[k, 4]) ** 2)
            if m > moved:
                moved = m
            centers[k, 0] = sums[k, 0] / n
            centers[k, 1] = sums[k, 1] / n
            centers[k, 2] = sums[k, 2] / n
            centers[k, 3] = nx
            centers[k, 4] = ny
        if moved < 0.5:
            break
    return labels


def _initial_centers(lab: np.ndarray, params: SlicParams):
    h, w = lab.shape[:2]
    step = math.sqrt(h * w / params.target_count)
    ny = max(1, round(math.sqrt(params.target_count * h / w)))
    nx = max(1, round(params.target_count / ny))
    # squared central-difference gradient with replicated borders
    p = np.pad(lab, ((1, 1), (1, 1), (0, 0)), mode="edge")
    grad = (((p[1:-1, 2:] - p[1:-1, :-2]) ** 2).sum(2)
            + ((p[2:, 1:-1] - p[:-2, 1:-1]) ** 2).sum(2))
    centers = np.empty((nx * ny, 5))
    init = np.empty((h, w), dtype=np.int64)
    ys = np.minimum((np.arange(h) * ny) // h, ny - 1)
    xs = np.minimum((np.arange(w) * nx) // w, nx - 1)
    init[:, :] = ys[:, None] * nx + xs[None, :]
    k = 0
    for j in range(ny):
        for i in range(nx):
            fy = (j + 0.5) * h / ny - 0.5
            fx = (i + 0.5) * w / nx - 0.5
            cy, cx = int(math.floor(fy + 0.5)), int(math.floor(fx + 0.5))
            best = (grad[cy, cx], cy, cx)
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    yy, xx = cy + dy, cx + dx
                    if 0 <= yy < h and 0 <= xx < w and grad[yy, xx] < best[0]:
                        best = (grad[yy, xx], yy, xx)
            _, by, bx = best
            if (by, bx) != (cy, cx):
                fy, fx = float(by), float(bx)
            centers[k] = (*lab[by, bx], fx, fy)
            k += 1
    return centers, init, step


def _find(parent: dict, a: int) -> int:
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        parent[a], a = root, parent[a]
    return root


def enforce_connectivity(labels: np.ndarray, min_size: float) -> np.ndarray:
    """Make every label 4-connected and renumber ids by first raster appearance.

    Non-largest fragments of a label smaller than ``min_size`` are absorbed into
    their largest adjacent region; bigger fragments become superpixels of their own.
    """
    h, w = labels.shape
    comp = np.zeros((h, w), dtype=np.int64)
    next_id = 0
    main: set[int] = set()
    four = ndimage.generate_binary_structure(2, 1)
    for lab_id, sl in enumerate(ndimage.find_objects(labels + 1)):
        if sl is None:
            continue
        sub = labels[sl] == lab_id
        pieces, n = ndimage.label(sub, structure=four)
        sizes = np.bincount(pieces.ravel(), minlength=n + 1)[1:]
        view = comp[sl]
        view[sub] = pieces[sub] + next_id - 1
        main.add(next_id + int(np.argmax(sizes)))
        next_id += n
    sizes = np.bincount(comp.ravel(), minlength=next_id).astype(np.int64)

    pairs = np.concatenate([
        np.stack([comp[:, :-1].ravel(), comp[:, 1:].ravel()], 1),
        np.stack([comp[:-1, :].ravel(), comp[1:, :].ravel()], 1),
    ])
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    adj: dict[int, set[int]] = {i: set() for i in range(next_id)}
    for a, b in pairs.tolist():
        adj[a].add(b)
        adj[b].add(a)

    parent = {i: i for i in range(next_id)}
    size = {i: int(sizes[i]) for i in range(next_id)}
    orphans = [i for i in range(next_id) if i not in main and sizes[i] < min_size]
    orphans.sort(key=lambda i: (sizes[i], i))
    for o in orphans:
        ro = _find(parent, o)
        cands = {_find(parent, n) for n in adj[ro]} - {ro}
        if not cands:
            continue
        target = max(cands, key=lambda r: (size[r], -r))
        parent[ro] = target
        size[target] += size[ro]
        adj[target] |= adj[ro]
        adj[target].discard(target)
        adj[target].discard(ro)

    roots = np.array([_find(parent, i) for i in range(next_id)], dtype=np.int64)
    merged = roots[comp]
    _, first, inverse = np.unique(merged.ravel(), return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse].reshape(h, w).astype(np.int32)


def slic_segment(img: np.ndarray, params: SlicParams = SlicParams()) -> np.ndarray:
    """SLIC superpixel labels (int32, ids ``0..K-1``, each id 4-connected)."""
    img = check_image(img)
    h, w = img.shape[:2]
    if h * w < params.target_count:
        raise ValueError(f"{w}x{h} image is smaller than {params.target_count} superpixel cells")
    lab = rgb_to_lab(img)
    centers, labels, step = _initial_centers(lab, params)
    labels = _slic_iterate(lab, labels, centers, step, float(params.compactness), params.max_iterations)
    k = centers.shape[0]
    return enforce_connectivity(labels, h * w / (4.0 * k))


def label_count(labels: np.ndarray) -> int:
    return int(labels.max()) + 1 if labels.size else 0


# ---------------------------------------------------------------------------
# histograms and statistics

def hsv_bins(hsv: np.ndarray, h_bins: int = H_BINS, s_bins: int = S_BINS, mode: str = "joint"):
    """Per-pixel histogram bin index and the histogram length."""
    hb = np.clip(np.floor(hsv[..., 0] * h_bins / 360.0).astype(np.int64), 0, h_bins - 1)
    sb = np.clip(np.floor(hsv[..., 1] * s_bins).astype(np.int64), 0, s_bins - 1)
    if mode == "joint":
        return hb * s_bins + sb, h_bins * s_bins
    if mode == "marginal":
        return np.stack([hb, h_bins + sb]), h_bins + s_bins
    raise ValueError(f"unknown histogram mode {mode!r}")


def histogram_matrix(hsv: np.ndarray, labels: np.ndarray, h_bins: int = H_BINS,
                     s_bins: int = S_BINS, mode: str = "joint") -> np.ndarray:
    """``(K, bins)`` normalized histograms, one row per superpixel."""
    check_same_shape(hsv, labels, names=("hsv image", "labeling"))
    k = label_count(labels)
    idx, nbins = hsv_bins(hsv, h_bins, s_bins, mode)
    lab = labels.astype(np.int64)
    if mode == "joint":
        flat = (lab * nbins + idx).ravel()
    else:
        flat = np.concatenate([(lab * nbins + idx[0]).ravel(), (lab * nbins + idx[1]).ravel()])
    counts = np.bincount(flat, minlength=k * nbins).reshape(k, nbins).astype(np.float64)
    totals = counts.sum(1, keepdims=True)
    return counts / np.where(totals > 0, totals, 1.0)


def compute_stats(hsv: np.ndarray, labels: np.ndarray, h_bins: int = H_BINS,
                  s_bins: int = S_BINS, mode: str = "joint") -> list[SuperpixelStats]:
    hsv = np.asarray(hsv, dtype=np.float64)
    labels = np.asarray(labels)
    check_same_shape(hsv, labels, names=("hsv image", "labeling"))
    k = label_count(labels)
    hists = histogram_matrix(hsv, labels, h_bins, s_bins, mode)
    flat = labels.ravel()
    ys, xs = np.indices(labels.shape)
    counts = np.bincount(flat, minlength=k)
    cx = np.bincount(flat, weights=xs.ravel(), minlength=k) / np.maximum(counts, 1)
    cy = np.bincount(flat, weights=ys.ravel(), minlength=k) / np.maximum(counts, 1)
    return [SuperpixelStats(i, (float(cx[i]), float(cy[i])), int(counts[i]), hists[i])
            for i in range(k)]


def _check_hist(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError(f"{name}: histogram must be finite and nonnegative")
    if abs(p.sum(axis=-1) - 1.0).max() > 1e-6:
        raise ValueError(f"{name}: histogram is not normalized (sum={p.sum(axis=-1)})")
    return p


def _smooth(p: np.ndarray, eps: float) -> np.ndarray:
    return (p + eps) / (1.0 + p.shape[-1] * eps)


def kl_divergence(p: np.ndarray, q: np.ndarray, eps: float = KL_EPS) -> float:
    """KL(p || q) in nats after adding ``eps`` to every bin and renormalizing."""
    p = _smooth(_check_hist(p, "p"), eps)
    q = _smooth(_check_hist(q, "q"), eps)
    if p.shape != q.shape:
        raise ValueError(f"histogram lengths differ: {p.shape} vs {q.shape}")
    return max(float(np.sum(p * np.log(p / q))), 0.0)


def kl_rows(p: np.ndarray, q: np.ndarray, eps: float = KL_EPS) -> np.ndarray:
    """Row-wise KL(p_i || q_i); ``q`` may be a single histogram."""
    p = _smooth(_check_hist(p, "p"), eps)
    q = _smooth(_check_hist(q, "q"), eps)
    return np.maximum((p * (np.log(p) - np.log(q))).sum(axis=-1), 0.0)


def cumulative_class_histogram(stats: list[SuperpixelStats], members) -> np.ndarray:
    """Pixel-count weighted sum of the members' histograms, renormalized."""
    members = sorted(set(int(m) for m in members))
    if not members:
        raise NoSeedsError("no seed superpixels for this class")
    acc = np.zeros_like(stats[members[0]].histogram, dtype=np.float64)
    for m in members:
        acc += stats[m].pixel_count * stats[m].histogram
    return acc / acc.sum()
