"""Weakly supervised loss kernels on probability maps.

The dense affinity used by the regularizer is the product Gaussian over raw
8-bit RGB and pixel coordinates::

    W_pq = exp(-|I_p - I_q|^2 / (2 sigma_rgb^2) - |x_p - x_q|^2 / (2 sigma_xy^2))

with ``W_pp = 1``.  Two filters apply it: an exact O(N^2) one for small
images and a lattice approximation for anything larger.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import ROAD, UNKNOWN, check_image, check_prob, check_same_shape, check_tristate

PROB_CLAMP = 1e-7
LATTICE_SPACING = 0.5  # lattice cell size in units of the kernel bandwidth


@dataclass(frozen=True)
class KernelParams:
    sigma_rgb: float = 15.0
    sigma_xy: float = 100.0

    def __post_init__(self):
        if not (self.sigma_rgb > 0 and self.sigma_xy > 0):
            raise ValueError("sigma_rgb and sigma_xy must be > 0")


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.5
    beta: float = 0.7

    def __post_init__(self):
        if not (self.alpha >= 0 and self.beta >= 0):
            raise ValueError("alpha and beta must be >= 0")


@dataclass(frozen=True)
class LossReport:
    pbce: float
    reg: float
    bound: float
    seg: float
    total: float

    def format(self) -> str:
        return (f"pbce={self.pbce:.6f} reg={self.reg:.6f} bound={self.bound:.6f} "
                f"seg={self.seg:.6f} total={self.total:.6f}")


def partial_bce(S: np.ndarray, Y: np.ndarray, mean: bool = False) -> float:
    """Binary cross-entropy summed over the Road/NonRoad pixels of ``Y``."""
    S = check_prob(S)
    Y = check_tristate(Y)
    check_same_shape(S, Y, names=("probability map", "proposal mask"))
    known = Y != UNKNOWN
    if not known.any():
        return 0.0
    s = np.clip(S[known], PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = Y[known] == ROAD
    terms = np.where(y, np.log(s), np.log1p(-s))
    total = -float(terms.sum())
    return total / known.sum() if mean else total


# ---------------------------------------------------------------------------
# dense Gaussian filtering

def _features(img: np.ndarray, params: KernelParams) -> np.ndarray:
    img = check_image(img).astype(np.float64)
    h, w = img.shape[:2]
    ys, xs = np.indices((h, w), dtype=np.float64)
    return np.concatenate([img.reshape(-1, 3) / params.sigma_rgb,
                           np.stack([xs.ravel(), ys.ravel()], 1) / params.sigma_xy], 1)


def dense_filter_brute(S: np.ndarray, img: np.ndarray, params: KernelParams = KernelParams(),
                       chunk: int = 1024) -> np.ndarray:
    """Exact ``W @ S`` by direct summation; quadratic in the pixel count."""
    S = np.asarray(S, dtype=np.float64)
    check_same_shape(S, img, names=("field", "image"))
    f = _features(img, params)
    sv = S.ravel()
    out = np.empty(len(f))
    sq = (f * f).sum(1)
    for i in range(0, len(f), chunk):
        blk = f[i:i + chunk]
        d2 = sq[i:i + chunk, None] + sq[None, :] - 2.0 * blk @ f.T
        np.maximum(d2, 0.0, out=d2)
        out[i:i + chunk] = np.exp(-0.5 * d2) @ sv
    return out.reshape(S.shape)


def _lattice_kernel(spacing: float):
    # Linear splat + slice adds variance 1/3 (in cells) per axis on top of the
    # blur, so the blur carries the remainder.
    v = 1.0 / spacing ** 2 - 1.0 / 3.0
    rad = int(math.ceil(4.0 * math.sqrt(v)))
    k = np.arange(-rad, rad + 1, dtype=np.float64)
    return np.sqrt((v + 1.0 / 3.0) / v) * np.exp(-k * k / (2.0 * v)), rad


def dense_filter_fast(S: np.ndarray, img: np.ndarray, params: KernelParams = KernelParams(),
                      spacing: float = LATTICE_SPACING) -> np.ndarray:
    """Approximate ``W @ S`` by splat, separable blur and slice on a regular 5-D lattice.

    Each pixel spreads its value over the 32 corners of its lattice cell with
    multilinear weights, each axis is blurred with a sampled Gaussian and the
    result is read back with the same weights.  The self-contribution that
    passes through the lattice is replaced by the exact ``W_pp = 1``.
    """
    S = np.asarray(S, dtype=np.float64)
    check_same_shape(S, img, names=("field", "image"))
    f = _features(img, params) / spacing
    f -= f.min(0)
    base = np.floor(f).astype(np.int64)
    frac = f - base
    n, d = f.shape
    shape = tuple(int(s) for s in base.max(0) + 2)
    strides = np.cumprod((1,) + shape[::-1][:-1])[::-1].astype(np.int64)
    origin = base @ strides
    size = int(np.prod(shape))
    sv = S.ravel()

    corners = []
    for c in range(1 << d):
        bits = np.array([(c >> q) & 1 for q in range(d)], dtype=bool)
        weight = np.prod(np.where(bits, frac, 1.0 - frac), axis=1)
        corners.append((origin + int(strides[bits].sum()), weight))
    idx = np.concatenate([c[0] for c in corners])
    wgt = np.concatenate([c[1] for c in corners])
    grid = np.bincount(idx, weights=wgt * np.tile(sv, len(corners)), minlength=size).reshape(shape)

    g, rad = _lattice_kernel(spacing)
    for axis in range(d):
        grid = ndimage.convolve1d(grid, g, axis=axis, mode="constant")
    grid = grid.ravel()
    out = (grid[idx] * wgt).reshape(len(corners), n).sum(0)

    through = np.prod(((1.0 - frac) ** 2 + frac ** 2) * g[rad] + 2.0 * frac * (1.0 - frac) * g[rad + 1], axis=1)
    out += (1.0 - through) * sv
    return out.reshape(S.shape)


_BACKENDS = {"brute": dense_filter_brute, "fast": dense_filter_fast}


def _filter(backend: str):
    try:
        return _BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown filter backend {backend!r} (use 'brute' or 'fast')") from None


def regularized_loss(S: np.ndarray, img: np.ndarray, params: KernelParams = KernelParams(),
                     backend: str = "brute") -> float:
    """``S^T W (1 - S)`` summed over ordered pixel pairs."""
    S = np.asarray(S, dtype=np.float64)
    return float(np.sum(S * _filter(backend)(1.0 - S, img, params)))


def regularized_loss_grad(S: np.ndarray, img: np.ndarray, params: KernelParams = KernelParams(),
                          backend: str = "brute", paper_mode: bool = False) -> np.ndarray:
    """Gradient ``W 1 - 2 W S`` of :func:`regularized_loss`.

    ``paper_mode`` drops the constant ``W 1`` term and returns ``-2 W S``.
    """
    S = np.asarray(S, dtype=np.float64)
    filt = _filter(backend)
    ws = filt(S, img, params)
    if paper_mode:
        return -2.0 * ws
    return filt(np.ones_like(S), img, params) - 2.0 * ws


def boundary_mse(T: np.ndarray, B: np.ndarray) -> float:
    T = np.asarray(T, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    check_same_shape(T, B, names=("edge map", "boundary map"))
    return float(np.mean((T - B) ** 2))


def joint_loss(S, Y, img, T, B, weights: LossWeights = LossWeights(),
               params: KernelParams = KernelParams(), backend: str = "brute") -> LossReport:
    check_same_shape(S, Y, img, T, B, names=("segmentation", "proposal", "image", "edges", "boundary"))
    pbce = partial_bce(S, Y)
    reg = regularized_loss(S, img, params, backend)
    bound = boundary_mse(T, B)
    seg = pbce + weights.alpha * reg
    return LossReport(pbce, reg, bound, seg, seg + weights.beta * bound)


def binarize(S: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    return check_prob(S) >= threshold


def sobel_edges(img: np.ndarray) -> np.ndarray:
    """Sobel gradient magnitude of luminance scaled to [0, 1].

    A cheap substitute for a learned edge detector, used when no precomputed
    boundary map is available.
    """
    rgb = check_image(img).astype(np.float64)
    lum = rgb @ np.array([0.299, 0.587, 0.114])
    mag = np.hypot(ndimage.sobel(lum, axis=1, mode="nearest"), ndimage.sobel(lum, axis=0, mode="nearest"))
    peak = mag.max()
    return mag / peak if peak > 0 else mag

