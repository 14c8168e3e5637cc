"""Exact Euclidean distance transform (Felzenszwalb & Huttenlocher two-pass)."""
from __future__ import annotations

import numba
import numpy as np

# Returned for every pixel when the seed mask is empty.
NO_SEED_DISTANCE = np.finfo(np.float64).max


@numba.njit(cache=True)
def _envelope_1d(f, out, v, z):
    """Squared distance lower envelope of parabolas rooted at finite entries of ``f``.

    Entries of ``f`` that are ``inf`` contribute no parabola.  If every entry
    is ``inf`` the output is ``inf``.
    """
    n = f.shape[0]
    k = -1
    for q in range(n):
        fq = f[q]
        if fq == np.inf:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -np.inf
            z[1] = np.inf
            continue
        while True:
            p = v[k]
            s = ((fq + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p)
            if s <= z[k]:
                k -= 1
                if k < 0:
                    break
            else:
                break
        k += 1
        v[k] = q
        if k == 0:
            z[0] = -np.inf
        else:
            z[k] = s
        z[k + 1] = np.inf
    if k < 0:
        for q in range(n):
            out[q] = np.inf
        return
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        p = v[k]
        out[q] = (q - p) * (q - p) + f[p]


@numba.njit(cache=True)
def _sq_edt(seeds):
    h, w = seeds.shape
    n = max(h, w)
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1, dtype=np.float64)
    col_in = np.empty(h, dtype=np.float64)
    col_out = np.empty(h, dtype=np.float64)
    tmp = np.empty((h, w), dtype=np.float64)
    for x in range(w):
        for y in range(h):
            col_in[y] = 0.0 if seeds[y, x] else np.inf
        _envelope_1d(col_in, col_out, v, z)
        for y in range(h):
            tmp[y, x] = col_out[y]
    out = np.empty((h, w), dtype=np.float64)
    row_out = np.empty(w, dtype=np.float64)
    for y in range(h):
        _envelope_1d(tmp[y], row_out, v, z)
        for x in range(w):
            out[y, x] = row_out[x]
    return out


def squared_distance_transform(seeds: np.ndarray) -> np.ndarray:
    """Squared distance (pixels^2) from every pixel centre to the nearest seed.

    Values are exact integers held in float64; ``inf`` when there are no seeds.
    """
    seeds = np.ascontiguousarray(seeds, dtype=np.bool_)
    if seeds.ndim != 2:
        raise ValueError(f"expected 2-D seed mask, got shape {seeds.shape}")
    if seeds.size == 0:
        return np.zeros(seeds.shape)
    return _sq_edt(seeds)


def distance_transform(seeds: np.ndarray) -> np.ndarray:
    """Euclidean distance to the nearest seed pixel.

    With no seeds at all every pixel is :data:`NO_SEED_DISTANCE`.
    """
    sq = squared_distance_transform(seeds)
    if np.isinf(sq).any():
        return np.full(sq.shape, NO_SEED_DISTANCE)
    return np.sqrt(sq)
