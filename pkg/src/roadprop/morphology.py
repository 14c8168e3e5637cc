"""Binary morphology: erosion, thinning, curve tracing and simulated scribbles."""
from __future__ import annotations

import numba
import numpy as np

from .scribble import FOREGROUND, Polyline, ScribbleSet

# 8-neighbourhood in clockwise order starting at north: (dy, dx)
RING = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


def cross_kernel(size: int = 7) -> np.ndarray:
    """``size x size`` cross: the middle row and middle column set."""
    if size < 1:
        raise ValueError("kernel size must be >= 1")
    k = np.zeros((size, size), dtype=bool)
    k[size // 2, :] = True
    k[:, size // 2] = True
    return k


def erode(mask: np.ndarray, kernel: np.ndarray, anchor: tuple[int, int] | None = None) -> np.ndarray:
    """Binary erosion; ``anchor`` is ``(x, y)`` inside the kernel.

    A pixel survives iff every set kernel cell, placed with the anchor on the
    pixel, covers a set mask pixel.  Outside the image counts as unset.
    """
    mask = np.asarray(mask, dtype=bool)
    kernel = np.asarray(kernel, dtype=bool)
    kh, kw = kernel.shape
    if anchor is None:
        anchor = (kw // 2, kh // 2)
    ax, ay = anchor
    if not (0 <= ax < kw and 0 <= ay < kh):
        raise ValueError(f"anchor {anchor} outside {kw}x{kh} kernel")
    h, w = mask.shape
    padded = np.zeros((h + 2 * kh, w + 2 * kw), dtype=bool)
    padded[kh:kh + h, kw:kw + w] = mask
    out = np.ones((h, w), dtype=bool)
    for ky, kx in zip(*np.nonzero(kernel)):
        dy, dx = ky - ay, kx - ax
        out &= padded[kh + dy:kh + dy + h, kw + dx:kw + dx + w]
    return out


# ---------------------------------------------------------------------------
# thinning

def _simple_table() -> np.ndarray:
    """``table[code]`` is 1 when deleting the centre keeps the local topology.

    Simple in the (8, 4) sense: the set neighbours form one 8-connected
    component and the unset 4-neighbours one 4-connected component.
    """
    table = np.zeros(256, dtype=np.uint8)
    for code in range(256):
        on = [RING[i] for i in range(8) if code >> i & 1]
        off = [RING[i] for i in range(8) if not code >> i & 1]

        def components(cells, adjacent):
            cells, count = set(cells), 0
            comps = []
            while cells:
                stack = [cells.pop()]
                comp = set(stack)
                while stack:
                    c = stack.pop()
                    for o in list(cells):
                        if adjacent(c, o):
                            cells.remove(o)
                            comp.add(o)
                            stack.append(o)
                comps.append(comp)
                count += 1
            return comps

        fg = components(on, lambda a, b: max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1)
        bg = components(off, lambda a, b: abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1)
        bg4 = [c for c in bg if any(abs(dy) + abs(dx) == 1 for dy, dx in c)]
        table[code] = len(fg) == 1 and len(bg4) == 1
    return table


SIMPLE = _simple_table()


@numba.njit(cache=True)
def _code(img, y, x):
    h, w = img.shape
    c = 0
    # N NE E SE S SW W NW
    if y > 0 and img[y - 1, x]:
        c |= 1
    if y > 0 and x < w - 1 and img[y - 1, x + 1]:
        c |= 2
    if x < w - 1 and img[y, x + 1]:
        c |= 4
    if y < h - 1 and x < w - 1 and img[y + 1, x + 1]:
        c |= 8
    if y < h - 1 and img[y + 1, x]:
        c |= 16
    if y < h - 1 and x > 0 and img[y + 1, x - 1]:
        c |= 32
    if x > 0 and img[y, x - 1]:
        c |= 64
    if y > 0 and x > 0 and img[y - 1, x - 1]:
        c |= 128
    return c


@numba.njit(cache=True)
def _popcount(c):
    n = 0
    while c:
        n += c & 1
        c >>= 1
    return n


@numba.njit(cache=True)
def _transitions(c):
    a = 0
    for i in range(8):
        if not (c >> i) & 1 and (c >> ((i + 1) % 8)) & 1:
            a += 1
    return a


@numba.njit(cache=True)
def _zhang_suen(img, simple):
    h, w = img.shape
    cand_y = np.empty(h * w, dtype=np.int64)
    cand_x = np.empty(h * w, dtype=np.int64)
    changed = True
    while changed:
        changed = False
        for step in range(2):
            n = 0
            for y in range(h):
                for x in range(w):
                    if not img[y, x]:
                        continue
                    c = _code(img, y, x)
                    b = _popcount(c)
                    if b < 2 or b > 6 or _transitions(c) != 1:
                        continue
                    p2 = c & 1
                    p4 = (c >> 2) & 1
                    p6 = (c >> 4) & 1
                    p8 = (c >> 6) & 1
                    if step == 0:
                        ok = p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0
                    else:
                        ok = p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0
                    if ok:
                        cand_y[n] = y
                        cand_x[n] = x
                        n += 1
            # Parallel ZS can delete whole 2x2 blocks; re-check each deletion.
            for i in range(n):
                y = cand_y[i]
                x = cand_x[i]
                if simple[_code(img, y, x)]:
                    img[y, x] = False
                    changed = True
    return img


@numba.njit(cache=True)
def _prune_redundant(img, simple):
    h, w = img.shape
    changed = True
    while changed:
        changed = False
        for y in range(h):
            for x in range(w):
                if img[y, x]:
                    c = _code(img, y, x)
                    if _popcount(c) >= 2 and simple[c]:
                        img[y, x] = False
                        changed = True
    return img


def skeletonize(mask: np.ndarray) -> np.ndarray:
    """Zhang-Suen thinning to a fixed point, then removal of leftover staircase pixels.

    Every deletion is re-checked to be a simple point at the moment it is
    applied, so each 8-connected component survives with its connectivity
    intact (plain parallel Zhang-Suen erases 2x2 blocks entirely).
    """
    img = np.array(mask, dtype=np.bool_, copy=True)
    if img.ndim != 2:
        raise ValueError(f"expected 2-D mask, got shape {img.shape}")
    if img.size == 0:
        return img
    img = _zhang_suen(img, SIMPLE)
    return _prune_redundant(img, SIMPLE)


def neighbor_count(mask: np.ndarray) -> np.ndarray:
    m = np.pad(np.asarray(mask, dtype=np.int32), 1)
    h, w = mask.shape
    total = np.zeros((h, w), dtype=np.int32)
    for dy, dx in RING:
        total += m[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
    return total


def branch_count(mask: np.ndarray) -> np.ndarray:
    """Number of 8-connected groups among each pixel's set neighbours."""
    mask = np.asarray(mask, dtype=bool)
    table = np.zeros(256, dtype=np.int32)
    for code in range(256):
        on = {RING[i] for i in range(8) if code >> i & 1}
        count = 0
        while on:
            stack = [on.pop()]
            count += 1
            while stack:
                a = stack.pop()
                near = {b for b in on if max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1}
                on -= near
                stack.extend(near)
        table[code] = count
    m = np.pad(mask, 1)
    h, w = mask.shape
    codes = np.zeros((h, w), dtype=np.int32)
    for i, (dy, dx) in enumerate(RING):
        codes |= m[1 + dy:1 + dy + h, 1 + dx:1 + dx + w].astype(np.int32) << i
    return np.where(mask, table[codes], 0)


# ---------------------------------------------------------------------------
# curve tracing

def trace_curves(skeleton: np.ndarray) -> list[list[tuple[int, int]]]:
    """Split a thin mask into pixel chains ``[(x, y), ...]``.

    End points and junctions (pixels without exactly two set neighbours)
    terminate chains; closed loops are emitted starting at their first pixel
    in raster order, with the start repeated at the end.
    """
    sk = np.asarray(skeleton, dtype=bool)
    h, w = sk.shape
    deg = neighbor_count(sk)

    def nbrs(y, x):
        for dy, dx in RING:
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w and sk[yy, xx]:
                yield yy, xx

    visited_edges: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    visited_px: set[tuple[int, int]] = set()

    def edge(a, b):
        return (a, b) if a < b else (b, a)

    def walk(start, first):
        path = [start, first]
        visited_edges.add(edge(start, first))
        prev, cur = start, first
        while deg[cur] == 2:
            nxt = None
            for cand in nbrs(*cur):
                if cand != prev and edge(cur, cand) not in visited_edges:
                    nxt = cand
                    break
            if nxt is None:
                break
            visited_edges.add(edge(cur, nxt))
            path.append(nxt)
            prev, cur = cur, nxt
            if cur == start:
                break
        visited_px.update(path)
        return path

    curves = []
    ys, xs = np.nonzero(sk)
    pixels = list(zip(ys.tolist(), xs.tolist()))
    for p in pixels:
        if deg[p] == 2:
            continue
        visited_px.add(p)
        if deg[p] == 0:
            curves.append([p])
            continue
        for q in list(nbrs(*p)):
            if edge(p, q) not in visited_edges:
                curves.append(walk(p, q))
    for p in pixels:
        if p in visited_px:
            continue
        q = next(iter(nbrs(*p)), None)
        if q is None:
            continue
        curves.append(walk(p, q))
    return [[(x, y) for y, x in c] for c in curves]


def simulate_scribbles(gt_surface: np.ndarray, kernel_size: int = 7,
                       anchor: tuple[int, int] = (3, 6)) -> ScribbleSet:
    """Centerline-like foreground scribbles from a road surface mask.

    The surface is eroded with a cross kernel (anchor given as ``(x, y)``),
    thinned, and the thin curves traced into polylines.
    """
    eroded = erode(gt_surface, cross_kernel(kernel_size), anchor)
    skel = skeletonize(eroded)
    lines = [Polyline(tuple((float(x), float(y)) for x, y in c), FOREGROUND)
             for c in trace_curves(skel)]
    return ScribbleSet(tuple(lines))
