"""Bowyer-Watson Delaunay triangulation, used for superpixel adjacency."""
from __future__ import annotations

import numpy as np

_SUPER_SCALE = 1000.0


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _circumcircle(a, b, c):
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    return ux, uy, (ax - ux) ** 2 + (ay - uy) ** 2


class _Mesh:
    """Triangles as CCW vertex triples with a directed-edge -> triangle map."""

    def __init__(self, pts: np.ndarray, capacity: int):
        self.pts = pts
        self.tri = np.zeros((capacity, 3), dtype=np.int64)
        self.cc = np.zeros((capacity, 2))
        self.r2 = np.zeros(capacity)
        self.alive = np.zeros(capacity, dtype=bool)
        self.count = 0
        self.edges: dict[tuple[int, int], int] = {}

    def add(self, a: int, b: int, c: int) -> int:
        t = self.count
        if t == len(self.alive):
            grow = len(self.alive)
            self.tri = np.vstack([self.tri, np.zeros((grow, 3), dtype=np.int64)])
            self.cc = np.vstack([self.cc, np.zeros((grow, 2))])
            self.r2 = np.concatenate([self.r2, np.zeros(grow)])
            self.alive = np.concatenate([self.alive, np.zeros(grow, dtype=bool)])
        self.count += 1
        self.tri[t] = (a, b, c)
        ux, uy, r2 = _circumcircle(self.pts[a], self.pts[b], self.pts[c])
        self.cc[t] = (ux, uy)
        self.r2[t] = r2
        self.alive[t] = True
        self.edges[(a, b)] = t
        self.edges[(b, c)] = t
        self.edges[(c, a)] = t
        return t

    def remove(self, t: int) -> None:
        a, b, c = self.tri[t].tolist()
        for e in ((a, b), (b, c), (c, a)):
            if self.edges.get(e) == t:
                del self.edges[e]
        self.alive[t] = False

    def in_circle(self, t: int, p) -> bool:
        d2 = (p[0] - self.cc[t, 0]) ** 2 + (p[1] - self.cc[t, 1]) ** 2
        # cocircular points count as outside; ties keep the existing diagonal
        return d2 < self.r2[t] * (1.0 - 1e-10)

    def locate(self, p) -> int:
        n = self.count
        live = np.nonzero(self.alive[:n])[0]
        d2 = ((self.cc[live] - p) ** 2).sum(1)
        for t in live[d2 <= self.r2[live] * (1.0 + 1e-9)].tolist():
            a, b, c = (self.pts[i] for i in self.tri[t])
            if _orient(a, b, p) >= 0 and _orient(b, c, p) >= 0 and _orient(c, a, p) >= 0:
                return t
        raise RuntimeError("point outside the triangulation")

    def insert(self, i: int) -> None:
        p = self.pts[i]
        start = self.locate(p)
        cavity = {start}
        stack = [start]
        while True:
            while stack:
                t = stack.pop()
                a, b, c = self.tri[t].tolist()
                for u, v in ((a, b), (b, c), (c, a)):
                    nb = self.edges.get((v, u))
                    if nb is not None and nb not in cavity and self.in_circle(nb, p):
                        cavity.add(nb)
                        stack.append(nb)
            boundary = []
            for t in cavity:
                a, b, c = self.tri[t].tolist()
                for u, v in ((a, b), (b, c), (c, a)):
                    nb = self.edges.get((v, u))
                    if nb is None or nb not in cavity:
                        boundary.append((u, v, nb))
            # a boundary edge seen edge-on from p means a near-cocircular
            # neighbour was left out; pull it in and retry
            bad = [nb for u, v, nb in boundary
                   if nb is not None and _orient(self.pts[u], self.pts[v], p) <= 0]
            if not bad:
                break
            for nb in bad:
                cavity.add(nb)
                stack.append(nb)
        for t in cavity:
            self.remove(t)
        for u, v, _ in boundary:
            self.add(u, v, i)


def _collinear(pts: np.ndarray) -> bool:
    p0 = pts[0]
    far = pts[np.argmax(((pts - p0) ** 2).sum(1))]
    d = far - p0
    length2 = float(d @ d)
    if length2 == 0.0:
        return True
    cross = d[0] * (pts[:, 1] - p0[1]) - d[1] * (pts[:, 0] - p0[0])
    return bool(np.all(np.abs(cross) <= 1e-9 * length2))


def triangulate(points) -> np.ndarray:
    """Delaunay triangles ``(T, 3)`` (CCW index triples) of distinct, non-collinear points."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    lo, hi = pts.min(0), pts.max(0)
    centre = (lo + hi) / 2.0
    span = max(float((hi - lo).max()), 1.0) * _SUPER_SCALE
    sup = np.array([
        [centre[0] - 2.0 * span, centre[1] - span],
        [centre[0] + 2.0 * span, centre[1] - span],
        [centre[0], centre[1] + 2.0 * span],
    ])
    allpts = np.vstack([pts, sup])
    mesh = _Mesh(allpts, capacity=max(16, 8 * n))
    mesh.add(n, n + 1, n + 2)
    for i in range(n):
        mesh.insert(i)
    tris = mesh.tri[:mesh.count][mesh.alive[:mesh.count]]
    return tris[(tris < n).all(1)]


def delaunay_adjacency(centroids) -> np.ndarray:
    """Undirected neighbour pairs ``(E, 2)`` with ``i < j``, sorted.

    Duplicate centroids are triangulated once (first id wins) and each
    duplicate is linked to its winner.  Fully collinear inputs are chained
    in order along the line.
    """
    pts = np.asarray(centroids, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("need at least one centroid")
    if not np.all(np.isfinite(pts)):
        raise ValueError("centroids must be finite")
    winner: dict[tuple[float, float], int] = {}
    keep, extra = [], []
    for i, (x, y) in enumerate(pts.tolist()):
        key = (x, y)
        if key in winner:
            extra.append((winner[key], i))
        else:
            winner[key] = i
            keep.append(i)
    keep_arr = np.array(keep)
    uniq = pts[keep_arr]
    edges: set[tuple[int, int]] = set()
    if len(uniq) == 2:
        edges.add((0, 1))
    elif len(uniq) > 2:
        if _collinear(uniq):
            d = uniq[np.argmax(((uniq - uniq[0]) ** 2).sum(1))] - uniq[0]
            order = np.argsort(uniq @ d, kind="stable")
            edges.update(zip(order[:-1].tolist(), order[1:].tolist()))
        else:
            for a, b, c in triangulate(uniq).tolist():
                edges.update(((a, b), (b, c), (c, a)))
    out = {tuple(sorted((int(keep_arr[a]), int(keep_arr[b])))) for a, b in edges}
    out.update(tuple(sorted(e)) for e in extra)
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    return np.array(sorted(out), dtype=np.int64)
