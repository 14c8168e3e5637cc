"""Boykov-Kolmogorov augmenting-path max-flow on s-t graphs with symmetric n-links."""
from __future__ import annotations

from collections import deque

import numpy as np

_FREE, _SOURCE, _SINK = 0, 1, 2
_NONE, _TERMINAL, _ORPHAN = -1, -2, -3


class BKGraph:
    """Residual graph for one solve.

    ``source_cap[i]`` is the capacity of ``s -> i`` (paid when ``i`` ends on
    the sink side), ``sink_cap[i]`` that of ``i -> t``.  Each undirected edge
    becomes a pair of sister arcs ``2k`` / ``2k + 1``.
    """

    def __init__(self, source_cap, sink_cap, edges, weights):
        source_cap = np.asarray(source_cap, dtype=np.float64)
        sink_cap = np.asarray(sink_cap, dtype=np.float64)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        n = len(source_cap)
        if len(sink_cap) != n or len(weights) != len(edges):
            raise ValueError("inconsistent graph sizes")
        if (source_cap < 0).any() or (sink_cap < 0).any() or (weights < 0).any():
            raise ValueError("capacities must be nonnegative")
        self.n = n
        base = np.minimum(source_cap, sink_cap)
        self.flow = float(base.sum())
        self.tr_cap = (source_cap - sink_cap).tolist()
        self.head: list[int] = []
        self.cap: list[float] = []
        self.out: list[list[int]] = [[] for _ in range(n)]
        for (i, j), w in zip(edges.tolist(), weights.tolist()):
            if i == j:
                continue
            a = len(self.head)
            self.head += [j, i]
            self.cap += [w, w]
            self.out[i].append(a)
            self.out[j].append(a + 1)

    def solve(self) -> float:
        n = self.n
        head, cap, out, tr_cap = self.head, self.cap, self.out, self.tr_cap
        tree = [_FREE] * n
        parent = [_NONE] * n
        active: deque[int] = deque()
        in_queue = [False] * n
        for i in range(n):
            if tr_cap[i] > 0:
                tree[i], parent[i] = _SOURCE, _TERMINAL
            elif tr_cap[i] < 0:
                tree[i], parent[i] = _SINK, _TERMINAL
            else:
                continue
            active.append(i)
            in_queue[i] = True

        def activate(v):
            if not in_queue[v]:
                in_queue[v] = True
                active.append(v)

        def origin_ok(v):
            # walk to the root; valid iff it ends at a terminal link
            while True:
                p = parent[v]
                if p == _TERMINAL:
                    return True
                if p < 0:
                    return False
                v = head[p]

        while active:
            p = active[0]
            if tree[p] == _FREE:
                active.popleft()
                in_queue[p] = False
                continue
            # growth
            bridge = -1
            for a in out[p]:
                q = head[a]
                if tree[p] == _SOURCE:
                    if cap[a] <= 0:
                        continue
                else:
                    if cap[a ^ 1] <= 0:
                        continue
                if tree[q] == _FREE:
                    tree[q] = tree[p]
                    parent[q] = a ^ 1
                    activate(q)
                elif tree[q] != tree[p]:
                    bridge = a if tree[p] == _SOURCE else a ^ 1
                    break
            if bridge < 0:
                active.popleft()
                in_queue[p] = False
                continue

            # augment along s -> ... -> u -(bridge)-> v -> ... -> t
            u, v = head[bridge ^ 1], head[bridge]
            delta = cap[bridge]
            x = u
            while parent[x] != _TERMINAL:
                delta = min(delta, cap[parent[x] ^ 1])
                x = head[parent[x]]
            delta = min(delta, tr_cap[x])
            x = v
            while parent[x] != _TERMINAL:
                delta = min(delta, cap[parent[x]])
                x = head[parent[x]]
            delta = min(delta, -tr_cap[x])

            cap[bridge] -= delta
            cap[bridge ^ 1] += delta
            orphans: deque[int] = deque()
            x = u
            while parent[x] != _TERMINAL:
                a = parent[x] ^ 1
                cap[a] -= delta
                cap[a ^ 1] += delta
                nxt = head[parent[x]]
                if cap[a] <= 0:
                    parent[x] = _ORPHAN
                    orphans.append(x)
                x = nxt
            tr_cap[x] -= delta
            if tr_cap[x] <= 0:
                parent[x] = _ORPHAN
                orphans.append(x)
            x = v
            while parent[x] != _TERMINAL:
                a = parent[x]
                cap[a] -= delta
                cap[a ^ 1] += delta
                nxt = head[a]
                if cap[a] <= 0:
                    parent[x] = _ORPHAN
                    orphans.append(x)
                x = nxt
            tr_cap[x] += delta
            if tr_cap[x] >= 0:
                parent[x] = _ORPHAN
                orphans.append(x)
            self.flow += delta

            # adoption
            while orphans:
                o = orphans.popleft()
                t = tree[o]
                found = _NONE
                for a in out[o]:
                    q = head[a]
                    if tree[q] != t:
                        continue
                    res = cap[a ^ 1] if t == _SOURCE else cap[a]
                    if res > 0 and origin_ok(q):
                        found = a
                        break
                if found != _NONE:
                    parent[o] = found
                    continue
                for a in out[o]:
                    q = head[a]
                    if tree[q] != t:
                        continue
                    res = cap[a ^ 1] if t == _SOURCE else cap[a]
                    if res > 0:
                        activate(q)
                    if parent[q] >= 0 and head[parent[q]] == o:
                        parent[q] = _ORPHAN
                        orphans.append(q)
                tree[o] = _FREE
                parent[o] = _NONE
        self._tree = tree
        return self.flow

    def source_side(self) -> np.ndarray:
        """Nodes still reachable from the source in the residual graph."""
        return np.array([t == _SOURCE for t in self._tree], dtype=bool)
