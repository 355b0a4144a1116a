"""Shared brute-force oracles for the test suite."""

import heapq
import random

import pytest

from kspdg.graph import Graph, Path
from kspdg.ksp import as_adjacency


def simple_paths(obj, s, t, cost=None, limit=200_000):
    """Every simple s-t path as a Path, sorted by (distance, sequence).

    ``cost`` maps ``(u, v)`` to an edge cost; defaults to the adjacency weights.
    """
    adj = as_adjacency(obj)
    out = []
    stack = [(s, (s,), 0)]
    while stack:
        u, seq, d = stack.pop()
        if u == t:
            out.append(Path(d, seq))
            if len(out) > limit:
                raise RuntimeError("too many paths for brute force")
            continue
        for w, x in adj[u]:
            if w not in seq:
                stack.append((w, seq + (w,), d + (x if cost is None else cost(u, w))))
    return sorted(out)


def dijkstra(obj, s):
    adj = as_adjacency(obj)
    dist = {s: 0}
    heap = [(0, s)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for w, x in adj[u]:
            if d + x < dist.get(w, float("inf")):
                dist[w] = d + x
                heapq.heappush(heap, (d + x, w))
    return dist


def grid(rows, cols, w=1):
    vid = lambda r, c: r * cols + c  # noqa: E731
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1), w))
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c), w))
    return Graph(rows * cols, edges)


def path_graph(n, w=1):
    return Graph(n, [(i, i + 1, w) for i in range(n - 1)])


def connected_pair(g, rng):
    comp = g.components()
    while True:
        s, t = rng.randrange(g.n), rng.randrange(g.n)
        if s != t and comp[s] == comp[t]:
            return s, t


@pytest.fixture
def rng():
    return random.Random(12345)
