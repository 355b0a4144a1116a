"""Seeded synthetic graphs for tests, validation and benchmarks."""

from __future__ import annotations

import math
import random

from .graph import Graph


def random_connected_graph(n: int, seed: int, extra: float = 0.5, wmin: int = 1, wmax: int = 100) -> Graph:
    """Random spanning tree plus ``extra * n`` chords, integer weights in ``[wmin, wmax]``."""
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    edges = {}
    for i in range(1, n):
        u, v = order[i], order[rng.randrange(i)]
        edges[(min(u, v), max(u, v))] = rng.randint(wmin, wmax)
    target = len(edges) + int(extra * n)
    tries = 0
    while len(edges) < target and tries < 50 * n:
        tries += 1
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges.setdefault((min(u, v), max(u, v)), rng.randint(wmin, wmax))
    return Graph(n, [(u, v, w) for (u, v), w in sorted(edges.items())])


def road_like_graph(n: int, seed: int, drop: float = 0.25, diag: float = 0.05, wmin: int = 1, wmax: int = 100) -> Graph:
    """Perturbed grid: about ``n`` vertices, some grid edges dropped, a few diagonals, kept connected."""
    rng = random.Random(seed)
    cols = max(2, int(math.sqrt(n)))
    rows = math.ceil(n / cols)
    vid = lambda r, c: r * cols + c  # noqa: E731

    cand = []
    for r in range(rows):
        for c in range(cols):
            v = vid(r, c)
            if v >= n:
                continue
            if c + 1 < cols and vid(r, c + 1) < n:
                cand.append((v, vid(r, c + 1)))
            if r + 1 < rows and vid(r + 1, c) < n:
                cand.append((v, vid(r + 1, c)))
            if r + 1 < rows and c + 1 < cols and vid(r + 1, c + 1) < n and rng.random() < diag:
                cand.append((v, vid(r + 1, c + 1)))
    rng.shuffle(cand)
    # keep a spanning forest first so dropping never disconnects
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    keep, rest = [], []
    for u, v in cand:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            keep.append((u, v))
        else:
            rest.append((u, v))
    keep += [e for e in rest if rng.random() >= drop]
    return Graph(n, [(u, v, rng.randint(wmin, wmax)) for u, v in sorted(keep)])
