"""Undirected weighted graphs, simple paths and DIMACS ``.gr`` I/O."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, TextIO

from .units import SCALE, fmt_fixed


class DimacsError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, order=True)
class Path:
    """A simple path. Ordering is (distance, vertex sequence), the library-wide tie rule."""

    distance: int
    vertices: tuple[int, ...]

    def __len__(self):
        return len(self.vertices)

    @property
    def source(self):
        return self.vertices[0]

    @property
    def target(self):
        return self.vertices[-1]

    def edges(self):
        vs = self.vertices
        return [edge_key(vs[i], vs[i + 1]) for i in range(len(vs) - 1)]

    def is_simple(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)


class Graph:
    """Undirected graph with dense vertex ids ``0..n-1``.

    Each edge has an id (its index in ``edges``, which is sorted by endpoint
    pair), a frozen integer ``initial`` weight (its vfrag count) and a current
    weight in milli-units that may change over time.
    """

    def __init__(self, n: int, weighted_edges: Iterable[tuple[int, int, int]] = ()):
        best: dict[tuple[int, int], int] = {}
        for u, v, w in weighted_edges:
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            if int(w) != w or w < 1:
                raise ValueError(f"edge ({u},{v}) weight must be a positive integer, got {w}")
            key = edge_key(u, v)
            if key not in best or w < best[key]:
                best[key] = int(w)
        self.n = n
        self.edges: list[tuple[int, int]] = sorted(best)
        self.initial: list[int] = [best[e] for e in self.edges]
        self.weight: list[int] = [w * SCALE for w in self.initial]
        self.edge_index = {e: i for i, e in enumerate(self.edges)}
        self.adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for eid, (u, v) in enumerate(self.edges):
            self.adj[u].append((v, eid))
            self.adj[v].append((u, eid))
        for lst in self.adj:
            lst.sort()

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_id(self, u: int, v: int) -> int:
        return self.edge_index[edge_key(u, v)]

    def copy(self) -> Graph:
        g = Graph.__new__(Graph)
        g.n = self.n
        g.edges = self.edges
        g.initial = self.initial
        g.weight = list(self.weight)
        g.edge_index = self.edge_index
        g.adj = self.adj
        return g

    def weighted_adjacency(self, weights=None, vertices=None, exclude=()) -> dict:
        """``{v: [(nbr, w), ...]}`` sorted by neighbour, optionally restricted."""
        weights = self.weight if weights is None else weights
        vs = range(self.n) if vertices is None else vertices
        keep = None if vertices is None else set(vertices)
        out = {}
        for v in vs:
            if v in exclude:
                continue
            out[v] = [
                (w, weights[eid])
                for w, eid in self.adj[v]
                if w not in exclude and (keep is None or w in keep)
            ]
        return out

    def path_distance(self, vertices, weights=None) -> int:
        weights = self.weight if weights is None else weights
        return sum(weights[self.edge_id(a, b)] for a, b in zip(vertices, vertices[1:]))

    def make_path(self, vertices, weights=None) -> Path:
        vertices = tuple(vertices)
        return Path(self.path_distance(vertices, weights), vertices)

    def is_path(self, vertices) -> bool:
        if len(set(vertices)) != len(vertices):
            return False
        return all(edge_key(a, b) in self.edge_index for a, b in zip(vertices, vertices[1:]))

    def components(self) -> list[int]:
        comp = [-1] * self.n
        c = 0
        for root in range(self.n):
            if comp[root] >= 0:
                continue
            stack = [root]
            comp[root] = c
            while stack:
                u = stack.pop()
                for w, _ in self.adj[u]:
                    if comp[w] < 0:
                        comp[w] = c
                        stack.append(w)
            c += 1
        return comp

    def blocks(self) -> list[frozenset]:
        """Vertex sets of the biconnected components (bridges count as two-vertex blocks)."""
        cached = getattr(self, "_blocks", None)
        if cached is not None:
            return cached
        disc = [-1] * self.n
        low = [0] * self.n
        out: list[frozenset] = []
        clock = 0
        for root in range(self.n):
            if disc[root] >= 0 or not self.adj[root]:
                continue
            disc[root] = low[root] = clock
            clock += 1
            edges: list[tuple[int, int]] = []
            stack = [(root, -1, iter(self.adj[root]))]
            while stack:
                u, via, it = stack[-1]
                for w, eid in it:
                    if eid == via:
                        continue
                    if disc[w] < 0:
                        disc[w] = low[w] = clock
                        clock += 1
                        edges.append((u, w))
                        stack.append((w, eid, iter(self.adj[w])))
                        break
                    if disc[w] < disc[u]:
                        edges.append((u, w))
                        low[u] = min(low[u], disc[w])
                else:
                    stack.pop()
                    if not stack:
                        continue
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[u])
                    if low[u] >= disc[parent]:
                        comp = set()
                        while True:
                            a, b = edges.pop()
                            comp.update((a, b))
                            if (a, b) == (parent, u):
                                break
                        out.append(frozenset(comp))
        self._blocks = out
        return out

    def corridor(self, s: int, t: int) -> frozenset:
        """Vertices that lie on at least one simple ``s``-``t`` path (empty if disconnected)."""
        if s == t:
            return frozenset((s,))
        member: dict[int, list[int]] = {}
        blocks = self.blocks()
        for i, b in enumerate(blocks):
            for v in b:
                member.setdefault(v, []).append(i)
        # BFS over the block-cut tree from s to t
        prev: dict = {("v", s): None}
        queue = [("v", s)]
        for node in queue:
            if node == ("v", t):
                break
            kind, x = node
            nbrs = [("b", i) for i in member.get(x, ())] if kind == "v" else [("v", v) for v in blocks[x]]
            for nb in nbrs:
                if nb not in prev:
                    prev[nb] = node
                    queue.append(nb)
        if ("v", t) not in prev:
            return frozenset()
        keep: set = set()
        node = ("v", t)
        while node is not None:
            if node[0] == "b":
                keep |= blocks[node[1]]
            node = prev[node]
        return frozenset(keep)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n, self.edges, self.initial, self.weight) == (
            other.n,
            other.edges,
            other.initial,
            other.weight,
        )

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def parse_dimacs(src) -> Graph:
    """Read a 9th DIMACS challenge ``.gr`` file from a path, bytes or a text stream.

    Arcs are symmetrized: one undirected edge per vertex pair carrying the
    smallest listed arc weight. Vertex ids are shifted to 0-based.
    """
    if isinstance(src, bytes):
        stream: TextIO = io.StringIO(src.decode())
    elif isinstance(src, (str, os.PathLike)):
        with open(src) as fh:
            return parse_dimacs(fh)
    else:
        stream = src

    n = None
    arcs = []
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode()
        parts = line.split()
        if not parts or parts[0] == "c":
            continue
        tag = parts[0]
        if tag == "p":
            if n is not None:
                raise DimacsError(lineno, "duplicate problem line")
            if len(parts) != 4 or parts[1] != "sp":
                raise DimacsError(lineno, "malformed header, expected 'p sp <n> <m>'")
            try:
                n, _m = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(lineno, "malformed header counts") from None
            if n < 0:
                raise DimacsError(lineno, "negative vertex count")
        elif tag == "a":
            if n is None:
                raise DimacsError(lineno, "arc before problem line")
            if len(parts) != 4:
                raise DimacsError(lineno, "malformed arc line")
            try:
                u, v, w = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(lineno, "non-integer field in arc line") from None
            if not (1 <= u <= n and 1 <= v <= n):
                raise DimacsError(lineno, f"vertex id out of range 1..{n}")
            if w < 1:
                raise DimacsError(lineno, f"non-positive weight {w}")
            if u != v:
                arcs.append((u - 1, v - 1, w))
        else:
            raise DimacsError(lineno, f"unknown line type {tag!r}")
    if n is None:
        raise DimacsError(0, "missing problem line")
    g = Graph(n, arcs)
    g.declared_arcs = _m
    return g


def emit_dimacs(g: Graph, out: TextIO | None = None, use_current=False) -> str:
    """Write ``g`` as a ``.gr`` file, both arc directions per edge."""
    buf = io.StringIO() if out is None else out
    buf.write(f"p sp {g.n} {2 * g.m}\n")
    for eid, (u, v) in enumerate(g.edges):
        if use_current:
            w = g.weight[eid]
            if w % SCALE:
                raise ValueError(f"edge {eid} weight {fmt_fixed(w)} is not integral")
            w //= SCALE
        else:
            w = g.initial[eid]
        buf.write(f"a {u + 1} {v + 1} {w}\n")
        buf.write(f"a {v + 1} {u + 1} {w}\n")
    return buf.getvalue() if out is None else ""
