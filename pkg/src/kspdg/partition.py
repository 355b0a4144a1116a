"""BFS partitioning of a graph into bounded-size subgraphs sharing boundary vertices."""

from __future__ import annotations

import csv
from collections import deque
from itertools import combinations

from .graph import Graph
from .vfrag import UnitWeightProfile


class Subgraph:
    """A block of the partition.

    Holds ids only; weights are read from the owning graph (or from an
    explicit weight snapshot) whenever an adjacency is built.
    """

    def __init__(self, sid: int, graph: Graph, vertices, edge_ids):
        self.id = sid
        self.graph = graph
        self.vertices = frozenset(vertices)
        self.edge_ids = tuple(sorted(edge_ids))
        self.boundary: frozenset[int] = frozenset()
        self.unit_weights: UnitWeightProfile | None = None

    def __repr__(self):
        return f"Subgraph({self.id}, |V|={len(self.vertices)}, |E|={len(self.edge_ids)}, |B|={len(self.boundary)})"

    @property
    def vfrag_total(self) -> int:
        return sum(self.graph.initial[e] for e in self.edge_ids)

    def adjacency(self, weights=None, exclude=()) -> dict:
        """Weighted adjacency restricted to this subgraph's own edges."""
        g = self.graph
        weights = g.weight if weights is None else weights
        out = {v: [] for v in sorted(self.vertices) if v not in exclude}
        for eid in self.edge_ids:
            u, v = g.edges[eid]
            if u in exclude or v in exclude:
                continue
            w = weights[eid]
            out[u].append((v, w))
            out[v].append((u, w))
        for lst in out.values():
            lst.sort()
        return out

    def vfrag_adjacency(self) -> dict:
        return self.adjacency(weights=self.graph.initial)

    def refresh_unit_weights(self, weights=None) -> UnitWeightProfile:
        g = self.graph
        weights = g.weight if weights is None else weights
        self.unit_weights = UnitWeightProfile.from_edges(
            [weights[e] for e in self.edge_ids], [g.initial[e] for e in self.edge_ids]
        )
        return self.unit_weights


class Partition:
    def __init__(self, graph: Graph, subgraphs: list[Subgraph], z: int):
        self.graph = graph
        self.z = z
        self.subgraphs = subgraphs
        v2s: list[list[int]] = [[] for _ in range(graph.n)]
        self.edge_owner = [-1] * graph.m
        for sg in subgraphs:
            for v in sg.vertices:
                v2s[v].append(sg.id)
            for e in sg.edge_ids:
                self.edge_owner[e] = sg.id
        self.vertex_to_subgraphs = [tuple(sorted(x)) for x in v2s]
        for sg in subgraphs:
            sg.boundary = frozenset(v for v in sg.vertices if len(self.vertex_to_subgraphs[v]) >= 2)

    def __len__(self):
        return len(self.subgraphs)

    def __iter__(self):
        return iter(self.subgraphs)

    def __getitem__(self, sid) -> Subgraph:
        return self.subgraphs[sid]

    def is_boundary(self, v: int) -> bool:
        return len(self.vertex_to_subgraphs[v]) >= 2

    @property
    def boundary_vertices(self) -> list[int]:
        return [v for v in range(self.graph.n) if self.is_boundary(v)]

    def shared_subgraphs(self, u: int, v: int) -> list[int]:
        """Ids of subgraphs containing both ``u`` and ``v``."""
        su = self.vertex_to_subgraphs[u]
        sv = set(self.vertex_to_subgraphs[v])
        return [s for s in su if s in sv]

    def dump_csv(self, out):
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["subgraph_id", "vertex_id", "is_boundary"])
        for sg in self.subgraphs:
            for v in sorted(sg.vertices):
                w.writerow([sg.id, v, int(v in sg.boundary)])


def _bfs_phase(graph: Graph, remaining: set[int], seeds, z: int, keep_empty: bool):
    adj: dict[int, list[tuple[int, int]]] = {}
    for eid in sorted(remaining):
        u, v = graph.edges[eid]
        adj.setdefault(u, []).append((v, eid))
        adj.setdefault(v, []).append((u, eid))
    for lst in adj.values():
        lst.sort()

    blocks = []
    covered: set[int] = set()
    for seed in seeds:
        if seed in covered:
            continue
        region = [seed]
        covered.add(seed)
        queue = deque([seed])
        full = False
        while queue and not full:
            u = queue.popleft()
            for w, _ in adj.get(u, ()):
                if w in covered:
                    continue
                if len(region) == z:
                    full = True
                    break
                region.append(w)
                covered.add(w)
                queue.append(w)
        members = set(region)
        edges = [
            eid
            for u in region
            for w, eid in adj.get(u, ())
            if u < w and w in members and eid in remaining
        ]
        remaining.difference_update(edges)
        if edges or keep_empty:
            blocks.append((region, edges))
    return blocks


def partition_bfs(g: Graph, z: int) -> Partition:
    """Split ``g`` into subgraphs of at most ``z`` vertices with disjoint edge sets.

    Each phase grows BFS regions from the smallest uncovered vertex; edges
    whose endpoints landed in different regions are left over and partitioned
    the same way in the next phase, so their endpoints become boundary
    vertices.
    """
    if z < 2:
        raise ValueError(f"subgraph size bound z must be >= 2, got {z}")
    remaining = set(range(g.m))
    blocks = _bfs_phase(g, remaining, range(g.n), z, keep_empty=True)
    while remaining:
        seeds = sorted({v for eid in remaining for v in g.edges[eid]})
        blocks.extend(_bfs_phase(g, remaining, seeds, z, keep_empty=False))
    subgraphs = [Subgraph(i, g, region, edges) for i, (region, edges) in enumerate(blocks)]
    return Partition(g, subgraphs, z)


def boundary_pairs(p: Partition, sid: int) -> list[tuple[int, int]]:
    return list(combinations(sorted(p[sid].boundary), 2))
