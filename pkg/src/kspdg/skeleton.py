"""Skeleton graph over boundary vertices weighted by minimum lower bound distances."""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import dataclass, field

from .bounds import MbdTable, compute_bounding_paths
from .graph import edge_key
from .ksp import ProgressiveYen
from .units import fmt_fixed

INF = math.inf


class SkeletonGraph:
    """Each edge keeps the lbd contributed by every subgraph; its weight is their minimum.

    ``paper_rule=True`` switches :meth:`apply_lbd_update` to the two-case rule
    (replace when the update comes from the current argmin subgraph, otherwise
    keep the smaller value), which can leave an over-estimate behind.
    """

    def __init__(self, paper_rule: bool = False):
        self.paper_rule = paper_rule
        self.contrib: dict[tuple[int, int], dict[int, float]] = {}
        self.weight: dict[tuple[int, int], float] = {}
        self.argmin: dict[tuple[int, int], int] = {}
        self.adj: dict[int, dict[int, float]] = {}

    def __eq__(self, other):
        if not isinstance(other, SkeletonGraph):
            return NotImplemented
        return (self.contrib, self.weight, self.argmin, self.adj) == (
            other.contrib,
            other.weight,
            other.argmin,
            other.adj,
        )

    def copy(self) -> SkeletonGraph:
        return copy.deepcopy(self)

    @property
    def vertices(self):
        return set(self.adj)

    def edges(self):
        return sorted(self.weight)

    def add_vertex(self, v):
        self.adj.setdefault(v, {})

    def _set_weight(self, pair, w, sg):
        u, v = pair
        if w == INF:
            self.weight.pop(pair, None)
            self.argmin.pop(pair, None)
            self.adj.get(u, {}).pop(v, None)
            self.adj.get(v, {}).pop(u, None)
            return
        self.weight[pair] = w
        self.argmin[pair] = sg
        self.adj.setdefault(u, {})[v] = w
        self.adj.setdefault(v, {})[u] = w

    def _recompute(self, pair):
        contrib = self.contrib.get(pair)
        if not contrib:
            self._set_weight(pair, INF, None)
            return
        sg = min(contrib, key=lambda s: (contrib[s], s))
        self._set_weight(pair, contrib[sg], sg)

    def apply_lbd_update(self, pair, sg: int, lbd: float) -> bool:
        """Record a subgraph's new lbd for ``pair``; return whether the edge weight changed."""
        pair = edge_key(*pair)
        self.add_vertex(pair[0])
        self.add_vertex(pair[1])
        old = self.weight.get(pair, INF)
        self.contrib.setdefault(pair, {})[sg] = lbd
        if self.paper_rule and pair in self.weight:
            if self.argmin[pair] == sg:
                self._set_weight(pair, lbd, sg)
            elif lbd < self.weight[pair]:
                self._set_weight(pair, lbd, sg)
        else:
            self._recompute(pair)
        return self.weight.get(pair, INF) != old

    def remove_contribution(self, pair, sg):
        pair = edge_key(*pair)
        contrib = self.contrib.get(pair)
        if contrib is None:
            return
        contrib.pop(sg, None)
        if not contrib:
            del self.contrib[pair]
        self._recompute(pair)

    def adjacency(self) -> dict:
        return {v: sorted(nb.items()) for v, nb in self.adj.items()}

    def dump_csv(self, out):
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["u", "v", "weight", "argmin_sg"])
        for (u, v) in self.edges():
            w.writerow([u, v, fmt_fixed(self.weight[(u, v)]), self.argmin[(u, v)]])


def build_skeleton(table: MbdTable, boundary_vertices=(), paper_rule=False) -> SkeletonGraph:
    g = SkeletonGraph(paper_rule=paper_rule)
    for v in boundary_vertices:
        g.add_vertex(v)
    for pair in table.pairs():
        g.add_vertex(pair[0])
        g.add_vertex(pair[1])
        for sg, lbd in sorted(table.entries[pair].items()):
            g.contrib.setdefault(pair, {})[sg] = lbd
        g._recompute(pair)
    return g


@dataclass
class Attachment:
    """Transient state added for a query endpoint; :meth:`release` undoes it."""

    skeleton: SkeletonGraph
    vertex: int
    added: set = field(default_factory=set)
    contributions: list = field(default_factory=list)
    unreachable: bool = False

    def release(self):
        for pair, sg in reversed(self.contributions):
            self.skeleton.remove_contribution(pair, sg)
        for v in self.added:
            if not self.skeleton.adj.get(v):
                self.skeleton.adj.pop(v, None)
        self.contributions.clear()
        self.added.clear()


def attachment_lbds(sg, v, targets, xi, weights=None) -> dict:
    """Lower bound distance from ``v`` to each target inside ``sg`` (INF when unreachable)."""
    out = {}
    adj = sg.vfrag_adjacency()
    for b in sorted(targets):
        if b == v:
            continue
        bps = compute_bounding_paths(sg, edge_key(v, b), xi, weights=weights, vfrag_adj=adj)
        out[b] = bps.lbd
    return out


def attach_with_lbds(g: SkeletonGraph, v, sid, lbds: dict) -> Attachment:
    h = Attachment(g, v)
    if v not in g.adj:
        g.add_vertex(v)
        h.added.add(v)
    for b, lbd in sorted(lbds.items()):
        if lbd == INF:
            continue
        if b not in g.adj:
            h.added.add(b)
        pair = edge_key(v, b)
        if sid in g.contrib.get(pair, {}):
            continue
        g.apply_lbd_update(pair, sid, lbd)
        h.contributions.append((pair, sid))
    h.unreachable = not h.contributions and not g.adj.get(v)
    return h


def attach_query_vertex(g: SkeletonGraph, v, sg, xi, extra_targets=(), weights=None) -> Attachment:
    """Insert a non-boundary vertex ``v`` of ``sg`` into the skeleton, linked to sg's boundary vertices.

    A vertex already present in the skeleton gets a no-op handle.
    """
    if v in g.adj and not extra_targets:
        return Attachment(g, v)
    targets = set(sg.boundary) | set(extra_targets)
    if v in sg.boundary:
        targets = set(extra_targets)
    lbds = attachment_lbds(sg, v, targets, xi, weights=weights)
    return attach_with_lbds(g, v, sg.id, lbds)


class ReferencePaths:
    """Lazy, rank-by-rank loopless shortest paths in the skeleton (resumable).

    ``within`` restricts the enumeration to a vertex subset.
    """

    def __init__(self, g: SkeletonGraph, s, t, within=None):
        adj = g.adjacency()
        if within is not None:
            adj = {v: [(w, x) for w, x in nb if w in within] for v, nb in adj.items() if v in within}
        self._it = ProgressiveYen(adj, s, t)
        self.paths = []

    def get(self, i: int):
        """The ``i``-th (1-based) reference path, or None when exhausted."""
        if i < 1:
            raise ValueError("rank starts at 1")
        while len(self.paths) < i:
            p = next(self._it, None)
            if p is None:
                return None
            self.paths.append(p)
        return self.paths[i - 1]

    def cap(self, distance):
        """Promise that paths longer than ``distance`` will not be asked for."""
        self._it.limit = min(self._it.limit, distance)


def reference_path(g: SkeletonGraph, s, t, i: int):
    for v in (s, t):
        if v not in g.adj:
            raise ValueError(f"vertex {v} not in skeleton")
    return ReferencePaths(g, s, t).get(i)
