"""Bounding paths, bound distances and lower bound distances per subgraph.

Bounding paths between two boundary vertices are chosen once, on vfrag
counts (initial weights), and never change. As weights move, each path's
actual distance and bound distance are refreshed and the pair's lower bound
distance is re-derived from them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

from .compaction import Compaction, build_compaction, retrieve_paths
from .ksp import ProgressiveYen
from .partition import Partition, Subgraph
from .units import fmt_fixed
from .vfrag import UnitWeightProfile, bound_distance

INF = math.inf
ENUMERATION_CAP = 50  # raw paths enumerated per unit of xi


@dataclass
class BoundingPath:
    id: int
    sg: int
    endpoints: tuple[int, int]
    vertices: tuple[int, ...]
    edges: tuple[int, ...]
    phi: int
    actual: int = 0
    bound: int = 0


class LowerBound(NamedTuple):
    distance: float
    path_id: int | None
    claim: int  # 1: exact within the subgraph, 2: bound only, 0: unreachable


@dataclass
class BoundingPathSet:
    """Up to ``xi`` bounding paths with distinct vfrag counts, ascending by phi.

    ``certify_phi`` is the smallest vfrag count a path outside the set can
    have (None once every simple path was enumerated). It equals the largest
    kept phi unless an equal-phi path was dropped earlier in the enumeration.
    """

    sg: int
    endpoints: tuple[int, int]
    paths: list[BoundingPath]
    certify_phi: int | None
    raw_enumerated: int = 0
    lbd: float = INF
    lower_path: int | None = None
    claim: int = 0

    @property
    def unreachable(self) -> bool:
        return not self.paths


def _path_edges(graph, vertices):
    return tuple(graph.edge_id(a, b) for a, b in zip(vertices, vertices[1:]))


def compute_bounding_paths(
    sg: Subgraph, pair, xi: int, weights=None, profile=None, vfrag_adj=None, first_id: int = 0
) -> BoundingPathSet:
    """Enumerate loopless paths by vfrag count, keeping the first path of each of the ``xi`` smallest counts."""
    if xi < 1:
        raise ValueError("xi must be >= 1")
    a, b = pair
    g = sg.graph
    weights = g.weight if weights is None else weights
    if profile is None:
        if sg.unit_weights is not None and weights is g.weight:
            profile = sg.unit_weights
        else:
            profile = UnitWeightProfile.from_edges(
                [weights[e] for e in sg.edge_ids], [g.initial[e] for e in sg.edge_ids]
            )
    adj = sg.vfrag_adjacency() if vfrag_adj is None else vfrag_adj
    kept: dict[int, tuple] = {}
    dropped_min = None
    raw = 0
    last_phi = None
    exhausted = True
    it = ProgressiveYen(adj, a, b)
    for p in it:
        raw += 1
        last_phi = p.distance
        if p.distance in kept:
            if dropped_min is None:
                dropped_min = p.distance
        else:
            kept[p.distance] = p.vertices
            if len(kept) == xi:
                exhausted = False
                break
        if raw >= ENUMERATION_CAP * xi:
            exhausted = False
            break
    if exhausted:
        certify = dropped_min
    else:
        certify = last_phi if dropped_min is None else min(dropped_min, last_phi)
    paths = []
    for i, phi in enumerate(sorted(kept)):
        vs = kept[phi]
        edges = _path_edges(g, vs)
        paths.append(
            BoundingPath(
                id=first_id + i,
                sg=sg.id,
                endpoints=(a, b),
                vertices=vs,
                edges=edges,
                phi=phi,
                actual=sum(weights[e] for e in edges),
                bound=bound_distance(profile, phi),
            )
        )
    bps = BoundingPathSet(sg.id, (a, b), paths, certify, raw)
    apply_lower_bound(bps)
    return bps


def lower_bound(bps: BoundingPathSet) -> LowerBound:
    """Lower bound distance of a pair from its bounding paths.

    With ``u`` the path of least actual distance and ``r`` the certifying
    path (phi == ``certify_phi``): if ``D(u) <= BD(r)`` no outside path can be
    shorter, so ``D(u)`` is the exact within-subgraph distance; otherwise
    ``BD(r)`` is a lower bound on it.
    """
    if not bps.paths:
        return LowerBound(INF, None, 0)
    u = min(bps.paths, key=lambda p: (p.actual, p.phi))
    if bps.certify_phi is None:
        return LowerBound(u.actual, u.id, 1)
    r = next(p for p in bps.paths if p.phi == bps.certify_phi)
    if u.actual <= r.bound:
        return LowerBound(u.actual, u.id, 1)
    return LowerBound(r.bound, r.id, 2)


def apply_lower_bound(bps: BoundingPathSet) -> LowerBound:
    lb = lower_bound(bps)
    bps.lbd, bps.lower_path, bps.claim = lb
    return lb


class MbdTable:
    """Per boundary pair: lower bound distance contributed by every subgraph containing it."""

    def __init__(self):
        self.entries: dict[tuple[int, int], dict[int, float]] = {}

    def set(self, pair, sg: int, lbd: float):
        self.entries.setdefault(pair, {})[sg] = lbd

    def __contains__(self, pair):
        return pair in self.entries

    def __eq__(self, other):
        return isinstance(other, MbdTable) and self.entries == other.entries

    def pairs(self):
        return sorted(self.entries)

    def min_lower_bound(self, pair) -> tuple[float, int]:
        try:
            contrib = self.entries[pair]
        except KeyError:
            raise LookupError(f"pair {pair} not in table") from None
        sg = min(contrib, key=lambda s: (contrib[s], s))
        return contrib[sg], sg


def min_lower_bound(table: MbdTable, pair) -> tuple[float, int]:
    return table.min_lower_bound(pair)


def estimate_epindex_elements(n_b: int, xi: int, n_e: int) -> int:
    return n_b * (n_b - 1) // 2 * xi * n_e


class SubgraphIndex:
    """DTLP state of one subgraph: bounding-path sets of all boundary pairs plus their compaction."""

    def __init__(self, sg: Subgraph, xi: int, h: int = 20, b: int = 2):
        self.sg = sg
        self.xi = xi
        g = sg.graph
        profile = sg.refresh_unit_weights()
        adj = sg.vfrag_adjacency()
        self.sets: dict[tuple[int, int], BoundingPathSet] = {}
        self.paths: list[BoundingPath] = []
        for pair in boundary_pairs_of(sg):
            bps = compute_bounding_paths(sg, pair, xi, profile=profile, vfrag_adj=adj, first_id=len(self.paths))
            self.sets[pair] = bps
            self.paths.extend(bps.paths)
        self.compaction: Compaction = build_compaction(self.paths, h=h, b=b)

    def lbds(self) -> dict:
        return {pair: bps.lbd for pair, bps in self.sets.items()}

    def paths_on_edge(self, eid) -> frozenset:
        if eid not in self.compaction.tree:
            return frozenset()
        return retrieve_paths(self.compaction.tree, eid)

    def refresh(self, changed_edges) -> set:
        """Apply ``(edge id, delta)`` items (milli-units) and return the pairs whose lbd changed."""
        g = self.sg.graph
        own = set(self.sg.edge_ids)
        pending: dict[int, int] = {}
        for eid, dw in changed_edges:
            if eid not in own:
                raise ValueError(f"edge {eid} not in subgraph {self.sg.id}")
            pending[eid] = pending.get(eid, g.weight[eid]) + dw
        bad = [e for e, w in pending.items() if w <= 0]
        if bad:
            raise ValueError(f"update batch rejected: non-positive weight on edges {sorted(bad)}")
        for eid, dw in changed_edges:
            if dw == 0:
                continue
            g.weight[eid] += dw
            for pid in self.paths_on_edge(eid):
                self.paths[pid].actual += dw
        if not any(dw for _, dw in changed_edges):
            return set()
        profile = self.sg.refresh_unit_weights()
        for p in self.paths:
            p.bound = bound_distance(profile, p.phi)
        changed = set()
        for pair, bps in self.sets.items():
            old = bps.lbd
            apply_lower_bound(bps)
            if bps.lbd != old:
                changed.add(pair)
        return changed


def boundary_pairs_of(sg: Subgraph):
    return combinations(sorted(sg.boundary), 2)


def refresh_bounds(index: SubgraphIndex, changed_edges) -> set:
    return index.refresh(changed_edges)


class DtlpIndex:
    """Bounding-path indexes of every subgraph of a partition and the resulting MBD table."""

    def __init__(self, partition: Partition, xi: int, h: int = 20, b: int = 2):
        self.partition = partition
        self.xi = xi
        self.indexes = [SubgraphIndex(sg, xi, h, b) for sg in partition]
        self.table = MbdTable()
        for ix in self.indexes:
            for pair, lbd in ix.lbds().items():
                self.table.set(pair, ix.sg.id, lbd)

    def apply_batch(self, changes) -> list[tuple[tuple[int, int], int, float]]:
        """Route ``(edge id, delta)`` items to owning subgraphs; return ``(pair, sg, new lbd)`` updates."""
        by_sg: dict[int, list] = {}
        for eid, dw in changes:
            by_sg.setdefault(self.partition.edge_owner[eid], []).append((eid, dw))
        updates = []
        for sid in sorted(by_sg):
            ix = self.indexes[sid]
            for pair in sorted(ix.refresh(by_sg[sid])):
                lbd = ix.sets[pair].lbd
                self.table.set(pair, sid, lbd)
                updates.append((pair, sid, lbd))
        return updates


def write_bounding_paths_csv(indexes, out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["sg", "src", "dst", "phi", "actual", "bound"])

    for ix in indexes:
        for (a, b), bps in sorted(ix.sets.items()):
            for p in bps.paths:
                w.writerow([ix.sg.id, a, b, p.phi, fmt_fixed(p.actual), fmt_fixed(p.bound)])
