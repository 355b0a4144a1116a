"""KSP-DG: filter with skeleton reference paths, refine with per-subgraph partial KSPs.

The query logic lives in :func:`ksp_dg_search`, a generator that yields what
it needs from subgraph owners (attachment lbds, partial k-shortest paths) and
receives the answers via ``send``. :func:`ksp_dg` drives it in-process; the
cluster simulator drives the same generator with messages.

Partial paths of a segment may not pass through any other boundary vertex
(nor through the query endpoints), so every candidate follows its reference
path's boundary sequence exactly.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .graph import Path
from .ksp import PYenStats, pyen_ksp
from .partition import Partition
from .skeleton import ReferencePaths, SkeletonGraph, attach_with_lbds, attachment_lbds

INF = math.inf


@dataclass
class NeedAttachment:
    vertex: int
    sid: int
    targets: tuple


@dataclass
class NeedPartials:
    rank: int
    ref_path: tuple
    requests: list  # [(ordered pair, k)]
    endpoints: tuple


@dataclass
class PartialResult:
    paths: list
    exhausted: bool
    invocations: int = 0
    reuse_hits: int = 0
    pruned_tasks: int = 0


@dataclass
class QueryStats:
    iterations: int = 0
    subgraph_invocations: int = 0
    reuse_hits: int = 0
    pruned_tasks: int = 0
    partial_requests: int = 0
    lemma_violations: int = 0
    capped_joins: int = 0
    reference_distances: list = field(default_factory=list)

    def row(self) -> dict:
        return {
            "iterations": self.iterations,
            "reuse_hits": self.reuse_hits,
            "pruned_tasks": self.pruned_tasks,
            "subgraph_invocations": self.subgraph_invocations,
            "partial_requests": self.partial_requests,
            "lemma_violations": self.lemma_violations,
            "capped_joins": self.capped_joins,
        }


@dataclass
class QueryOutcome:
    paths: list
    stats: QueryStats
    unreachable: bool = False
    exhausted: bool = False


class CandidateList:
    """The ``k`` best distinct paths seen so far, ascending by (distance, sequence)."""

    def __init__(self, k: int):
        self.k = k
        self.paths: list[Path] = []
        self._seqs: set = set()

    def add(self, paths):
        for p in paths:
            if p.vertices not in self._seqs:
                self._seqs.add(p.vertices)
                self.paths.append(p)
        self.paths.sort()
        for p in self.paths[self.k :]:
            self._seqs.discard(p.vertices)
        del self.paths[self.k :]

    @property
    def full(self) -> bool:
        return len(self.paths) >= self.k

    @property
    def dist(self) -> float:
        return self.paths[-1].distance if self.full else INF

    def __len__(self):
        return len(self.paths)


def segment_blocked(partition: Partition, sid: int, pair, endpoints) -> set:
    sg = partition[sid]
    return (set(sg.boundary) | set(endpoints)) - set(pair)


def partial_ksp(partition: Partition, pair, k, endpoints, weights=None, prune=True, workers=None) -> PartialResult:
    """Up to ``k`` shortest ``pair[0] -> pair[1]`` segment paths over every subgraph holding both."""
    a, b = pair
    found = []
    st = PYenStats()
    sids = partition.shared_subgraphs(a, b)
    for sid in sids:
        sg = partition[sid]
        found += pyen_ksp(
            sg, a, b, k, prune=prune, workers=workers, weights=weights,
            exclude=segment_blocked(partition, sid, pair, endpoints), stats=st,
        )
    found.sort()
    return PartialResult(found[:k], len(found) < k, len(sids), st.reuse_hits, st.pruned_tasks)


def _bits(x):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def _consistent_choices(interiors, exhausted):
    """Drop partial paths that share a vertex with every choice of some fully known segment.

    Returns per-segment bitmasks of surviving choices and the set of segments
    that can collide with another segment at all.
    """
    m = len(interiors)
    masks = []
    for ints in interiors:
        mv: dict = {}
        for r, vs in enumerate(ints):
            for v in vs:
                mv[v] = mv.get(v, 0) | (1 << r)
        masks.append(mv)
    pairs = [(i, j) for i in range(m) for j in range(m) if i != j and masks[i].keys() & masks[j].keys()]
    alive = [(1 << len(ints)) - 1 for ints in interiors]
    changed = True
    while changed:
        changed = False
        for i, j in pairs:
            if not exhausted[j]:
                continue  # unseen partial paths of j may fit anything
            mj = masks[j]
            for r in list(_bits(alive[i])):
                bad = 0
                for v in interiors[i][r]:
                    bad |= mj.get(v, 0)
                if not alive[j] & ~bad:
                    alive[i] &= ~(1 << r)
                    changed = True
    return alive, {i for i, _ in pairs}


def join_segments(lists, exhausted, k, limit=INF):
    """Best-first join of sorted per-segment path lists into the ``k`` shortest simple concatenations.

    Concatenations longer than ``limit`` are never produced. Returns
    ``(paths, None)`` or ``(None, j)`` when segment ``j`` must be extended
    before the join can be decided.

    The search walks a prefix tree over segment choices: a prefix that
    repeats a vertex is never extended, since every completion would repeat
    it too. Segments that can collide are placed first.
    """
    m = len(lists)
    if any(not lst for lst in lists):
        return [], None
    interiors = [[frozenset(p.vertices[1:-1]) for p in lst] for lst in lists]
    alive, clashing = _consistent_choices(interiors, exhausted)
    keep = [list(_bits(a)) for a in alive]
    for j in range(m):
        if not keep[j]:
            return ([], None) if exhausted[j] else (None, j)
    order = sorted(clashing, key=lambda j: (len(keep[j]), j)) + [j for j in range(m) if j not in clashing]
    segs = [[lists[j][r] for r in keep[j]] for j in order]
    ints = [[interiors[j][r] for r in keep[j]] for j in order]
    exh = [exhausted[j] for j in order]
    # unseen elements of a non-exhausted list are at least as long as its last fetched one
    tail = [lists[j][-1].distance for j in order]

    heap = [(sum(seg[0].distance for seg in segs), (0,))]
    out: list[Path] = []
    cutoff = None
    while heap:
        d, choice = heapq.heappop(heap)
        if d > limit or (cutoff is not None and d > cutoff):
            break
        depth = len(choice) - 1
        seg, r = segs[depth], choice[-1]
        if r >= len(seg):
            return None, order[depth]
        if r + 1 < len(seg):
            heapq.heappush(heap, (d - seg[r].distance + seg[r + 1].distance, choice[:-1] + (r + 1,)))
        elif not exh[depth]:
            heapq.heappush(heap, (d - seg[r].distance + tail[depth], choice[:-1] + (r + 1,)))
        mine = ints[depth][r]
        if mine and any(mine & ints[p][c] for p, c in enumerate(choice[:-1])):
            continue
        if depth + 1 < m:
            heapq.heappush(heap, (d, choice + (0,)))
            continue
        picked = [None] * m
        for p, c in enumerate(choice):
            picked[order[p]] = segs[p][c]
        seq = list(picked[0].vertices)
        for path in picked[1:]:
            seq.extend(path.vertices[1:])
        if len(set(seq)) == len(seq):
            out.append(Path(d, tuple(seq)))
            if len(out) == k:
                cutoff = d  # keep collecting equal-distance ties
    out.sort()
    return out[:k], None


def ksp_dg_search(partition: Partition, skeleton: SkeletonGraph, s, t, k, exact_ties=False, fetch_cap=None):
    """Generator implementing the KSP-DG iteration; see module docstring for the protocol.

    Stops once ``k`` candidates are held and the k-th distance is at most the
    next reference path's distance (strictly less with ``exact_ties``, which
    also pins down equal-distance ties at rank ``k``), or when reference
    paths run out.

    A segment's partial list is grown by doubling while the join needs it,
    up to ``fetch_cap`` paths (default ``max(64, 8 * k)``); past the cap the
    join proceeds with what exists and ``capped_joins`` is incremented.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    stats = QueryStats()
    fetch_cap = max(64, 8 * k) if fetch_cap is None else fetch_cap
    if s == t:
        return QueryOutcome([Path(0, (s,))], stats)
    handles = []
    try:
        for v, other in ((s, t), (t, s)):
            if partition.is_boundary(v):
                continue
            sid = partition.vertex_to_subgraphs[v][0]
            sg = partition[sid]
            targets = set(sg.boundary)
            if other in sg.vertices:
                targets.add(other)
            lbds = yield NeedAttachment(v, sid, tuple(sorted(targets)))
            handles.append(attach_with_lbds(skeleton, v, sid, lbds))
        if not skeleton.adj.get(s) or not skeleton.adj.get(t):
            return QueryOutcome([], stats, unreachable=True)

        # boundary vertices off every simple s-t path of G can never join a candidate
        refs = ReferencePaths(skeleton, s, t, within=partition.graph.corridor(s, t))
        cands = CandidateList(k)
        cache: dict = {}
        rank = 1
        ref = refs.get(1)
        if ref is None:
            return QueryOutcome([], stats, unreachable=True)
        while ref is not None:
            stats.iterations += 1
            stats.reference_distances.append(ref.distance)
            found = yield from _refine(ref, rank, cache, k, (s, t), stats, cands.dist, fetch_cap)
            stats.lemma_violations += sum(1 for p in found if p.distance < ref.distance)
            cands.add(found)
            if cands.full:
                # a longer reference path would only confirm termination
                refs.cap(cands.dist)
            nxt = refs.get(rank + 1)
            if nxt is None:
                break
            if cands.full and (cands.dist < nxt.distance if exact_ties else cands.dist <= nxt.distance):
                break
            rank += 1
            ref = nxt
        return QueryOutcome(list(cands.paths), stats, unreachable=not cands.paths, exhausted=not cands.full)
    finally:
        for h in reversed(handles):
            h.release()


def _refine(ref, rank, cache, k, endpoints, stats, limit=INF, fetch_cap=INF):
    segs = list(zip(ref.vertices, ref.vertices[1:]))
    need = [(pair, k) for pair in segs if pair not in cache]
    while True:
        if need:
            stats.partial_requests += len(need)
            resp = yield NeedPartials(rank, ref.vertices, need, endpoints)
            for pair, kk in need:
                r: PartialResult = resp[pair]
                cache[pair] = (r.paths, kk, r.exhausted)
                stats.subgraph_invocations += r.invocations
                stats.reuse_hits += r.reuse_hits
                stats.pruned_tasks += r.pruned_tasks
        lists = [cache[p][0] for p in segs]
        exh = [cache[p][2] for p in segs]
        out, more = join_segments(lists, exh, k, limit)
        if more is None:
            return out
        pair = segs[more]
        paths, kk, _ = cache[pair]
        if kk >= fetch_cap:
            stats.capped_joins += 1
            cache[pair] = (paths, kk, True)
            need = []
            continue
        need = [(pair, min(2 * kk, fetch_cap))]


def candidate_ksp(partition: Partition, ref_path, k, endpoints=None, weights=None, fetch_cap=None) -> list[Path]:
    """Candidate KSPs sharing ``ref_path``'s boundary sequence (a Path or vertex tuple)."""
    vs = ref_path.vertices if isinstance(ref_path, Path) else tuple(ref_path)
    if len(vs) < 2:
        raise ValueError("reference path needs at least two vertices")
    endpoints = (vs[0], vs[-1]) if endpoints is None else endpoints
    fetch_cap = max(64, 8 * k) if fetch_cap is None else fetch_cap
    gen = _refine(Path(0, vs), 1, {}, k, endpoints, QueryStats(), fetch_cap=fetch_cap)
    return _drive(gen, partition, None, weights)


def _drive(gen, partition, xi, weights, prune=True, workers=None):
    try:
        req = next(gen)
        while True:
            if isinstance(req, NeedAttachment):
                resp = attachment_lbds(partition[req.sid], req.vertex, req.targets, xi, weights=weights)
            else:
                resp = {
                    pair: partial_ksp(partition, pair, kk, req.endpoints, weights, prune, workers)
                    for pair, kk in req.requests
                }
            req = gen.send(resp)
    except StopIteration as stop:
        return stop.value


def ksp_dg(partition: Partition, skeleton: SkeletonGraph, s, t, k, xi, weights=None, exact_ties=False,
           prune=True, workers=None, fetch_cap=None) -> QueryOutcome:
    """Answer one query in-process against the current weights (or an explicit weight snapshot)."""
    gen = ksp_dg_search(partition, skeleton, s, t, k, exact_ties, fetch_cap)
    return _drive(gen, partition, xi, weights, prune, workers)


def boundary_sequence(p, partition: Partition) -> list:
    """Boundary vertices along ``p`` in order, with the endpoints counted as boundary."""
    vs = p.vertices if isinstance(p, Path) else tuple(p)
    out = [v for i, v in enumerate(vs) if i == 0 or i == len(vs) - 1 or partition.is_boundary(v)]
    return out
