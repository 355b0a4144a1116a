"""Loopless k-shortest-path search.

``yen_ksp`` is the straightforward Yen algorithm (a full residual Dijkstra
per spur) and serves as the reference everything else is checked against.
``ProgressiveYen`` produces the same sequence of paths but seeds a reverse
shortest-path tree once and reuses its suffixes for spur searches, and can
abandon deviation tasks that cannot reach the top ``k``.

Ties between equal-distance paths are broken by the lexicographic order of
the vertex sequence, so both produce identical lists.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import islice

from .graph import Path

INF = float("inf")


def as_adjacency(obj, weights=None, exclude=()) -> dict:
    """Accept a Graph, a Subgraph or an ``{v: [(nbr, w)]}`` mapping."""
    if isinstance(obj, dict):
        if not exclude:
            return obj
        return {v: [(w, x) for w, x in nb if w not in exclude] for v, nb in obj.items() if v not in exclude}
    if hasattr(obj, "edge_ids"):
        return obj.adjacency(weights=weights, exclude=exclude)
    return obj.weighted_adjacency(weights=weights, exclude=exclude)


def _edge_weights(adj) -> dict:
    return {(u, w): x for u, nb in adj.items() for w, x in nb}


def reverse_distances(adj, t, banned_v=frozenset(), banned_e=frozenset()) -> dict:
    """Dijkstra from ``t``; edges/vertices in the banned sets are skipped."""
    dist = {t: 0}
    heap = [(0, t)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for w, x in adj[u]:
            if w in banned_v or (u, w) in banned_e:
                continue
            nd = d + x
            if nd < dist.get(w, INF):
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist


def _lex_walk(adj, src, t, dist, banned_v, banned_e) -> list:
    # follows the smallest-id tight neighbour; dist must be exact residual distances to t
    path = [src]
    u = src
    while u != t:
        du = dist[u]
        for w, x in adj[u]:
            if w in banned_v or (u, w) in banned_e:
                continue
            if x + dist.get(w, INF) == du:
                break
        else:  # pragma: no cover - dist inconsistent with adj
            raise RuntimeError("no tight edge found")
        path.append(w)
        u = w
    return path


def shortest_path(adj, s, t) -> Path | None:
    adj = as_adjacency(adj)
    if s == t:
        return Path(0, (s,))
    dist = reverse_distances(adj, t)
    if s not in dist:
        return None
    return Path(dist[s], tuple(_lex_walk(adj, s, t, dist, (), ())))


def _check_query(adj, s, t, k):
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    for v in (s, t):
        if v not in adj:
            raise ValueError(f"vertex {v} not in graph")


def _banned_edges(accepted_seqs, root) -> set:
    l = len(root)
    a = root[-1]
    out = set()
    for q in accepted_seqs:
        if len(q) > l and q[:l] == root:
            out.add((a, q[l]))
            out.add((q[l], a))
    return out


def yen_ksp(g, s, t, k) -> list[Path]:
    """The ``k`` loopless shortest ``s``-``t`` paths, ascending by (distance, vertex sequence)."""
    adj = as_adjacency(g)
    _check_query(adj, s, t, k)
    first = shortest_path(adj, s, t)
    if first is None:
        return []
    accepted = [first]
    if s == t:
        return accepted
    wmap = _edge_weights(adj)
    seen = {first.vertices}
    cands: list = []
    while len(accepted) < k:
        p = accepted[-1].vertices
        root_dist = 0
        seqs = [q.vertices for q in accepted]
        for l in range(len(p) - 1):
            root = p[: l + 1]
            if l:
                root_dist += wmap[(p[l - 1], p[l])]
            banned_v = set(p[:l])
            banned_e = _banned_edges(seqs, root)
            dist = reverse_distances(adj, t, banned_v, banned_e)
            if p[l] not in dist:
                continue
            spur = _lex_walk(adj, p[l], t, dist, banned_v, banned_e)
            seq = root[:-1] + tuple(spur)
            if seq in seen:
                continue
            seen.add(seq)
            heapq.heappush(cands, (root_dist + dist[p[l]], seq))
        if not cands:
            break
        d, seq = heapq.heappop(cands)
        accepted.append(Path(d, seq))
    return accepted


class ReuseIndex:
    """Shortest distance (``dist``, A_D) and next hop (``next``, A_P) to the target.

    Seeded by one reverse shortest-path tree over the unmodified graph; the
    next hop is the smallest-id neighbour on a shortest path, so following it
    yields the lexicographically smallest shortest path to the target.
    """

    def __init__(self, adj, t):
        self.t = t
        self.dist = reverse_distances(adj, t)
        self.next: dict = {}
        for v, dv in self.dist.items():
            if v == t:
                continue
            for w, x in adj[v]:
                if x + self.dist.get(w, INF) == dv:
                    self.next[v] = w
                    break

    def suffix(self, v) -> list:
        out = [v]
        while v != self.t:
            v = self.next[v]
            out.append(v)
        return out


@dataclass
class DeviationTask:
    root: tuple
    root_dist: int
    banned_v: frozenset
    banned_e: frozenset
    bound: float = INF

    @property
    def vertex(self):
        return self.root[-1]


@dataclass
class PYenStats:
    spur_searches: int = 0
    reuse_hits: int = 0
    pruned_tasks: int = 0
    astar_pops: int = 0

    def merge(self, other: PYenStats):
        self.spur_searches += other.spur_searches
        self.reuse_hits += other.reuse_hits
        self.pruned_tasks += other.pruned_tasks
        self.astar_pops += other.astar_pops


class _SpurSolver:
    # per-task state: which vertices keep a valid stored suffix, residual distances
    def __init__(self, adj, index: ReuseIndex, task: DeviationTask, stats: PYenStats):
        self.adj = adj
        self.ix = index
        self.task = task
        self.stats = stats
        self._clean: dict = {}
        self._dres: dict = {}
        self._above: dict = {}

    def clean(self, v) -> bool:
        memo = self._clean
        bv, be, t, nxt = self.task.banned_v, self.task.banned_e, self.ix.t, self.ix.next
        chain = []
        u = v
        while True:
            if u in memo:
                res = memo[u]
                break
            if u in bv:
                res = False
                break
            chain.append(u)
            if u == t:
                res = True
                break
            w = nxt[u]
            if (u, w) in be:
                res = False
                break
            u = w
        for x in chain:
            memo[x] = res
        return res

    def residual(self, src, cap=INF):
        """Exact residual distance ``src -> t`` by A* guided by the unmodified distances.

        Returns INF as soon as the distance is known to exceed ``cap``.
        """
        if src in self._dres:
            d = self._dres[src]
            return d if d <= cap else INF
        if self._above.get(src, -1) >= cap:
            return INF
        h = self.ix.dist
        bv, be, adj, clean = self.task.banned_v, self.task.banned_e, self.adj, self.clean
        push, pop = heapq.heappush, heapq.heappop
        g = {src: 0}
        heap = [(h[src], 0, src)]
        closed = set()
        pops = 0
        result = INF
        while heap:
            f, gu, u = pop(heap)
            if f > cap:
                self.stats.astar_pops += pops
                self._above[src] = max(self._above.get(src, -1), cap)
                return INF
            if u in closed:
                continue
            closed.add(u)
            pops += 1
            if clean(u):
                result = gu + h[u]
                break
            for w, x in adj[u]:
                if w in closed or w in bv or (u, w) in be or w not in h:
                    continue
                ng = gu + x
                if ng < g.get(w, INF):
                    g[w] = ng
                    push(heap, (ng + h[w], ng, w))
        self.stats.astar_pops += pops
        self._dres[src] = result
        return result

    def solve(self):
        """Return ``(distance, sequence)`` of the best deviation path, or None."""
        task, h = self.task, self.ix.dist
        src = task.vertex
        if src not in h:
            return None
        self.stats.spur_searches += 1
        if task.root_dist + h[src] > task.bound:
            self.stats.pruned_tasks += 1
            return None
        d0 = self.residual(src, task.bound - task.root_dist)
        if d0 == INF:
            if task.bound != INF:
                self.stats.pruned_tasks += 1
            return None
        bv, be, t = task.banned_v, task.banned_e, self.ix.t
        path = [src]
        u, du = src, d0
        while u != t:
            if self.clean(u):
                path.extend(self.ix.suffix(u)[1:])
                self.stats.reuse_hits += 1
                break
            for w, x in self.adj[u]:
                if w in bv or (u, w) in be or w not in h:
                    continue
                if x + h[w] > du:
                    continue
                if x + self.residual(w, du - x) == du:
                    break
            else:  # pragma: no cover
                raise RuntimeError("residual distances inconsistent")
            path.append(w)
            u, du = w, du - x
        return task.root_dist + d0, task.root[:-1] + tuple(path)


class ProgressiveYen:
    """Iterator over loopless ``s``-``t`` paths in (distance, sequence) order.

    With ``k`` given, deviation tasks that cannot place a path among the
    remaining ``k - i`` results are abandoned (``prune``). ``workers > 1``
    runs the deviation tasks of one path on a thread pool; the outcome is
    identical to sequential mode because every task of a batch sees the same
    pruning bound.

    ``limit`` may be lowered by the caller at any time; paths longer than it
    are never produced, and the iterator ends once only such paths remain.
    It must never be raised again.
    """

    def __init__(self, adj, s, t, k=None, prune=True, workers=None):
        self.adj = as_adjacency(adj)
        if k is not None:
            _check_query(self.adj, s, t, k)
        else:
            _check_query(self.adj, s, t, 1)
        self.s, self.t, self.k = s, t, k
        self.prune = prune and k is not None
        self.workers = workers
        self.index = ReuseIndex(self.adj, t)
        self.stats = PYenStats()
        self.accepted: list[Path] = []
        self.exhausted = False
        self._wmap = None
        self._cands: list = []
        self._spur: dict = {}  # candidate sequence -> index of its spur vertex
        self._seen: set = set()
        self._branches: dict[tuple, set] = {}  # accepted root prefix -> next vertices
        self._expanded = 0
        self.limit = INF

    def __iter__(self):
        return self

    def __next__(self) -> Path:
        if self.exhausted or (self.k is not None and len(self.accepted) >= self.k):
            raise StopIteration
        if not self.accepted:
            if self.s == self.t:
                p = Path(0, (self.s,))
            elif self.s in self.index.dist:
                p = Path(self.index.dist[self.s], tuple(self.index.suffix(self.s)))
            else:
                self.exhausted = True
                raise StopIteration
            self._accept(p)
            return p
        if self.s != self.t:
            while self._expanded < len(self.accepted):
                self._expand(self.accepted[self._expanded])
                self._expanded += 1
        if not self._cands:
            self.exhausted = True
            raise StopIteration
        if self._cands[0][0] > self.limit:
            self.exhausted = True
            raise StopIteration
        d, seq = heapq.heappop(self._cands)
        p = Path(d, seq)
        self._accept(p)
        return p

    def take(self, n) -> list[Path]:
        """Extend to at least ``n`` accepted paths (fewer if exhausted) and return them."""
        while len(self.accepted) < n:
            if next(self, None) is None:
                break
        return self.accepted[:n]

    def _accept(self, p):
        self.accepted.append(p)
        self._seen.add(p.vertices)
        vs = p.vertices
        for l in range(len(vs) - 1):
            self._branches.setdefault(vs[: l + 1], set()).add(vs[l + 1])

    def _bound(self):
        if not self.prune:
            return self.limit
        remaining = self.k - len(self.accepted)
        if remaining <= 0:
            return -1
        if len(self._cands) < remaining:
            return self.limit
        return min(self.limit, heapq.nsmallest(remaining, self._cands)[-1][0])

    def tasks_for(self, p: Path, start=0) -> list[DeviationTask]:
        if self._wmap is None:
            self._wmap = _edge_weights(self.adj)
        bound = self._bound()
        vs = p.vertices
        out = []
        root_dist = 0
        for l in range(len(vs) - 1):
            if l:
                root_dist += self._wmap[(vs[l - 1], vs[l])]
            if l < start:
                continue
            root = vs[: l + 1]
            out.append(
                DeviationTask(
                    root=root,
                    root_dist=root_dist,
                    banned_v=frozenset(vs[:l]),
                    banned_e=frozenset(
                        e for nxt in self._branches.get(root, ()) for e in ((vs[l], nxt), (nxt, vs[l]))
                    ),
                    bound=bound,
                )
            )
        return out

    def _run(self, task):
        st = PYenStats()
        res = _SpurSolver(self.adj, self.index, task, st).solve()
        return res, st

    def _expand(self, p):
        # a path shares its parent's prefix up to its spur index, so earlier spurs add nothing new
        tasks = self.tasks_for(p, self._spur.get(p.vertices, 0))
        if self.workers and self.workers > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(self.workers) as ex:
                results = list(ex.map(self._run, tasks))
        else:
            results = [self._run(task) for task in tasks]
        for task, (res, st) in zip(tasks, results):
            self.stats.merge(st)
            if res is None or res[1] in self._seen:
                continue
            self._seen.add(res[1])
            self._spur[res[1]] = len(task.root) - 1
            heapq.heappush(self._cands, res)


def pyen_ksp(sg, s, t, k, prune=True, workers=None, weights=None, exclude=(), stats: PYenStats | None = None):
    """Same contract as :func:`yen_ksp`, computed with :class:`ProgressiveYen`."""
    adj = as_adjacency(sg, weights=weights, exclude=exclude)
    it = ProgressiveYen(adj, s, t, k=k, prune=prune, workers=workers)
    out = list(islice(it, k))
    if stats is not None:
        stats.merge(it.stats)
    return out
