"""Deterministic single-process simulation of the distributed deployment.

Roles: one entrance, subgraph workers (own subgraphs and their bounding-path
indexes), query workers (own a skeleton replica and drive queries).

Every non-empty weight batch opens a new epoch. Queries are stamped with the
epoch current when the entrance assigns them and are answered against that
epoch everywhere: subgraph workers keep per-epoch weight history and defer
requests for epochs they have not reached, query workers apply lbd updates
epoch by epoch and give each query a private copy of the replica as it was at
its epoch. Results therefore do not depend on the scheduler seed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
import re
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .bounds import DtlpIndex
from .dg import NeedAttachment, PartialResult, QueryStats, ksp_dg_search, segment_blocked
from .graph import Graph, Path
from .ksp import PYenStats, pyen_ksp
from .partition import Partition, partition_bfs
from .skeleton import attachment_lbds, build_skeleton
from .units import fmt_fixed, to_fixed

ENTRANCE = "entrance"

# kinds
WEIGHT_BATCH = "WeightBatch"
LBD_UPDATE = "LbdUpdate"
EPOCH_ACK = "EpochAck"
QUERY_ASSIGN = "QueryAssign"
REF_PATH = "RefPathBroadcast"
PARTIAL_REQ = "PartialKspRequest"
PARTIAL_RESP = "PartialKspResponse"
ATTACH_REQ = "AttachRequest"
ATTACH_RESP = "AttachResponse"
QUERY_RESULT = "QueryResult"
TRACE_UPDATE = "TraceUpdate"
TRACE_QUERY = "TraceQuery"
REJECTED = "Rejected"


@dataclass
class SimConfig:
    z: int = 50
    xi: int = 10
    k_default: int = 10
    h: int = 20
    b: int = 2
    scheduler_seed: int = 0
    subgraph_workers: int = 4
    query_workers: int = 2
    routing: str = "broadcast"  # or "targeted"
    parallel: bool = False
    exact_ties: bool = False
    fetch_cap: int = 0  # 0: engine default

    def __post_init__(self):
        if self.routing not in ("broadcast", "targeted"):
            raise ValueError(f"routing must be broadcast or targeted, got {self.routing!r}")
        for name in ("z", "xi", "k_default", "h", "b", "subgraph_workers", "query_workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def parse_config(text: str) -> SimConfig:
    """``key=value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    kw = {}
    fields_ = SimConfig.__dataclass_fields__
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value")
        key, val = (x.strip() for x in line.split("=", 1))
        if key not in fields_:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        typ = fields_[key].type
        try:
            if typ == "bool":
                kw[key] = _BOOL[val.lower()]
            elif typ == "int":
                kw[key] = int(val)
            else:
                kw[key] = val
        except (KeyError, ValueError):
            raise ValueError(f"config line {lineno}: bad value {val!r} for {key}") from None
    return SimConfig(**kw)


def load_config(path) -> SimConfig:
    with open(path) as fh:
        return parse_config(fh.read())


@dataclass
class TraceEvent:
    tick: int
    kind: str  # "update" | "query"
    args: tuple


_TRACE_RE = re.compile(r"^t=(\d+)\s+(update|query)\s+(.*)$")


def parse_trace(lines, k_default: int | None = None) -> list[TraceEvent]:
    """Parse ``t=<tick> update <edge> <dw>`` / ``t=<tick> query <s> <t> [<k>]`` lines."""
    out = []
    last = -1
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _TRACE_RE.match(line)
        if not m:
            raise ValueError(f"trace line {lineno}: cannot parse {line!r}")
        tick, kind, rest = int(m.group(1)), m.group(2), m.group(3).split()
        if tick < last:
            raise ValueError(f"trace line {lineno}: tick {tick} goes backwards")
        last = tick
        try:
            if kind == "update":
                if len(rest) != 2:
                    raise ValueError
                args = (int(rest[0]), to_fixed(rest[1]))
            else:
                if len(rest) not in (2, 3) or (len(rest) == 2 and k_default is None):
                    raise ValueError
                k = int(rest[2]) if len(rest) == 3 else k_default
                args = (int(rest[0]), int(rest[1]), k)
        except (ValueError, ArithmeticError):
            raise ValueError(f"trace line {lineno}: bad arguments {rest}") from None
        out.append(TraceEvent(tick, kind, args))
    return out


def format_trace(events) -> str:
    lines = []
    for ev in events:
        if ev.kind == "update":
            lines.append(f"t={ev.tick} update {ev.args[0]} {fmt_fixed(ev.args[1])}")
        else:
            lines.append(f"t={ev.tick} query {ev.args[0]} {ev.args[1]} {ev.args[2]}")
    return "".join(line + "\n" for line in lines)


@dataclass
class Message:
    kind: str
    sender: str
    receiver: str
    body: dict
    tick: int = 0  # release time for trace events; not part of the digest

    def digest(self) -> str:
        blob = json.dumps(self.body, sort_keys=True, separators=(",", ":"), default=_jsonable)
        return hashlib.sha1(f"{self.kind}|{blob}".encode()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, Path):
        return [obj.distance, list(obj.vertices)]
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(type(obj))


def _paths(body_paths):
    return [Path(d, tuple(vs)) for d, vs in body_paths]


def _enc_paths(paths):
    return [[p.distance, list(p.vertices)] for p in paths]


def route_weight_batch(partition: Partition, batch):
    """Split ``(edge, dw)`` items by owning subgraph; returns ``(sub-batches, rejected items)``."""
    subs: dict[int, list] = {}
    rejected = []
    for eid, dw in batch:
        if not 0 <= eid < len(partition.edge_owner):
            rejected.append((eid, dw))
            continue
        subs.setdefault(partition.edge_owner[eid], []).append((eid, dw))
    return subs, rejected


# ---------------------------------------------------------------- workers


class Worker:
    def __init__(self, name):
        self.name = name
        self.inbox: deque[Message] = deque()

    def handle(self, msg: Message) -> list[Message]:  # pragma: no cover - overridden
        raise NotImplementedError


class Entrance(Worker):
    """Turns trace events into weight batches and query assignments; collects results."""

    def __init__(self, sim: Simulation):
        super().__init__(ENTRANCE)
        self.sim = sim
        self.weights = list(sim.graph.weight)
        self.epoch = 0
        self.next_query = 0
        self.results: dict[int, dict] = {}
        self.rejected: list = []

    def handle(self, msg):
        sim = self.sim
        if msg.kind == TRACE_UPDATE:
            batch = []
            for eid, dw in msg.body["items"]:
                if 0 <= eid < len(self.weights) and self.weights[eid] + dw > 0:
                    batch.append((eid, dw))
                    self.weights[eid] += dw
                else:
                    self.rejected.append((eid, dw))
            subs, bad = route_weight_batch(sim.partition, batch)
            out = [Message(REJECTED, self.name, self.name, {"items": bad})] if bad else []
            if not batch:
                return out
            self.epoch += 1
            by_worker: dict[str, list] = {w: [] for w in sim.sg_worker_names}
            for sid, items in sorted(subs.items()):
                by_worker[sim.sg_home[sid]].extend(items)
            for w in sim.sg_worker_names:
                out.append(Message(WEIGHT_BATCH, self.name, w, {"seq": self.epoch, "items": by_worker[w]}))
            return out
        if msg.kind == TRACE_QUERY:
            qid = self.next_query
            self.next_query += 1
            s, t, k = msg.body["query"]
            target = sim.q_worker_names[qid % len(sim.q_worker_names)]
            return [Message(QUERY_ASSIGN, self.name, target, {"query_id": qid, "s": s, "t": t, "k": k, "epoch": self.epoch})]
        if msg.kind == QUERY_RESULT:
            self.results[msg.body["query_id"]] = msg.body
            return []
        if msg.kind == REJECTED:
            return []
        raise ValueError(f"entrance cannot handle {msg.kind}")


class SubgraphWorker(Worker):
    def __init__(self, name, sim: Simulation, sids):
        super().__init__(name)
        self.sim = sim
        self.sids = sorted(sids)
        self.indexes = {sid: sim.index.indexes[sid] for sid in self.sids}
        self.epoch = 0
        self.history = {0: list(sim.graph.weight)}
        self.deferred: list[Message] = []

    def owns_pair(self, pair):
        return [sid for sid in self.sim.partition.shared_subgraphs(*pair) if sid in self.indexes]

    def handle(self, msg):
        if msg.kind == WEIGHT_BATCH:
            out = self._weights(msg)
            ready, self.deferred = self.deferred, []
            for m in ready:
                out += self.handle(m)
            return out
        if msg.body.get("epoch", 0) > self.epoch:
            self.deferred.append(msg)
            return []
        if msg.kind in (PARTIAL_REQ, REF_PATH):
            return self._partials(msg)
        if msg.kind == ATTACH_REQ:
            return self._attach(msg)
        raise ValueError(f"{self.name} cannot handle {msg.kind}")

    def _weights(self, msg):
        seq = msg.body["seq"]
        if seq != self.epoch + 1:
            raise ValueError(f"{self.name}: batch seq {seq} after epoch {self.epoch}")
        by_sid: dict[int, list] = {}
        for eid, dw in msg.body["items"]:
            by_sid.setdefault(self.sim.partition.edge_owner[eid], []).append((eid, dw))
        updates = []
        for sid in sorted(by_sid):
            ix = self.indexes[sid]
            for pair in sorted(ix.refresh(by_sid[sid])):
                lbd = ix.sets[pair].lbd
                self.sim.index.table.set(pair, sid, lbd)
                updates.append((pair, sid, lbd))
        self.epoch = seq
        self.history[seq] = list(self.sim.graph.weight)
        out = []
        for q in self.sim.q_worker_names:
            for pair, sid, lbd in updates:
                out.append(Message(LBD_UPDATE, self.name, q, {"seq": seq, "pair": list(pair), "sg": sid, "lbd": lbd}))
            out.append(Message(EPOCH_ACK, self.name, q, {"seq": seq}))
        return out

    def _partials(self, msg):
        body = msg.body
        weights = self.history[body["epoch"]]
        endpoints = tuple(body["endpoints"])
        out = []
        for pair, k in body["requests"]:
            pair = tuple(pair)
            found = []
            st = PYenStats()
            sids = self.owns_pair(pair)
            for sid in sids:
                blocked = segment_blocked(self.sim.partition, sid, pair, endpoints)
                found += pyen_ksp(
                    self.sim.partition[sid], pair[0], pair[1], k, weights=weights, exclude=blocked, stats=st,
                    workers=self.sim.pyen_workers,
                )
            found.sort()
            out.append(
                Message(
                    PARTIAL_RESP,
                    self.name,
                    msg.sender,
                    {
                        "query_id": body["query_id"],
                        "rank": body["rank"],
                        "pair": list(pair),
                        "k": k,
                        "paths": _enc_paths(found[:k]),
                        "full": len(found) >= k,
                        "invocations": len(sids),
                        "reuse_hits": st.reuse_hits,
                        "pruned_tasks": st.pruned_tasks,
                    },
                )
            )
        return out

    def _attach(self, msg):
        body = msg.body
        sg = self.sim.partition[body["sid"]]
        lbds = attachment_lbds(sg, body["vertex"], body["targets"], self.sim.config.xi, weights=self.history[body["epoch"]])
        return [
            Message(
                ATTACH_RESP,
                self.name,
                msg.sender,
                {"query_id": body["query_id"], "vertex": body["vertex"], "lbds": sorted(lbds.items())},
            )
        ]


@dataclass
class _ActiveQuery:
    qid: int
    s: int
    t: int
    k: int
    epoch: int
    gen: object = None
    pending: dict = field(default_factory=dict)  # (pair, k) -> {"waiting": set, "paths": [], "full": bool, ...}
    last_requests: list = field(default_factory=list)


class QueryWorker(Worker):
    def __init__(self, name, sim: Simulation):
        super().__init__(name)
        self.sim = sim
        self.replica = sim.initial_skeleton.copy()
        self.epoch = 0
        self.snapshots = {0: self.replica.copy()}
        self.buffered: dict[int, list] = {}
        self.acks: dict[int, set] = {}
        self.parked: list[_ActiveQuery] = []
        self.active: dict[int, _ActiveQuery] = {}

    def handle(self, msg):
        kind, body = msg.kind, msg.body
        if kind == LBD_UPDATE:
            self.buffered.setdefault(body["seq"], []).append((tuple(body["pair"]), body["sg"], body["lbd"]))
            return []
        if kind == EPOCH_ACK:
            self.acks.setdefault(body["seq"], set()).add(msg.sender)
            return self._advance()
        if kind == QUERY_ASSIGN:
            q = _ActiveQuery(body["query_id"], body["s"], body["t"], body["k"], body["epoch"])
            if q.epoch > self.epoch:
                self.parked.append(q)
                return []
            return self._start(q)
        if kind == ATTACH_RESP:
            q = self.active[body["query_id"]]
            lbds = {b: lbd for b, lbd in body["lbds"]}
            return self._step(q, lbds)
        if kind == PARTIAL_RESP:
            return self._partial(msg)
        raise ValueError(f"{self.name} cannot handle {kind}")

    def _advance(self):
        out = []
        n = len(self.sim.sg_worker_names)
        while len(self.acks.get(self.epoch + 1, ())) == n:
            self.epoch += 1
            for pair, sg, lbd in self.buffered.pop(self.epoch, []):
                self.replica.apply_lbd_update(pair, sg, lbd)
            del self.acks[self.epoch]
            self.snapshots[self.epoch] = self.replica.copy()
        ready = [q for q in self.parked if q.epoch <= self.epoch]
        self.parked = [q for q in self.parked if q.epoch > self.epoch]
        for q in ready:
            out += self._start(q)
        return out

    def _start(self, q: _ActiveQuery):
        skeleton = self.snapshots[q.epoch].copy()
        fetch_cap = self.sim.config.fetch_cap or None
        q.gen = ksp_dg_search(self.sim.partition, skeleton, q.s, q.t, q.k, self.sim.config.exact_ties, fetch_cap)
        self.active[q.qid] = q
        return self._step(q, None, first=True)

    def _step(self, q, resp, first=False):
        try:
            req = next(q.gen) if first else q.gen.send(resp)
        except StopIteration as stop:
            del self.active[q.qid]
            outcome = stop.value
            return [
                Message(
                    QUERY_RESULT,
                    self.name,
                    ENTRANCE,
                    {
                        "query_id": q.qid,
                        "s": q.s,
                        "t": q.t,
                        "k": q.k,
                        "epoch": q.epoch,
                        "paths": _enc_paths(outcome.paths),
                        "unreachable": outcome.unreachable,
                        "exhausted": outcome.exhausted,
                        "stats": outcome.stats.row(),
                    },
                )
            ]
        if isinstance(req, NeedAttachment):
            home = self.sim.sg_home[req.sid]
            body = {"query_id": q.qid, "vertex": req.vertex, "sid": req.sid, "targets": list(req.targets), "epoch": q.epoch}
            return [Message(ATTACH_REQ, self.name, home, body)]
        return self._request_partials(q, req)

    def _request_partials(self, q, req):
        sim = self.sim
        kind = REF_PATH if all(kk == q.k for _, kk in req.requests) else PARTIAL_REQ
        dests: dict[str, list] = {}
        for pair, kk in req.requests:
            if sim.config.routing == "targeted":
                workers = sorted({sim.sg_home[sid] for sid in sim.partition.shared_subgraphs(*pair)})
            else:
                workers = list(sim.sg_worker_names)
            q.pending[(pair, kk)] = {"waiting": set(workers), "paths": [], "full": False, "inv": 0, "reuse": 0, "pruned": 0}
            for w in workers:
                dests.setdefault(w, []).append([list(pair), kk])
        out = []
        for w in sim.sg_worker_names:
            if w not in dests:
                continue
            body = {
                "query_id": q.qid,
                "rank": req.rank,
                "epoch": q.epoch,
                "endpoints": list(req.endpoints),
                "requests": dests[w],
            }
            if kind == REF_PATH:
                body["ref_path"] = list(req.ref_path)
            out.append(Message(kind, self.name, w, body))
        q.last_requests = list(req.requests)
        return out

    def _partial(self, msg):
        body = msg.body
        q = self.active[body["query_id"]]
        key = (tuple(body["pair"]), body["k"])
        slot = q.pending[key]
        slot["waiting"].discard(msg.sender)
        slot["paths"] += _paths(body["paths"])
        slot["full"] = slot["full"] or body["full"]
        slot["inv"] += body["invocations"]
        slot["reuse"] += body["reuse_hits"]
        slot["pruned"] += body["pruned_tasks"]
        if any(q.pending[(p, kk)]["waiting"] for p, kk in q.last_requests):
            return []
        resp = {}
        for pair, kk in q.last_requests:
            slot = q.pending.pop((pair, kk))
            paths = sorted(slot["paths"])
            resp[pair] = PartialResult(
                paths[:kk], not slot["full"] and len(paths) < kk, slot["inv"], slot["reuse"], slot["pruned"]
            )
        return self._step(q, resp)


# ---------------------------------------------------------------- simulation


@dataclass
class LogRow:
    tick: int
    sender: str
    receiver: str
    kind: str
    digest: str


@dataclass
class SimResult:
    log: list[LogRow]
    results: dict[int, dict]
    replicas: list
    final_weights: list
    rejected: list

    def write_log(self, out):
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["tick", "sender", "receiver", "kind", "digest"])
        for r in self.log:
            w.writerow([r.tick, r.sender, r.receiver, r.kind, r.digest])

    def write_results(self, out):
        """``query_id,rank,distance,v0 v1 ... vn`` records, one per path."""
        for qid in sorted(self.results):
            for rank, (d, vs) in enumerate(self.results[qid]["paths"], 1):
                out.write(f"{qid},{rank},{fmt_fixed(d)},{' '.join(map(str, vs))}\n")

    def write_stats(self, out):
        w = csv.writer(out, lineterminator="\n")
        cols = list(QueryStats().row())
        w.writerow(["query_id", "s", "t", "k", "epoch", "found", "unreachable", *cols])
        for qid in sorted(self.results):
            r = self.results[qid]
            w.writerow([qid, r["s"], r["t"], r["k"], r["epoch"], len(r["paths"]), int(r["unreachable"]),
                        *(r["stats"][c] for c in cols)])


class Simulation:
    """Builds all roles for ``graph`` (which is copied, never mutated) and replays traces."""

    def __init__(self, graph: Graph, config: SimConfig, partition: Partition | None = None, index: DtlpIndex | None = None):
        self.config = config
        if partition is None:
            self.graph = graph.copy()
            self.partition = partition_bfs(self.graph, config.z)
        else:
            self.graph = partition.graph
            self.partition = partition
        self.index = index or DtlpIndex(self.partition, config.xi, config.h, config.b)
        self.initial_skeleton = build_skeleton(self.index.table, self.partition.boundary_vertices)
        self.pyen_workers = None
        n_sg = min(config.subgraph_workers, max(1, len(self.partition)))
        self.sg_worker_names = [f"sg{i}" for i in range(n_sg)]
        self.q_worker_names = [f"q{i}" for i in range(config.query_workers)]
        self.sg_home = {sg.id: self.sg_worker_names[sg.id % n_sg] for sg in self.partition}
        self.entrance = Entrance(self)
        self.workers: dict[str, Worker] = {ENTRANCE: self.entrance}
        for i, name in enumerate(self.sg_worker_names):
            self.workers[name] = SubgraphWorker(name, self, [sid for sid, h in self.sg_home.items() if h == name])
        for name in self.q_worker_names:
            self.workers[name] = QueryWorker(name, self)

    def run(self, events) -> SimResult:
        rng = random.Random(self.config.scheduler_seed)
        log: list[LogRow] = []
        pending = deque(_group_events(events))
        tick = 0
        order = list(self.workers)

        def deliver(msgs):
            for m in msgs:
                self.workers[m.receiver].inbox.append(m)

        pool = ThreadPoolExecutor(len(order)) if self.config.parallel else None
        try:
            while True:
                while pending and pending[0].tick <= tick:
                    self.entrance.inbox.append(pending.popleft())
                busy = [name for name in order if self.workers[name].inbox]
                if not busy:
                    if not pending:
                        break
                    tick = max(tick, pending[0].tick)
                    continue
                rng.shuffle(busy)
                batch = [(name, self.workers[name].inbox.popleft()) for name in busy]
                if pool is not None:
                    outs = list(pool.map(lambda nm: self.workers[nm[0]].handle(nm[1]), batch))
                else:
                    outs = [self.workers[name].handle(msg) for name, msg in batch]
                for (_name, msg), out in zip(batch, outs):
                    tick += 1
                    log.append(LogRow(tick, msg.sender, msg.receiver, msg.kind, msg.digest()))
                    deliver(out)
        finally:
            if pool is not None:
                pool.shutdown()
        stuck = [n for n, w in self.workers.items() if isinstance(w, QueryWorker) and (w.active or w.parked)]
        if stuck:
            raise RuntimeError(f"simulation drained with unresolved queries on {stuck}")
        return SimResult(
            log,
            dict(sorted(self.entrance.results.items())),
            [self.workers[n].replica for n in self.q_worker_names],
            list(self.graph.weight),
            list(self.entrance.rejected),
        )


def _group_events(events):
    """Trace events -> entrance messages; all updates sharing a tick form one batch."""
    out = []
    i = 0
    events = list(events)
    while i < len(events):
        ev = events[i]
        if ev.kind == "update":
            items = []
            while i < len(events) and events[i].kind == "update" and events[i].tick == ev.tick:
                items.append(list(events[i].args))
                i += 1
            m = Message(TRACE_UPDATE, "trace", ENTRANCE, {"items": items})
        else:
            m = Message(TRACE_QUERY, "trace", ENTRANCE, {"query": list(ev.args)})
            i += 1
        m.tick = ev.tick
        out.append(m)
    return out


def run_simulation(graph: Graph, config: SimConfig, events, partition=None, index=None) -> SimResult:
    """Deterministic given ``(graph, config, events)``; ``graph`` is left untouched."""
    return Simulation(graph, config, partition, index).run(events)
