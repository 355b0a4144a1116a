"""Weight streams, query sets, benchmark runs and the validation suite."""

from __future__ import annotations

import csv
import random
import time
from dataclasses import dataclass, field

from .bounds import DtlpIndex
from .cluster import SimConfig, TraceEvent, format_trace, run_simulation
from .dg import ksp_dg
from .graph import Graph
from .ksp import pyen_ksp, reverse_distances, yen_ksp
from .partition import partition_bfs
from .skeleton import build_skeleton
from .units import fmt_fixed

MODES = ("ksp-dg", "yen", "pyen-only")


@dataclass
class DynamicsConfig:
    alpha: float = 0.5
    tau: float = 0.5
    snapshots: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0 <= self.tau < 1:
            raise ValueError("tau must lie in [0, 1)")
        if self.snapshots < 0:
            raise ValueError("snapshots must be >= 0")


def generate_weight_stream(g: Graph, cfg: DynamicsConfig) -> list[list[tuple[int, int]]]:
    """One batch of ``(edge, dw)`` milli-unit changes per snapshot.

    Each snapshot picks ``floor(alpha * |E|)`` distinct edges and multiplies
    their current weight by a factor drawn uniformly from ``[1 - tau, 1 + tau]``,
    rounding to the milli grid and never going below one milli-unit.
    """
    rng = random.Random(cfg.seed)
    weights = list(g.weight)
    count = int(cfg.alpha * g.m)
    batches = []
    for _ in range(cfg.snapshots):
        batch = []
        for eid in sorted(rng.sample(range(g.m), count)):
            factor = rng.uniform(1 - cfg.tau, 1 + cfg.tau)
            new = max(1, round(weights[eid] * factor))
            batch.append((eid, new - weights[eid]))
            weights[eid] = new
        batches.append(batch)
    return batches


def generate_queries(g: Graph, n: int, seed: int, k=10) -> list[tuple[int, int, int]]:
    """``n`` uniform random ``(s, t, k)`` with ``s != t`` in the same component; ``k`` may be a sequence to draw from."""
    rng = random.Random(seed)
    comp = g.components()
    sizes: dict[int, int] = {}
    for c in comp:
        sizes[c] = sizes.get(c, 0) + 1
    if n and max(sizes.values(), default=0) < 2:
        raise ValueError("graph has no connected vertex pair")
    ks = list(k) if isinstance(k, (list, tuple)) else [k]
    out = []
    while len(out) < n:
        s, t = rng.randrange(g.n), rng.randrange(g.n)
        if s != t and comp[s] == comp[t]:
            out.append((s, t, rng.choice(ks)))
    return out


def interleave(batches, queries, spacing: int = 10) -> list[TraceEvent]:
    """Spread queries evenly between batches; query j runs after ``floor(j * B / Q)`` batches."""
    events = []
    tick = 0
    nb, nq = len(batches), len(queries)
    qi = 0
    for bi in range(nb + 1):
        while qi < nq and (qi * nb) // nq == bi:
            tick += 1
            events.append(TraceEvent(tick, "query", tuple(queries[qi])))
            qi += 1
        if bi < nb:
            tick += spacing
            events.extend(TraceEvent(tick, "update", (eid, dw)) for eid, dw in batches[bi])
    return events


def write_queries_csv(queries, out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["query_id", "s", "t", "k"])
    for i, (s, t, k) in enumerate(queries):
        w.writerow([i, s, t, k])


def read_queries_csv(lines, name="<queries>") -> list[tuple[int, int, int]]:
    out = []
    rows = csv.reader(lines)
    for lineno, row in enumerate(rows, 1):
        if not row or (lineno == 1 and row[0] == "query_id"):
            continue
        try:
            _, s, t, k = (int(x) for x in row)
        except ValueError:
            raise ValueError(f"{name}:{lineno}: expected query_id,s,t,k") from None
        out.append((s, t, k))
    return out


# ---------------------------------------------------------------- benchmark


@dataclass
class BenchResult:
    mode: str
    results: dict  # query id -> {"s","t","k","epoch","paths","stats"}
    log: list = field(default_factory=list)
    seconds: dict = field(default_factory=dict)  # query id -> wall time (not written to result files)

    def write_results(self, out):
        for qid in sorted(self.results):
            for rank, (d, vs) in enumerate(self.results[qid]["paths"], 1):
                out.write(f"{qid},{rank},{fmt_fixed(d)},{' '.join(map(str, vs))}\n")

    def write_stats(self, out):
        cols = ["iterations", "reuse_hits", "pruned_tasks", "subgraph_invocations", "partial_requests",
                "lemma_violations", "capped_joins"]
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["query_id", "s", "t", "k", "epoch", "found", *cols])
        for qid in sorted(self.results):
            r = self.results[qid]
            st = r.get("stats") or {}
            w.writerow([qid, r["s"], r["t"], r["k"], r["epoch"], len(r["paths"]), *(st.get(c, 0) for c in cols)])

    def write_log(self, out):
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["tick", "sender", "receiver", "kind", "digest"])
        for r in self.log:
            w.writerow([r.tick, r.sender, r.receiver, r.kind, r.digest])

    def distances(self) -> dict:
        return {qid: [d for d, _ in r["paths"]] for qid, r in self.results.items()}


def replay(g: Graph, events):
    """Yield ``(query id, epoch, s, t, k, weights)`` with weights as of each query, in trace order."""
    weights = list(g.weight)
    epoch = 0
    qid = 0
    prev_tick = None
    applied_any = False
    for ev in events:
        if ev.kind == "update":
            if prev_tick != ("u", ev.tick):
                applied_any = False
                prev_tick = ("u", ev.tick)
            eid, dw = ev.args
            if 0 <= eid < g.m and weights[eid] + dw > 0:
                if not applied_any:
                    epoch += 1
                    applied_any = True
                weights[eid] += dw
        else:
            prev_tick = None
            s, t, k = ev.args
            yield qid, epoch, s, t, k, list(weights)
            qid += 1


def run_bench(g: Graph, cfg: SimConfig, events, mode: str = "ksp-dg") -> BenchResult:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "ksp-dg":
        sim = run_simulation(g, cfg, events)
        return BenchResult(mode, sim.results, sim.log)
    results = {}
    seconds = {}
    for qid, epoch, s, t, k, weights in replay(g, events):
        h = g.copy()
        h.weight[:] = weights
        t0 = time.perf_counter()
        paths = yen_ksp(h, s, t, k) if mode == "yen" else pyen_ksp(h, s, t, k)
        seconds[qid] = time.perf_counter() - t0
        results[qid] = {"s": s, "t": t, "k": k, "epoch": epoch, "paths": [[p.distance, list(p.vertices)] for p in paths],
                        "stats": {}}
    return BenchResult(mode, results, [], seconds)


def iteration_sweep(g: Graph, z: int, xis, queries, h: int = 20, b: int = 2, batches=()) -> list[dict]:
    """Mean KSP-DG iteration count per xi over a fixed query set.

    ``batches`` are applied through index maintenance before querying. With
    no updates every unit weight is 1, all bounds are exact and xi cannot
    matter.
    """
    rows = []
    for xi in xis:
        part = partition_bfs(g.copy(), z)
        index = DtlpIndex(part, xi, h, b)
        for batch in batches:
            index.apply_batch(batch)
        skel = build_skeleton(index.table, part.boundary_vertices)
        its = []
        t0 = time.perf_counter()
        for s, t, k in queries:
            its.append(ksp_dg(part, skel, s, t, k, xi).stats.iterations)
        rows.append({"xi": xi, "queries": len(its), "mean_iterations": sum(its) / max(1, len(its)),
                     "max_iterations": max(its, default=0), "seconds": time.perf_counter() - t0})
    return rows


# ---------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    passed: bool
    checks: dict  # name -> number of violations
    failures: list  # (check name, detail)
    repro: str = ""

    def render(self) -> str:
        lines = [f"{name},{'pass' if n == 0 else 'FAIL'},{n}" for name, n in self.checks.items()]
        lines += [f"# {name}: {detail}" for name, detail in self.failures]
        if self.repro:
            lines.append("# minimized reproduction trace:")
            lines += ["# " + line for line in self.repro.splitlines()]
        return "\n".join(["check,status,violations", *lines]) + "\n"


def _query_mismatches(g, cfg, events):
    sim = run_simulation(g, cfg, events)
    bad = []
    for qid, epoch, s, t, k, weights in replay(g, events):
        h = g.copy()
        h.weight[:] = weights
        want = [p.distance for p in yen_ksp(h, s, t, k)]
        got = [d for d, _ in sim.results[qid]["paths"]]
        if want != got:
            bad.append((qid, s, t, k, want, got))
    return sim, bad


def _minimize(g, cfg, events, qid):
    """Keep only the failing query and drop update batches greedily while it still fails."""
    groups, queries = [], []
    for ev in events:
        if ev.kind == "query":
            queries.append(ev)
            if len(queries) - 1 == qid:
                break
        elif groups and groups[-1][0].tick == ev.tick and groups[-1][0].kind == "update":
            groups[-1].append(ev)
        else:
            groups.append([ev])
    target = queries[qid]
    keep = [grp for grp in groups if grp[0].tick < target.tick]

    def fails(batches):
        trace = [ev for grp in batches for ev in grp] + [target]
        return bool(_query_mismatches(g, cfg, trace)[1])

    i = 0
    while i < len(keep):
        trial = keep[:i] + keep[i + 1 :]
        if fails(trial):
            keep = trial
        else:
            i += 1
    return format_trace([ev for grp in keep for ev in grp] + [target])


def _corrupt_lbd(index: DtlpIndex, replica):
    # simulated state corruption: inflate one reachable pair's lbd in the table and in a replica
    for ix in index.indexes:
        for pair, bps in sorted(ix.sets.items()):
            if bps.paths:
                bad = bps.lbd * 2 + 1_000_000
                index.table.set(pair, ix.sg.id, bad)
                replica.apply_lbd_update(pair, ix.sg.id, bad)
                return pair, ix.sg.id
    return None


def validate(g: Graph, seed: int, n_queries: int, k_max: int, cfg: SimConfig | None = None, batches: int = 3,
             fault: str | None = None) -> ValidationReport:
    """Oracle equivalence through the simulator plus index invariants; ``fault="corrupt-lbd"`` injects a bad bound."""
    if fault not in (None, "corrupt-lbd"):
        raise ValueError(f"unknown fault {fault!r}")
    cfg = cfg or SimConfig(z=max(2, g.n // 4), xi=5, scheduler_seed=seed)
    checks = {"oracle-equivalence": 0, "lemma": 0, "lbd-soundness": 0, "incremental-equals-rebuild": 0,
              "replica-convergence": 0}
    failures = []
    repro = ""
    if n_queries == 0:
        return ValidationReport(True, checks, failures)
    ks = sorted({1, min(2, k_max), max(1, k_max // 2), k_max})
    queries = generate_queries(g, n_queries, seed, ks)
    stream = generate_weight_stream(g, DynamicsConfig(0.5, 0.5, batches, seed))
    events = interleave(stream, queries)

    base = g.copy()
    part = partition_bfs(base, cfg.z)
    index = DtlpIndex(part, cfg.xi, cfg.h, cfg.b)
    sim = run_simulation(base, cfg, events, partition=part, index=index)
    if fault == "corrupt-lbd":
        _corrupt_lbd(index, sim.replicas[0])

    # oracle equivalence on each query's snapshot
    for qid, epoch, s, t, k, weights in replay(g, events):
        h = g.copy()
        h.weight[:] = weights
        want = [p.distance for p in yen_ksp(h, s, t, k)]
        got = [d for d, _ in sim.results[qid]["paths"]]
        if want != got:
            checks["oracle-equivalence"] += 1
            failures.append(("oracle-equivalence", f"query {qid} ({s}->{t}, k={k}, epoch {epoch}): want {want} got {got}"))
            if not repro and fault is None:
                repro = _minimize(g, cfg, events, qid)
        checks["lemma"] += sim.results[qid]["stats"]["lemma_violations"]

    # every skeleton edge weight bounds the within-subgraph distance at the final weights
    replica = sim.replicas[0]
    for (u, v), contrib in sorted(replica.contrib.items()):
        for sid, lbd in contrib.items():
            if sid not in range(len(part)):
                continue
            dist = reverse_distances(part[sid].adjacency(), v).get(u, float("inf"))
            if lbd > dist:
                checks["lbd-soundness"] += 1
                failures.append(("lbd-soundness", f"pair ({u},{v}) in subgraph {sid}: lbd {lbd} > distance {dist}"))

    fresh = DtlpIndex(partition_bfs(base.copy(), cfg.z), cfg.xi, cfg.h, cfg.b)
    if fresh.table != index.table:
        diff = [p for p in fresh.table.pairs() if fresh.table.entries[p] != index.table.entries.get(p)]
        checks["incremental-equals-rebuild"] += max(1, len(diff))
        failures.append(("incremental-equals-rebuild", f"{len(diff)} pairs differ, first {diff[:3]}"))
    rebuilt = build_skeleton(index.table, part.boundary_vertices)
    for r in sim.replicas:
        if r != rebuilt:
            checks["replica-convergence"] += 1
            failures.append(("replica-convergence", "a query replica differs from the skeleton of the final table"))
    passed = all(n == 0 for n in checks.values())
    return ValidationReport(passed, checks, failures, repro)
