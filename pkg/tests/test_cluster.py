import io
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kspdg.cluster import (
    LBD_UPDATE,
    PARTIAL_REQ,
    Message,
    SimConfig,
    Simulation,
    TraceEvent,
    format_trace,
    parse_config,
    parse_trace,
    route_weight_batch,
    run_simulation,
)
from kspdg.dg import ksp_dg, segment_blocked
from kspdg.ksp import pyen_ksp, yen_ksp
from kspdg.partition import partition_bfs
from kspdg.synthetic import road_like_graph
from kspdg.workload import DynamicsConfig, generate_queries, generate_weight_stream, interleave, replay

from conftest import path_graph


def test_parse_config():
    cfg = parse_config("# defaults\nz=30\nxi = 4\nrouting=targeted\nparallel=yes\n")
    assert (cfg.z, cfg.xi, cfg.routing, cfg.parallel) == (30, 4, "targeted", True)
    for bad in ("bogus=1", "z=abc", "z", "routing=sideways", "xi=0"):
        with pytest.raises(ValueError):
            parse_config(bad)


def test_parse_trace_and_round_trip():
    text = "# c\nt=1 update 3 -0.5\nt=1 update 4 2\nt=2 query 0 5\nt=4 query 1 2 7\n"
    evs = parse_trace(io.StringIO(text), k_default=10)
    assert evs == [
        TraceEvent(1, "update", (3, -500)),
        TraceEvent(1, "update", (4, 2000)),
        TraceEvent(2, "query", (0, 5, 10)),
        TraceEvent(4, "query", (1, 2, 7)),
    ]
    assert parse_trace(format_trace(evs).splitlines()) == evs


@pytest.mark.parametrize(
    "text,line",
    [("t=1 update 3\n", 1), ("t=1 fly 3 4\n", 1), ("t=5 query 1 2 3\nt=4 query 1 2 3\n", 2), ("t=1 query 1 2\n", 1)],
)
def test_parse_trace_errors(text, line):
    with pytest.raises(ValueError, match=f"line {line}"):
        parse_trace(text.splitlines())


def test_route_weight_batch():
    g = path_graph(4)
    part = partition_bfs(g, 2)
    assert route_weight_batch(part, []) == ({}, [])
    subs, rejected = route_weight_batch(part, [(0, 5), (2, -1), (99, 1)])
    assert rejected == [(99, 1)]
    assert len(subs) == 2 and sorted(x for v in subs.values() for x in v) == [(0, 5), (2, -1)]


def test_route_preserves_multiset():
    g = road_like_graph(300, 1)
    part = partition_bfs(g, 40)
    rng = random.Random(1)
    batch = [(rng.randrange(g.m), rng.randint(-5, 5)) for _ in range(1000)]
    subs, rejected = route_weight_batch(part, batch)
    assert not rejected
    assert Counter(x for v in subs.values() for x in v) == Counter(batch)
    for sid, items in subs.items():
        assert all(part.edge_owner[e] == sid for e, _ in items)


def test_empty_trace_empty_log():
    res = run_simulation(road_like_graph(50, 0), SimConfig(z=15, xi=3), [])
    assert res.log == [] and res.results == {}


def test_single_query_message_flow():
    g = road_like_graph(80, 2)
    res = run_simulation(g, SimConfig(z=20, xi=3), [TraceEvent(1, "query", (0, 79, 3))])
    kinds = [r.kind for r in res.log]
    assert kinds[:2] == ["TraceQuery", "QueryAssign"]
    assert kinds[-1] == "QueryResult"
    assert "RefPathBroadcast" in kinds and "PartialKspResponse" in kinds
    assert kinds.index("RefPathBroadcast") < kinds.index("PartialKspResponse")
    assert [d for d, _ in res.results[0]["paths"]] == [p.distance for p in yen_ksp(g, 0, 79, 3)]


def _trace(g, n_queries, batches, seed, ks=(1, 2, 5)):
    queries = generate_queries(g, n_queries, seed, list(ks))
    stream = generate_weight_stream(g, DynamicsConfig(0.5, 0.5, batches, seed))
    return interleave(stream, queries)


def _check_against_snapshots(g, res, events):
    for qid, epoch, s, t, k, weights in replay(g, events):
        h = g.copy()
        h.weight[:] = weights
        assert res.results[qid]["epoch"] == epoch
        assert [d for d, _ in res.results[qid]["paths"]] == [p.distance for p in yen_ksp(h, s, t, k)]


@pytest.mark.parametrize("routing", ["broadcast", "targeted"])
def test_interleaved_trace_matches_snapshots(routing):
    g = road_like_graph(150, 7)
    events = _trace(g, 10, 4, 7)
    before = g.copy()
    res = run_simulation(g, SimConfig(z=40, xi=4, routing=routing, scheduler_seed=3), events)
    assert g == before
    _check_against_snapshots(g, res, events)
    assert all(r == res.replicas[0] for r in res.replicas)


def test_results_independent_of_scheduler_seed():
    g = road_like_graph(120, 5)
    events = _trace(g, 6, 3, 5)
    outs = [run_simulation(g, SimConfig(z=30, xi=3, scheduler_seed=seed), events).results for seed in range(10)]
    assert all(o == outs[0] for o in outs)


def test_parallel_mode_same_results():
    g = road_like_graph(120, 6)
    events = _trace(g, 5, 2, 6)
    a = run_simulation(g, SimConfig(z=30, xi=3), events)
    b = run_simulation(g, SimConfig(z=30, xi=3, parallel=True), events)
    assert a.results == b.results


def test_no_lost_updates_and_rejections():
    g = road_like_graph(100, 8)
    stream = generate_weight_stream(g, DynamicsConfig(0.3, 0.4, 3, 8))
    events = interleave(stream, [])
    bad = TraceEvent(events[-1].tick + 1, "update", (0, -g.weight[0] * 50))
    res = run_simulation(g, SimConfig(z=25, xi=3), events + [bad])
    want = list(g.weight)
    for batch in stream:
        for e, dw in batch:
            want[e] += dw
    assert res.final_weights == want
    assert res.rejected == [bad.args]


def test_zero_delta_batch_emits_no_lbd_updates():
    g = road_like_graph(60, 3)
    res = run_simulation(g, SimConfig(z=15, xi=3), [TraceEvent(1, "update", (e, 0)) for e in range(5)])
    assert not any(r.kind == LBD_UPDATE for r in res.log)


def test_single_path_pair_one_update_per_query_worker():
    g = path_graph(4, w=3)
    e = g.edge_id(1, 2)
    res = run_simulation(g, SimConfig(z=2, xi=2, query_workers=3), [TraceEvent(1, "update", (e, 2000))])
    assert Counter(r.receiver for r in res.log if r.kind == LBD_UPDATE) == {"q0": 1, "q1": 1, "q2": 1}
    assert res.replicas[0].weight[(1, 2)] == 5000


def test_subgraph_worker_partial_matches_pyen():
    g = road_like_graph(150, 4)
    sim = Simulation(g, SimConfig(z=40, xi=3))
    sg = next(sg for sg in sim.partition if len(sg.boundary) >= 2)
    a, b = sorted(sg.boundary)[:2]
    home = sim.sg_home[sg.id]
    body = {"query_id": 0, "rank": 1, "epoch": 0, "endpoints": [a, b], "requests": [[[a, b], 4]]}
    (resp,) = sim.workers[home].handle(Message(PARTIAL_REQ, "q0", home, body))
    worker = sim.workers[home]
    want = sorted(
        p for sid in worker.owns_pair((a, b))
        for p in pyen_ksp(sim.partition[sid], a, b, 4, exclude=segment_blocked(sim.partition, sid, (a, b), (a, b)))
    )[:4]
    assert resp.body["pair"] == [a, b] and resp.receiver == "q0"
    assert [(d, tuple(vs)) for d, vs in resp.body["paths"]] == [(p.distance, p.vertices) for p in want]


def test_simulated_query_equals_in_process():
    g = road_like_graph(140, 9)
    cfg = SimConfig(z=35, xi=4)
    events = [TraceEvent(i + 1, "query", q) for i, q in enumerate(generate_queries(g, 6, 9, [3, 8]))]
    res = run_simulation(g, cfg, events)
    sim = Simulation(g, cfg)
    for qid, ev in enumerate(events):
        s, t, k = ev.args
        out = ksp_dg(sim.partition, sim.initial_skeleton, s, t, k, cfg.xi)
        assert [(d, tuple(vs)) for d, vs in res.results[qid]["paths"]] == [(p.distance, p.vertices) for p in out.paths]
        assert res.results[qid]["stats"] == out.stats.row()


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000))
def test_log_is_deterministic(seed):
    g = road_like_graph(80, seed)
    events = _trace(g, 3, 2, seed)
    cfg = SimConfig(z=20, xi=3, scheduler_seed=seed)
    a, b = io.StringIO(), io.StringIO()
    run_simulation(g, cfg, events).write_log(a)
    run_simulation(g, cfg, events).write_log(b)
    assert a.getvalue() == b.getvalue()
