import copy
import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kspdg.bounds import DtlpIndex, MbdTable
from kspdg.graph import Graph
from kspdg.partition import partition_bfs
from kspdg.skeleton import (
    ReferencePaths,
    SkeletonGraph,
    attach_query_vertex,
    build_skeleton,
    reference_path,
)
from kspdg.synthetic import random_connected_graph, road_like_graph

from conftest import dijkstra, simple_paths


def table(entries):
    t = MbdTable()
    for pair, sg, lbd in entries:
        t.set(pair, sg, lbd)
    return t


def test_single_edge_skeleton():
    g = build_skeleton(table([((1, 2), 0, 7)]))
    assert g.edges() == [(1, 2)] and g.weight[(1, 2)] == 7 and g.argmin[(1, 2)] == 0


def test_min_over_subgraphs():
    g = build_skeleton(table([((1, 2), 0, 5), ((1, 2), 1, 9)]))
    assert (g.weight[(1, 2)], g.argmin[(1, 2)]) == (5, 0)


def test_update_rules():
    g = build_skeleton(table([((1, 2), 1, 5), ((1, 2), 2, 9)]))
    assert not g.apply_lbd_update((1, 2), 1, 5)
    assert g.apply_lbd_update((2, 1), 1, 12)
    assert (g.weight[(1, 2)], g.argmin[(1, 2)]) == (9, 2)
    paper = build_skeleton(table([((1, 2), 1, 5), ((1, 2), 2, 9)]), paper_rule=True)
    paper.apply_lbd_update((1, 2), 1, 12)
    assert paper.weight[(1, 2)] == 12  # stale over-estimate under the two-case rule
    g = build_skeleton(table([((1, 2), 1, 5)]))
    assert g.apply_lbd_update((1, 2), 2, 4)
    assert (g.weight[(1, 2)], g.argmin[(1, 2)]) == (4, 2)


def test_infinite_lbd_has_no_edge():
    g = build_skeleton(table([((1, 2), 0, float("inf"))]), boundary_vertices=[1, 2])
    assert g.edges() == [] and g.vertices == {1, 2}


def test_star_attachment():
    g = Graph(4, [(0, 1, 2), (0, 2, 3), (1, 3, 1), (2, 3, 1)])
    part = partition_bfs(g, 3)
    sg = part[part.vertex_to_subgraphs[0][0]]
    assert sg.boundary == {1, 2}
    skel = build_skeleton(DtlpIndex(part, 3).table, part.boundary_vertices)
    before = skel.copy()
    h = attach_query_vertex(skel, 0, sg, 3)
    assert skel.adj[0] == {1: 2000, 2: 3000}
    h.release()
    assert skel == before
    noop = attach_query_vertex(skel, 1, sg, 3)
    assert noop.contributions == [] and skel == before


def test_reference_path_triangle():
    skel = SkeletonGraph()
    for pair, w in (((0, 1), 1), ((1, 2), 1), ((0, 2), 3)):
        skel.apply_lbd_update(pair, 0, w)
    refs = ReferencePaths(skel, 0, 2)
    assert [refs.get(i).distance for i in (1, 2)] == [2, 3]
    assert refs.get(3) is None
    assert reference_path(skel, 0, 1, 1).vertices == (0, 1)
    with pytest.raises(ValueError):
        reference_path(skel, 0, 9, 1)
    with pytest.raises(ValueError):
        refs.get(0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_reference_paths_match_enumeration(seed):
    rng = random.Random(seed)
    skel = SkeletonGraph()
    n = rng.randint(3, 9)
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < 0.5:
                skel.apply_lbd_update((u, v), rng.randrange(3), rng.randint(1, 5))
    s, t = rng.sample(range(n), 2)
    if s not in skel.adj or t not in skel.adj:
        return
    want = simple_paths(skel.adjacency(), s, t)
    refs = ReferencePaths(skel, s, t)
    for i in range(1, 6):
        got = refs.get(i)
        if i > len(want):
            assert got is None
        else:
            assert got == want[i - 1]


def _random_instance(n, seed):
    g = random_connected_graph(n, seed, extra=0.25) if seed % 2 else road_like_graph(n, seed)
    return g, partition_bfs(g, max(5, n // 4))


@settings(max_examples=15, deadline=None)
@given(st.integers(20, 120), st.integers(0, 10_000), st.integers(1, 6))
def test_edge_soundness_and_first_reference_theorem(n, seed, xi):
    g, part = _random_instance(n, seed)
    index = DtlpIndex(part, xi)
    skel = build_skeleton(index.table, part.boundary_vertices)
    for (u, v), w in skel.weight.items():
        sid = skel.argmin[(u, v)]
        assert w <= dijkstra(part[sid], u)[v]
    rng = random.Random(seed)
    bs = part.boundary_vertices
    for _ in range(5):
        if len(bs) < 2:
            break
        s, t = rng.sample(bs, 2)
        ref = reference_path(skel, s, t, 1)
        d = dijkstra(g, s).get(t)
        if ref is not None:
            assert ref.distance <= d


@settings(max_examples=10, deadline=None)
@given(st.integers(30, 100), st.integers(0, 10_000))
def test_update_equivalence(n, seed):
    g, part = _random_instance(n, seed)
    index = DtlpIndex(part, 3)
    skel = build_skeleton(index.table, part.boundary_vertices)
    rng = random.Random(seed)
    for _ in range(5):
        batch = []
        for e in rng.sample(range(g.m), max(1, g.m // 3)):
            new = max(1, round(g.weight[e] * rng.uniform(0.5, 1.5)))
            batch.append((e, new - g.weight[e]))
        for pair, sid, lbd in index.apply_batch(batch):
            skel.apply_lbd_update(pair, sid, lbd)
        assert skel == build_skeleton(DtlpIndex(part, 3).table, part.boundary_vertices)


@settings(max_examples=15, deadline=None)
@given(st.integers(20, 100), st.integers(0, 10_000))
def test_attachment_hygiene_and_soundness(n, seed):
    g, part = _random_instance(n, seed)
    skel = build_skeleton(DtlpIndex(part, 3).table, part.boundary_vertices)
    snapshot = copy.deepcopy(skel)
    interior = [v for v in range(g.n) if not part.is_boundary(v)]
    rng = random.Random(seed)
    for v in rng.sample(interior, min(4, len(interior))):
        sg = part[part.vertex_to_subgraphs[v][0]]
        h = attach_query_vertex(skel, v, sg, 3)
        dist = dijkstra(sg, v)
        for b, w in skel.adj.get(v, {}).items():
            assert w <= dist[b]
        h.release()
        assert skel == snapshot


def test_dump_csv():
    buf = io.StringIO()
    build_skeleton(table([((1, 2), 0, 7000)])).dump_csv(buf)
    assert buf.getvalue() == "u,v,weight,argmin_sg\n1,2,7.000,0\n"
