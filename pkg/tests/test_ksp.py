import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kspdg.graph import Graph, Path
from kspdg.ksp import PYenStats, ProgressiveYen, ReuseIndex, pyen_ksp, shortest_path, yen_ksp
from kspdg.partition import partition_bfs
from kspdg.synthetic import random_connected_graph, road_like_graph

from conftest import connected_pair, dijkstra, grid, path_graph, simple_paths


def test_grid_corner_to_corner():
    g = grid(3, 3)
    got = yen_ksp(g, 0, 8, 6)
    assert [p.distance for p in got] == [4000] * 6
    assert got == simple_paths(g, 0, 8)[:6]
    assert pyen_ksp(g, 0, 8, 6) == got


def test_k1_is_dijkstra():
    g = random_connected_graph(40, 3)
    for t in range(1, 40):
        assert yen_ksp(g, 0, t, 1)[0].distance == dijkstra(g, 0)[t]


def test_trivial_cases():
    g = Graph(4, [(0, 1, 1), (2, 3, 1)])
    assert yen_ksp(g, 0, 0, 3) == [Path(0, (0,))]
    assert pyen_ksp(g, 0, 0, 3) == [Path(0, (0,))]
    assert yen_ksp(g, 0, 3, 2) == [] == pyen_ksp(g, 0, 3, 2)
    for fn in (yen_ksp, pyen_ksp):
        with pytest.raises(ValueError):
            fn(g, 0, 1, 0)
        with pytest.raises(ValueError):
            fn(g, 0, 9, 1)


def test_unique_path_graph():
    g = path_graph(6)
    st_ = PYenStats()
    assert pyen_ksp(g, 0, 5, 4, stats=st_) == [Path(5000, tuple(range(6)))]


def test_reuse_fires_on_shared_suffix():
    # two routes 0->1 share the suffix 2-3-4 to the target
    g = Graph(5, [(0, 1, 1), (1, 2, 1), (0, 2, 3), (2, 3, 1), (3, 4, 1)])
    st_ = PYenStats()
    got = pyen_ksp(g, 0, 4, 2, stats=st_)
    assert got == yen_ksp(g, 0, 4, 2)
    assert st_.reuse_hits > 0


def test_reuse_index_suffixes_are_shortest():
    g = random_connected_graph(60, 5)
    adj = g.weighted_adjacency()
    ix = ReuseIndex(adj, 7)
    for v, d in ix.dist.items():
        suf = ix.suffix(v)
        assert suf[-1] == 7 and g.path_distance(suf) == d


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 12), st.integers(0, 10_000), st.integers(1, 12))
def test_yen_matches_enumeration(n, seed, k):
    g = random_connected_graph(n, seed, extra=0.6, wmax=5)
    s, t = connected_pair(g, random.Random(seed))
    assert yen_ksp(g, s, t, k) == simple_paths(g, s, t)[:k]


@settings(max_examples=80, deadline=None)
@given(st.integers(3, 80), st.integers(0, 10_000), st.integers(1, 15), st.booleans())
def test_pyen_equals_yen(n, seed, k, road):
    g = road_like_graph(n, seed, wmax=5) if road else random_connected_graph(n, seed, wmax=5)
    s, t = connected_pair(g, random.Random(seed))
    want = yen_ksp(g, s, t, k)
    assert pyen_ksp(g, s, t, k) == want
    assert pyen_ksp(g, s, t, k, prune=False) == want
    for p in want:
        assert p.is_simple() and g.path_distance(p.vertices) == p.distance


def test_pyen_on_subgraphs_and_threads():
    g = road_like_graph(150, 2)
    part = partition_bfs(g, 40)
    rng = random.Random(2)
    for sg in part:
        vs = sorted(sg.vertices)
        if len(vs) < 2:
            continue
        for _ in range(3):
            s, t = rng.sample(vs, 2)
            want = yen_ksp(sg, s, t, 8)
            assert pyen_ksp(sg, s, t, 8) == want
            assert pyen_ksp(sg, s, t, 8, workers=4) == want


def test_exclude_vertices():
    g = grid(3, 3)
    got = pyen_ksp(g, 0, 8, 10, exclude={4})
    assert all(4 not in p.vertices for p in got)
    assert len(got) == 2


def test_progressive_iterator_is_resumable():
    g = random_connected_graph(30, 8)
    it = ProgressiveYen(g, 0, 29)
    first = it.take(3)
    more = it.take(7)
    assert more[:3] == first and more == yen_ksp(g, 0, 29, 7)


@settings(max_examples=25, deadline=None)
@given(st.integers(8, 30), st.integers(0, 10**6), st.integers(1, 8))
def test_progressive_limit_stops_at_distance(n, seed, cut):
    g = random_connected_graph(n, seed)
    ref = yen_ksp(g, 0, n - 1, 12)
    limit = ref[min(cut, len(ref)) - 1].distance
    it = ProgressiveYen(g, 0, n - 1, k=12)
    it.take(1)
    it.limit = limit
    assert list(it) == [p for p in ref[1:] if p.distance <= limit]


def test_shortest_path_lexicographic_tie():
    g = grid(2, 2)
    assert shortest_path(g.weighted_adjacency(), 0, 3).vertices == (0, 1, 3)
