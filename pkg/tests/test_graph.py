import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kspdg.graph import DimacsError, Graph, Path, emit_dimacs, parse_dimacs
from kspdg.synthetic import random_connected_graph, road_like_graph
from kspdg.units import fmt_fixed, to_fixed


def test_symmetric_pair_collapses():
    g = parse_dimacs(b"p sp 2 2\na 1 2 5\na 2 1 5\n")
    assert g.n == 2 and g.edges == [(0, 1)] and g.initial == [5]
    assert g.weight == [5000]


def test_min_arc_weight_kept():
    g = parse_dimacs(b"c hello\np sp 2 2\na 1 2 5\na 2 1 7\n")
    assert g.initial == [5]


def test_reads_path_and_stream(tmp_path):
    f = tmp_path / "g.gr"
    f.write_text("p sp 3 2\na 1 2 4\na 2 3 6\n")
    assert parse_dimacs(str(f)) == parse_dimacs(io.StringIO(f.read_text()))


@pytest.mark.parametrize(
    "text,line",
    [
        ("p sp x 2\n", 1),
        ("p sp 2 1\na 1 3 5\n", 2),
        ("p sp 2 1\na 1 2 0\n", 2),
        ("p sp 2 1\np sp 2 1\n", 2),
        ("a 1 2 3\n", 1),
        ("p sp 2 1\nq 1 2\n", 2),
        ("p sp 2 1\na 1 2\n", 2),
    ],
)
def test_parse_errors_name_line(text, line):
    with pytest.raises(DimacsError) as exc:
        parse_dimacs(text.encode())
    assert exc.value.lineno == line
    assert f"line {line}" in str(exc.value)


def test_missing_header():
    with pytest.raises(DimacsError):
        parse_dimacs(b"c nothing\n")


def test_graph_rejects_bad_edges():
    with pytest.raises(ValueError):
        Graph(2, [(0, 0, 1)])
    with pytest.raises(ValueError):
        Graph(2, [(0, 1, 0)])
    with pytest.raises(ValueError):
        Graph(2, [(0, 2, 1)])


def test_copy_isolates_weights():
    g = Graph(3, [(0, 1, 2), (1, 2, 3)])
    h = g.copy()
    h.weight[0] += 1
    assert g.weight[0] == 2000


def test_path_helpers():
    g = Graph(3, [(0, 1, 2), (1, 2, 3)])
    p = g.make_path([0, 1, 2])
    assert p == Path(5000, (0, 1, 2))
    assert p.is_simple() and g.is_path(p.vertices)
    assert not g.is_path((0, 2))
    assert p.edges() == [(0, 1), (1, 2)]


def test_fixed_point():
    assert to_fixed(3) == 3000
    assert to_fixed("-0.523") == -523
    assert fmt_fixed(-523) == "-0.523"
    assert fmt_fixed(4000) == "4.000"
    with pytest.raises(ValueError):
        to_fixed("abc")


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.integers(0, 10_000), st.booleans())
def test_emit_parse_round_trip(n, seed, road):
    g = road_like_graph(n, seed) if road else random_connected_graph(n, seed)
    assert parse_dimacs(emit_dimacs(g).encode()) == g


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 80), st.integers(0, 10_000))
def test_synthetic_graphs_connected(n, seed):
    for g in (road_like_graph(n, seed), random_connected_graph(n, seed)):
        assert len(set(g.components())) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(0, 10**6), st.booleans())
def test_blocks_match_networkx(n, seed, road):
    nx = pytest.importorskip("networkx")
    g = road_like_graph(n, seed) if road else random_connected_graph(n, seed, extra=0.1)
    want = sorted(sorted(c) for c in nx.biconnected_components(nx.Graph(g.edges)))
    assert sorted(sorted(b) for b in g.blocks()) == want


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 14), st.integers(0, 10**6), st.data())
def test_corridor_is_union_of_simple_paths(n, seed, data):
    nx = pytest.importorskip("networkx")
    g = random_connected_graph(n, seed, extra=0.3)
    s = data.draw(st.integers(0, n - 1))
    t = data.draw(st.integers(0, n - 1))
    want = {s} if s == t else {v for p in nx.all_simple_paths(nx.Graph(g.edges), s, t) for v in p}
    assert g.corridor(s, t) == want


def test_corridor_disconnected_and_bridge():
    g = Graph(6, [(0, 1, 1), (1, 2, 1), (2, 0, 1), (2, 3, 1), (4, 5, 1)])
    assert g.corridor(0, 4) == frozenset()
    assert g.corridor(0, 3) == {0, 1, 2, 3}
    assert g.corridor(2, 3) == {2, 3}
