import subprocess
import sys

import pytest

from kspdg.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main

SYN = ["--synthetic", "road", "--n", "80", "--seed", "3"]


def run(*argv):
    return main([str(a) for a in argv])


def test_partition_csv(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert run("partition", *SYN, "--z", 20, "--out", out) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "subgraph_id,vertex_id,is_boundary"
    assert {int(line.split(",")[1]) for line in lines[1:]} == set(range(80))


def test_partition_from_dimacs(tmp_path):
    gr = tmp_path / "g.gr"
    gr.write_text("c tiny\np sp 3 4\na 1 2 5\na 2 1 7\na 2 3 1\na 3 2 1\n")
    assert run("partition", "--graph", gr, "--z", 2, "--out", tmp_path / "p.csv") == EXIT_OK


def test_build_index_writes_all_dumps(tmp_path):
    assert run("build-index", *SYN, "--z", 20, "--xi", 3, "--out-dir", tmp_path) == EXIT_OK
    for name in ("partition.csv", "bounding_paths.csv", "skeleton.csv", "compaction.csv", "gmptree.txt"):
        assert (tmp_path / name).stat().st_size > 0


def test_generators(tmp_path):
    trace, qs = tmp_path / "t.txt", tmp_path / "q.csv"
    assert run("gen-stream", *SYN, "--alpha", 0.2, "--snapshots", 2, "--out", trace) == EXIT_OK
    assert trace.read_text().startswith("t=10 update ")
    assert run("gen-queries", *SYN, "--count", 4, "--ks", "1,3", "--out", qs) == EXIT_OK
    assert len(qs.read_text().splitlines()) == 5


def _run_pipeline(tmp_path, tag, mode="ksp-dg"):
    trace, qs, out = tmp_path / "t.txt", tmp_path / "q.csv", tmp_path / tag
    run("gen-stream", *SYN, "--snapshots", 3, "--out", trace)
    run("gen-queries", *SYN, "--count", 6, "--ks", "1,4", "--out", qs)
    code = run("run", *SYN, "--z", 20, "--xi", 3, "--trace", trace, "--queries", qs, "--mode", mode, "--out-dir", out)
    return code, out


def test_run_is_byte_identical(tmp_path):
    c1, a = _run_pipeline(tmp_path, "a")
    c2, b = _run_pipeline(tmp_path, "b")
    assert c1 == c2 == EXIT_OK
    for name in ("results.txt", "stats.csv", "messages.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    _, y = _run_pipeline(tmp_path, "y", mode="yen")
    dist = lambda p: [line.split(",")[:3] for line in (p / "results.txt").read_text().splitlines()]  # noqa: E731
    assert dist(a) == dist(y)


def test_validate_exit_codes(tmp_path):
    assert run("validate", *SYN, "--count", 5, "--k-max", 3, "--out", tmp_path / "ok.csv") == EXIT_OK
    assert run("validate", *SYN, "--count", 4, "--k-max", 3, "--fault", "corrupt-lbd", "--out", tmp_path / "bad.csv") \
        == EXIT_VALIDATION
    assert "FAIL" in (tmp_path / "bad.csv").read_text()


def test_report_series(tmp_path):
    out = tmp_path / "r.csv"
    assert run("report", *SYN, "--z", 20, "--xis", "2,4", "--count", 3, "--k", 2, "--out", out) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "xi,queries,mean_iterations,max_iterations,seconds" and len(lines) == 3


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        run("frobnicate")
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        run("partition", "--z", "abc")
    assert exc.value.code == EXIT_USAGE
    assert run("partition", "--z", 5) == EXIT_USAGE  # no graph source


def test_data_errors(tmp_path, capsys):
    gr = tmp_path / "bad.gr"
    gr.write_text("p sp 2 1\na 1 3 4\n")
    assert run("partition", "--graph", gr) == EXIT_DATA
    assert "line 2" in capsys.readouterr().err
    assert run("partition", "--graph", tmp_path / "missing.gr") == EXIT_DATA
    trace = tmp_path / "t.txt"
    trace.write_text("t=1 upd 1 2\n")
    assert run("run", *SYN, "--trace", trace, "--out-dir", tmp_path / "o") == EXIT_DATA


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kspdg", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "validate" in proc.stdout
