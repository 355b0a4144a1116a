"""Command-line front end: ``kspdg <subcommand> ...``.

Exit codes: 0 ok, 1 usage, 2 data error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys

from .bounds import DtlpIndex, write_bounding_paths_csv
from .cluster import SimConfig, format_trace, load_config, parse_trace
from .compaction import dump_tree, write_report_csv
from .graph import DimacsError, parse_dimacs
from .partition import partition_bfs
from .skeleton import build_skeleton
from .synthetic import random_connected_graph, road_like_graph
from .workload import (
    MODES,
    DynamicsConfig,
    generate_queries,
    generate_weight_stream,
    interleave,
    iteration_sweep,
    read_queries_csv,
    run_bench,
    validate,
    write_queries_csv,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VALIDATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _graph_args(p):
    src = p.add_argument_group("graph source")
    src.add_argument("--graph", help="DIMACS .gr file")
    src.add_argument("--synthetic", choices=("road", "random"), help="generate a seeded synthetic graph instead")
    src.add_argument("--n", type=int, default=500, help="vertex count for --synthetic (default 500)")
    p.add_argument("--seed", type=int, default=0)


def _config_args(p):
    c = p.add_argument_group("configuration (flags override --config)")
    c.add_argument("--config", help="key=value config file")
    for key, typ in (("z", int), ("xi", int), ("k", int), ("h", int), ("b", int), ("scheduler-seed", int),
                     ("subgraph-workers", int), ("query-workers", int), ("fetch-cap", int)):
        c.add_argument(f"--{key}", type=typ)
    c.add_argument("--routing", choices=("broadcast", "targeted"))
    c.add_argument("--parallel", action="store_true", default=None)
    c.add_argument("--exact-ties", action="store_true", default=None)


def _load_graph(args):
    if bool(args.graph) == bool(args.synthetic):
        raise UsageError("give exactly one of --graph or --synthetic")
    if args.graph:
        return parse_dimacs(args.graph)
    make = road_like_graph if args.synthetic == "road" else random_connected_graph
    return make(args.n, args.seed)


def _config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    names = {"k": "k_default"}
    for key in ("z", "xi", "k", "h", "b", "scheduler_seed", "subgraph_workers", "query_workers", "fetch_cap",
                "routing", "parallel", "exact_ties"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, names.get(key, key), val)
    cfg.__post_init__()
    return cfg


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def cmd_partition(args):
    g = _load_graph(args)
    part = partition_bfs(g, _config(args).z)
    with _output(args.out) as fh:
        part.dump_csv(fh)
    print(f"{len(part)} subgraphs, {len(part.boundary_vertices)} boundary vertices", file=sys.stderr)


def cmd_build_index(args):
    g = _load_graph(args)
    cfg = _config(args)
    part = partition_bfs(g, cfg.z)
    index = DtlpIndex(part, cfg.xi, cfg.h, cfg.b)
    skel = build_skeleton(index.table, part.boundary_vertices)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "partition.csv"), "w", newline="") as fh:
        part.dump_csv(fh)
    with open(os.path.join(args.out_dir, "bounding_paths.csv"), "w", newline="") as fh:
        write_bounding_paths_csv(index.indexes, fh)
    with open(os.path.join(args.out_dir, "skeleton.csv"), "w", newline="") as fh:
        skel.dump_csv(fh)
    with open(os.path.join(args.out_dir, "compaction.csv"), "w", newline="") as fh:
        write_report_csv([(ix.sg.id, ix.compaction.report()) for ix in index.indexes], fh)
    with open(os.path.join(args.out_dir, "gmptree.txt"), "w") as fh:
        for ix in index.indexes:
            fh.write(f"# subgraph {ix.sg.id}\n")
            fh.write(dump_tree(ix.compaction.tree))


def cmd_gen_stream(args):
    g = _load_graph(args)
    batches = generate_weight_stream(g, DynamicsConfig(args.alpha, args.tau, args.snapshots, args.seed))
    with _output(args.out) as fh:
        fh.write(format_trace(interleave(batches, [], spacing=args.spacing)))


def cmd_gen_queries(args):
    g = _load_graph(args)
    ks = _ints(args.ks) if args.ks else [_config(args).k_default]
    with _output(args.out) as fh:
        write_queries_csv(generate_queries(g, args.count, args.seed, ks), fh)


def _read_events(args, cfg):
    events = []
    if args.trace:
        with open(args.trace) as fh:
            events = parse_trace(fh, cfg.k_default)
    if args.queries:
        with open(args.queries, newline="") as fh:
            queries = read_queries_csv(fh, args.queries)
        if any(ev.kind == "query" for ev in events):
            raise ValueError("--queries given but the trace already contains queries")
        batches = []
        for ev in events:
            if batches and batches[-1][0] == ev.tick:
                batches[-1][1].append(ev.args)
            else:
                batches.append((ev.tick, [ev.args]))
        events = interleave([b for _, b in batches], queries)
    return events


def cmd_run(args):
    g = _load_graph(args)
    cfg = _config(args)
    events = _read_events(args, cfg)
    res = run_bench(g, cfg, events, args.mode)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "results.txt"), "w") as fh:
        res.write_results(fh)
    with open(os.path.join(args.out_dir, "stats.csv"), "w", newline="") as fh:
        res.write_stats(fh)
    if res.log:
        with open(os.path.join(args.out_dir, "messages.csv"), "w", newline="") as fh:
            res.write_log(fh)
    print(f"{len(res.results)} queries answered ({args.mode})", file=sys.stderr)


def cmd_validate(args):
    g = _load_graph(args)
    cfg = _config(args) if (args.config or args.z or args.xi) else None
    if cfg is not None:
        cfg.scheduler_seed = args.seed if args.scheduler_seed is None else cfg.scheduler_seed
    report = validate(g, args.seed, args.count, args.k_max, cfg=cfg, batches=args.batches, fault=args.fault)
    with _output(args.out) as fh:
        fh.write(report.render())
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_report(args):
    g = _load_graph(args)
    cfg = _config(args)
    queries = generate_queries(g, args.count, args.seed, cfg.k_default)
    rows = iteration_sweep(g, cfg.z, _ints(args.xis), queries, cfg.h, cfg.b)
    with _output(args.out) as fh:
        fh.write("xi,queries,mean_iterations,max_iterations,seconds\n")
        for r in rows:
            fh.write(f"{r['xi']},{r['queries']},{r['mean_iterations']:.3f},{r['max_iterations']},{r['seconds']:.3f}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kspdg", description="Distributed k-shortest-path queries over dynamic road networks.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("partition", help="BFS-partition a graph, CSV subgraph_id,vertex_id,is_boundary")
    _graph_args(s), _config_args(s)
    s.add_argument("--out")
    s.set_defaults(func=cmd_partition)

    s = sub.add_parser("build-index", help="build partition, bounding paths, compaction and skeleton dumps")
    _graph_args(s), _config_args(s)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_build_index)

    s = sub.add_parser("gen-stream", help="generate a weight-update trace")
    _graph_args(s)
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--tau", type=float, default=0.5)
    s.add_argument("--snapshots", type=int, default=10)
    s.add_argument("--spacing", type=int, default=10, help="ticks between snapshots")
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen_stream)

    s = sub.add_parser("gen-queries", help="generate connected random queries, CSV query_id,s,t,k")
    _graph_args(s), _config_args(s)
    s.add_argument("--count", type=int, default=50)
    s.add_argument("--ks", help="comma-separated k values to draw from (default: --k / k_default)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen_queries)

    s = sub.add_parser("run", help="replay a trace through the cluster simulation or a baseline")
    _graph_args(s), _config_args(s)
    s.add_argument("--trace", help="event trace (updates and optionally queries)")
    s.add_argument("--queries", help="query CSV, spread evenly between the trace's update batches")
    s.add_argument("--mode", choices=MODES, default="ksp-dg")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("validate", help="oracle-equivalence and invariant suite")
    _graph_args(s), _config_args(s)
    s.add_argument("--count", type=int, default=100, help="number of queries")
    s.add_argument("--k-max", type=int, default=10)
    s.add_argument("--batches", type=int, default=3)
    s.add_argument("--fault", choices=("corrupt-lbd",), help="self-test: inject a corrupted lbd")
    s.add_argument("--out")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("report", help="CSV series of mean KSP-DG iterations per xi")
    _graph_args(s), _config_args(s)
    s.add_argument("--xis", default="5,10,15")
    s.add_argument("--count", type=int, default=50, help="number of queries")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except UsageError as exc:
        print(f"kspdg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DimacsError as exc:
        print(f"kspdg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError, LookupError) as exc:
        print(f"kspdg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK if code is None else code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
