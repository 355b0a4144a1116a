"""Distributed k-shortest-path queries over dynamic road networks.

Partition a graph into subgraphs, keep per-subgraph lower-bound distances
between boundary vertices fresh as weights change, and answer loopless
k-shortest-path queries by filtering with a skeleton graph and refining
inside subgraphs.
"""

from .bounds import DtlpIndex, MbdTable, compute_bounding_paths, estimate_epindex_elements, lower_bound
from .cluster import SimConfig, run_simulation
from .compaction import build_compaction, retrieve_paths
from .dg import boundary_sequence, candidate_ksp, ksp_dg
from .graph import DimacsError, Graph, Path, emit_dimacs, parse_dimacs
from .ksp import pyen_ksp, yen_ksp
from .partition import Partition, Subgraph, partition_bfs
from .skeleton import SkeletonGraph, attach_query_vertex, build_skeleton, reference_path
from .vfrag import UnitWeightProfile, bound_distance

__all__ = [
    "DimacsError", "DtlpIndex", "Graph", "MbdTable", "Partition", "Path", "SimConfig", "SkeletonGraph",
    "Subgraph", "UnitWeightProfile", "attach_query_vertex", "bound_distance", "boundary_sequence",
    "build_compaction", "build_skeleton", "candidate_ksp", "compute_bounding_paths", "emit_dimacs",
    "estimate_epindex_elements", "ksp_dg", "lower_bound", "parse_dimacs", "partition_bfs", "pyen_ksp",
    "reference_path", "retrieve_paths", "run_simulation", "yen_ksp",
]
