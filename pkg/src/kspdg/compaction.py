"""Edge -> bounding-path index and its prefix-tree compaction.

Pipeline for one subgraph: inverted index (EBP-II) -> path x edge matrix ->
MinHash signatures -> LSH banding of edges into groups -> one modified
prefix tree (MPTree) per group -> all trees merged under a global root
(G-MPTree). ``retrieve_paths`` answers "which bounding paths contain edge e"
from the merged tree.
"""

from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np


def build_ebp(paths) -> dict[int, list[int]]:
    """Inverted index edge id -> ascending path ids. ``paths`` yields objects with ``id`` and ``edges``."""
    ebp: dict[int, set[int]] = defaultdict(set)
    for p in paths:
        for e in p.edges:
            ebp[e].add(p.id)
    return {e: sorted(ids) for e, ids in sorted(ebp.items())}


@dataclass
class PeMatrix:
    path_ids: list[int]
    edge_ids: list[int]
    data: np.ndarray  # rows = paths, cols = edges

    @classmethod
    def from_ebp(cls, ebp) -> PeMatrix:
        edge_ids = sorted(ebp)
        path_ids = sorted({p for lst in ebp.values() for p in lst})
        row = {p: i for i, p in enumerate(path_ids)}
        data = np.zeros((len(path_ids), len(edge_ids)), dtype=np.uint8)
        for j, e in enumerate(edge_ids):
            for p in ebp[e]:
                data[row[p], j] = 1
        return cls(path_ids, edge_ids, data)

    def column(self, e) -> list[int]:
        j = self.edge_ids.index(e)
        return [self.path_ids[i] for i in np.flatnonzero(self.data[:, j])]


@dataclass
class SigMatrix:
    edge_ids: list[int]
    data: np.ndarray  # h x d
    c: int

    @property
    def h(self):
        return self.data.shape[0]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def first_primes(count: int) -> list[int]:
    out, n = [], 2
    while len(out) < count:
        if is_prime(n):
            out.append(n)
        n += 1
    return out


def next_prime(n: int) -> int:
    while not is_prime(n):
        n += 1
    return n


def default_hashes(rows: int, h: int = 20) -> list[tuple[int, int]]:
    """``h_i(r) = (a_i * r + 1) mod c`` with ``a_i`` the first ``h`` primes.

    ``c`` is the smallest prime that is at least the row count and larger
    than every ``a_i``, so each ``h_i`` is a bijection on the row numbers.
    """
    a = first_primes(h)
    c = next_prime(max(rows, a[-1] + 1))
    return [(ai, c) for ai in a]


def minhash_signatures(m: PeMatrix, hashes) -> SigMatrix:
    """MinHash by row scan. ``c`` should be prime for good hashing, but any ``c >= rows`` is accepted."""
    rows = m.data.shape[0]
    cs = {c for _, c in hashes}
    if len(cs) != 1:
        raise ValueError("all hash functions must share the modulus c")
    c = cs.pop()
    if c < rows:
        raise ValueError(f"modulus c={c} smaller than row count {rows}")
    a = np.array([ai for ai, _ in hashes], dtype=np.int64)
    if len(set(a.tolist())) != len(a):
        raise ValueError("hash multipliers must be distinct")
    r = np.arange(rows, dtype=np.int64)
    hashed = (a[:, None] * r[None, :] + 1) % c  # h x rows
    sig = np.full((len(a), len(m.edge_ids)), c, dtype=np.int64)
    for i in range(rows):
        cols = np.flatnonzero(m.data[i])
        if cols.size:
            sig[:, cols] = np.minimum(sig[:, cols], hashed[:, i : i + 1])
    return SigMatrix(list(m.edge_ids), sig, c)


def signature_similarity(sig: SigMatrix, j1: int, j2: int) -> float:
    return float(np.mean(sig.data[:, j1] == sig.data[:, j2]))


def lsh_group(sig: SigMatrix, b: int) -> list[list[int]]:
    """Group edges whose signature columns agree on at least one band (transitively)."""
    h = sig.h
    if b < 1 or h % b:
        raise ValueError(f"band count b={b} must divide h={h}")
    r = h // b
    d = len(sig.edge_ids)
    parent = list(range(d))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for band in range(b):
        buckets: dict[tuple, int] = {}
        block = sig.data[band * r : (band + 1) * r]
        for j in range(d):
            key = tuple(block[:, j].tolist())
            if key in buckets:
                ra, rb = find(buckets[key]), find(j)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            else:
                buckets[key] = j
    groups: dict[int, list[int]] = defaultdict(list)
    for j in range(d):
        groups[find(j)].append(sig.edge_ids[j])
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


class Node:
    __slots__ = ("label", "parent", "children", "tails")

    def __init__(self, label, parent=None):
        self.label = label
        self.parent = parent
        self.children: dict[int, Node] = {}
        self.tails: list[Tail] = []


class Tail:
    __slots__ = ("edge", "size", "parent")

    def __init__(self, edge, size, parent):
        self.edge = edge
        self.size = size
        self.parent = parent


def _preorder(root):
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(list(node.children.values())))


class MPTree:
    """Prefix tree over one LSH group. ``registry`` maps edge id -> its tail node."""

    def __init__(self):
        self.root = Node(None)
        self.registry: dict[int, Tail] = {}

    def nodes(self):
        return (n for n in _preorder(self.root) if n is not self.root)

    def _longest_match(self, seq):
        best_len, best_end = 0, self.root
        first = seq[0]
        for node in self.nodes():
            if node.label != first:
                continue
            m, cur = 1, node
            while m < len(seq) and seq[m] in cur.children:
                cur = cur.children[seq[m]]
                m += 1
            if m > best_len:
                best_len, best_end = m, cur
                if m == len(seq):
                    break
        return best_len, best_end

    def insert(self, edge, seq):
        cur = self.root
        if seq:
            matched, cur = self._longest_match(seq)
            for label in seq[matched:]:
                node = Node(label, cur)
                cur.children[label] = node
                cur = node
        tail = Tail(edge, len(seq), cur)
        cur.tails.append(tail)
        self.registry[edge] = tail
        return tail


def path_frequencies(ebp) -> Counter:
    return Counter(p for lst in ebp.values() for p in lst)


def build_mptree(group, ebp, freq: Counter | None = None) -> MPTree:
    if not group:
        raise ValueError("empty edge group")
    freq = path_frequencies(ebp) if freq is None else freq
    tree = MPTree()
    for e in sorted(group):
        seq = sorted(ebp.get(e, ()), key=lambda p: (-freq[p], p))
        tree.insert(e, seq)
    return tree


class GMPTree:
    def __init__(self, trees):
        self.root = Node(None)
        self.groups: list[MPTree] = []
        self.registry: dict[int, tuple[int, Tail]] = {}
        for gi, tree in enumerate(trees):
            for e, tail in tree.registry.items():
                if e in self.registry:
                    raise ValueError(f"edge {e} appears in more than one group")
                self.registry[e] = (gi, tail)
            tree.root.parent = self.root
            self.groups.append(tree)

    def __contains__(self, e):
        return e in self.registry

    def node_count(self) -> int:
        return sum(1 for t in self.groups for _ in t.nodes())

    def tail_count(self) -> int:
        return len(self.registry)


def merge_gmptree(trees) -> GMPTree:
    return GMPTree(trees)


def retrieve_paths(t: GMPTree, e: int) -> frozenset[int]:
    try:
        _, tail = t.registry[e]
    except KeyError:
        raise LookupError(f"edge {e} not registered in the tree") from None
    out = []
    node = tail.parent
    for _ in range(tail.size):
        out.append(node.label)
        node = node.parent
    return frozenset(out)


def compaction_report(t: GMPTree, ebp) -> dict:
    elements = sum(len(v) for v in ebp.values())
    nodes = t.node_count()
    return {
        "node_count": nodes,
        "tail_count": t.tail_count(),
        "element_count": elements,
        "ratio": nodes / elements if elements else 1.0,
    }


def dump_tree(t: GMPTree) -> str:
    lines = []

    def walk(node, depth):
        for tail in node.tails:
            lines.append("  " * depth + f"tail:{tail.edge},{tail.size}")
        for child in node.children.values():
            lines.append("  " * depth + f"path:{child.label}")
            walk(child, depth + 1)

    for gi, tree in enumerate(t.groups):
        lines.append(f"group:{gi}")
        walk(tree.root, 1)
    return "\n".join(lines) + "\n"


@dataclass
class Compaction:
    ebp: dict
    tree: GMPTree
    groups: list
    c: int

    def report(self) -> dict:
        out = compaction_report(self.tree, self.ebp)
        out["groups"] = len(self.groups)
        out["c"] = self.c
        return out


def build_compaction(paths, h: int = 20, b: int = 2) -> Compaction:
    """Run the whole EBP-II -> G-MPTree pipeline over one subgraph's bounding paths."""
    ebp = build_ebp(paths)
    if not ebp:
        return Compaction(ebp, GMPTree([]), [], 0)
    pe = PeMatrix.from_ebp(ebp)
    hashes = default_hashes(len(pe.path_ids), h)
    sig = minhash_signatures(pe, hashes)
    groups = lsh_group(sig, b)
    freq = path_frequencies(ebp)
    trees = [build_mptree(g, ebp, freq) for g in groups]
    return Compaction(ebp, merge_gmptree(trees), groups, hashes[0][1])


def write_report_csv(rows, out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["sg", "node_count", "tail_count", "element_count", "ratio", "groups", "c"])
    for sid, r in rows:
        w.writerow([sid, r["node_count"], r["tail_count"], r["element_count"], f"{r['ratio']:.6f}", r["groups"], r["c"]])
