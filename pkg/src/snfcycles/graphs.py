"""Undirected simple graphs on a shared node set, populations and generators.

A graph on ``n`` nodes is stored as an ``M = n(n-1)/2`` bit integer over the
lexicographic pair order ``(0,1), (0,2), ..., (n-2,n-1)``, with the first pair
in the most significant bit.  That integer doubles as the graph fingerprint
and as its position in :func:`graph_space`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

from .errors import (
    DuplicateEdge,
    InvalidSpec,
    NodeOutOfRange,
    ParseError,
    SchemaMismatch,
    SelfLoop,
    SpaceTooLarge,
)
from .rng import substream

MAX_SPACE_N = 6


def n_pairs(n):
    return n * (n - 1) // 2


@lru_cache(maxsize=None)
def pair_arrays(n):
    """Row and column index arrays of the ``M`` node pairs, lexicographic."""
    iu = np.triu_indices(n, k=1)
    rows = iu[0].astype(np.int64)
    cols = iu[1].astype(np.int64)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def pair_index(i, j, n):
    if i > j:
        i, j = j, i
    return i * n - i * (i + 1) // 2 + (j - i - 1)


@lru_cache(maxsize=None)
def _pair_list(n):
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


class LabeledGraph:
    """Immutable undirected graph without self-loops on nodes ``0..n-1``."""

    __slots__ = ("n", "bits", "_vec", "_nbr", "_edges")

    def __init__(self, n, bits=0):
        m = n_pairs(n)
        if n < 1:
            raise InvalidSpec("node count must be positive")
        if bits < 0 or bits >> m:
            raise InvalidSpec(f"edge bitmask does not fit {m} pairs")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "bits", int(bits))
        object.__setattr__(self, "_vec", None)
        object.__setattr__(self, "_nbr", None)
        object.__setattr__(self, "_edges", None)

    def __setattr__(self, name, value):
        raise AttributeError("LabeledGraph is immutable")

    @classmethod
    def from_vector(cls, n, vec):
        vec = np.asarray(vec, dtype=np.uint8)
        m = n_pairs(n)
        if vec.shape != (m,):
            raise InvalidSpec(f"edge vector must have length {m}")
        if m == 0:
            return cls(n, 0)
        pad = (-m) % 8
        bits = int.from_bytes(np.packbits(vec).tobytes(), "big") >> pad
        return cls(n, bits)

    @classmethod
    def from_adjacency(cls, adj):
        adj = np.asarray(adj)
        n = adj.shape[0]
        if adj.shape != (n, n):
            raise InvalidSpec("adjacency must be square")
        if np.any(np.diag(adj)):
            raise SelfLoop(int(np.flatnonzero(np.diag(adj))[0]))
        if not np.array_equal(adj, adj.T):
            raise InvalidSpec("adjacency must be symmetric")
        rows, cols = pair_arrays(n)
        return cls.from_vector(n, adj[rows, cols] != 0)

    @property
    def n_pairs(self):
        return n_pairs(self.n)

    @property
    def vector(self):
        """Read-only uint8 edge indicator over the lexicographic pairs."""
        if self._vec is None:
            m = self.n_pairs
            nbytes = (m + 7) // 8
            if m == 0:
                vec = np.zeros(0, dtype=np.uint8)
            else:
                raw = np.frombuffer(self.bits.to_bytes(nbytes, "big"), dtype=np.uint8)
                vec = np.unpackbits(raw)[nbytes * 8 - m:].copy()
            vec.setflags(write=False)
            object.__setattr__(self, "_vec", vec)
        return self._vec

    @property
    def edges(self):
        if self._edges is None:
            pairs = _pair_list(self.n)
            edges = tuple(pairs[k] for k in np.flatnonzero(self.vector))
            object.__setattr__(self, "_edges", edges)
        return self._edges

    @property
    def num_edges(self):
        return self.bits.bit_count()

    @property
    def neighbor_masks(self):
        """Per-node neighbour sets as integer bitmasks (bit ``v`` = node ``v``)."""
        if self._nbr is None:
            nbr = [0] * self.n
            for i, j in self.edges:
                nbr[i] |= 1 << j
                nbr[j] |= 1 << i
            object.__setattr__(self, "_nbr", tuple(nbr))
        return self._nbr

    def adjacency(self, dtype=np.uint8):
        adj = np.zeros((self.n, self.n), dtype=dtype)
        rows, cols = pair_arrays(self.n)
        vec = self.vector.astype(bool)
        adj[rows[vec], cols[vec]] = 1
        adj[cols[vec], rows[vec]] = 1
        return adj

    def has_edge(self, i, j):
        if i == j:
            return False
        return bool((self.bits >> (self.n_pairs - 1 - pair_index(i, j, self.n))) & 1)

    @property
    def fingerprint(self):
        return (self.n, self.bits)

    @property
    def fingerprint_hex(self):
        width = max(1, (self.n_pairs + 3) // 4)
        return format(self.bits, f"0{width}x")

    def with_edge_toggled(self, i, j):
        k = pair_index(i, j, self.n)
        return LabeledGraph(self.n, self.bits ^ (1 << (self.n_pairs - 1 - k)))

    def intersection(self, other):
        return LabeledGraph(self.n, self.bits & other.bits)

    def __eq__(self, other):
        if not isinstance(other, LabeledGraph):
            return NotImplemented
        return self.n == other.n and self.bits == other.bits

    def __lt__(self, other):
        return (self.n, self.bits) < (other.n, other.bits)

    def __hash__(self):
        return hash((self.n, self.bits))

    def __repr__(self):
        return f"LabeledGraph(n={self.n}, edges={list(self.edges)})"

    def __reduce__(self):
        return (LabeledGraph, (self.n, self.bits))


def make_graph(n, edges):
    """Build a canonical graph, rejecting self-loops, bad nodes and duplicates."""
    if n < 1:
        raise InvalidSpec("node count must be positive")
    m = n_pairs(n)
    seen = set()
    bits = 0
    for e in edges:
        i, j = int(e[0]), int(e[1])
        for v in (i, j):
            if v < 0 or v >= n:
                raise NodeOutOfRange(v, n)
        if i == j:
            raise SelfLoop(i)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdge(*key)
        seen.add(key)
        bits |= 1 << (m - 1 - pair_index(key[0], key[1], n))
    return LabeledGraph(n, bits)


def empty_graph(n):
    return LabeledGraph(n, 0)


def complete_graph(n):
    return LabeledGraph(n, (1 << n_pairs(n)) - 1)


def graph_space(n):
    """Every graph on ``n`` nodes, ordered by ascending fingerprint."""
    if n > MAX_SPACE_N:
        raise SpaceTooLarge(n, MAX_SPACE_N)
    if n < 1:
        raise InvalidSpec("node count must be positive")
    return [LabeledGraph(n, b) for b in range(1 << n_pairs(n))]


@lru_cache(maxsize=None)
def graph_space_matrix(n):
    """``(2**M, M)`` uint8 matrix whose row ``c`` is the graph with code ``c``."""
    if n > MAX_SPACE_N:
        raise SpaceTooLarge(n, MAX_SPACE_N)
    m = n_pairs(n)
    codes = np.arange(1 << m, dtype=np.int64)
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    mat = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    mat.setflags(write=False)
    return mat


def graphs_to_matrix(graphs, n=None):
    graphs = list(graphs)
    if n is None:
        if not graphs:
            raise InvalidSpec("cannot infer node count from no graphs")
        n = graphs[0].n
    out = np.zeros((len(graphs), n_pairs(n)), dtype=np.uint8)
    for k, g in enumerate(graphs):
        out[k] = g.vector
    return out


def matrix_codes(mat):
    """Integer codes of graph rows; only valid while ``M <= 62``."""
    m = mat.shape[1]
    if m > 62:
        raise SpaceTooLarge(-1)
    weights = (np.int64(1) << np.arange(m - 1, -1, -1, dtype=np.int64))
    return mat.astype(np.int64) @ weights


def unique_rows(mat):
    """Unique graph rows and the inverse map, deterministic order."""
    if mat.shape[1] <= 62:
        codes = matrix_codes(mat)
        uniq, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
        return mat[first], inverse.reshape(-1)
    packed = np.packbits(mat, axis=1)
    uniq, first, inverse = np.unique(packed, axis=0, return_index=True, return_inverse=True)
    return mat[first], inverse.reshape(-1)


# ---------------------------------------------------------------------------
# populations and I/O


@dataclass(frozen=True)
class NetworkPopulation:
    """Ordered, non-empty list of graphs sharing ``n`` nodes.

    ``labels`` are display names for nodes; ``groups`` optionally tags each
    network with a generating model or site.
    """

    n: int
    graphs: tuple
    labels: Optional[tuple] = None
    groups: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
            if len(self.labels) != self.n:
                raise SchemaMismatch(f"expected {self.n} labels, got {len(self.labels)}")
        if self.groups is not None:
            object.__setattr__(self, "groups", tuple(str(s) for s in self.groups))
            if len(self.groups) != len(self.graphs):
                raise SchemaMismatch("one group tag per network required")
        if not self.graphs:
            raise SchemaMismatch("population must contain at least one network")
        for k, g in enumerate(self.graphs):
            if not isinstance(g, LabeledGraph):
                raise SchemaMismatch(f"network {k} is not a LabeledGraph")
            if g.n != self.n:
                raise SchemaMismatch(f"network {k} has {g.n} nodes, expected {self.n}")

    def __len__(self):
        return len(self.graphs)

    def __iter__(self) -> Iterator[LabeledGraph]:
        return iter(self.graphs)

    def __getitem__(self, k):
        return self.graphs[k]

    def matrix(self):
        return graphs_to_matrix(self.graphs, self.n)

    def edge_frequencies(self):
        return self.matrix().mean(axis=0)


def population_to_dict(pop):
    obj = {"n": pop.n}
    if pop.labels is not None:
        obj["labels"] = list(pop.labels)
    obj["networks"] = [[[i + 1, j + 1] for i, j in g.edges] for g in pop.graphs]
    if pop.groups is not None:
        obj["groups"] = list(pop.groups)
    return obj


def dumps_population(pop):
    obj = population_to_dict(pop)
    lines = ["{", f'  "n": {obj["n"]},']
    if "labels" in obj:
        lines.append(f'  "labels": {json.dumps(obj["labels"])},')
    if "groups" in obj:
        lines.append(f'  "groups": {json.dumps(obj["groups"])},')
    nets = [json.dumps(net, separators=(",", ":")) for net in obj["networks"]]
    lines.append('  "networks": [')
    lines.append(",\n".join("    " + s for s in nets))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def population_from_dict(obj):
    if not isinstance(obj, dict):
        raise ParseError("top-level JSON value must be an object")
    for key in ("n", "networks"):
        if key not in obj:
            raise ParseError("missing required key", field=key)
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError("n must be a positive integer", field="n")
    nets = obj["networks"]
    if not isinstance(nets, list):
        raise ParseError("networks must be a list", field="networks")
    graphs = []
    for k, net in enumerate(nets):
        if not isinstance(net, list):
            raise ParseError(f"network {k} must be a list of edges", field="networks")
        edges = []
        for e in net:
            if (not isinstance(e, list) or len(e) != 2
                    or not all(isinstance(v, int) and not isinstance(v, bool) for v in e)):
                raise ParseError(f"network {k}: edge must be a pair of integers", field="networks")
            i, j = e[0] - 1, e[1] - 1
            if not (0 <= i < n and 0 <= j < n):
                raise SchemaMismatch(f"network {k}: edge {e} outside nodes 1..{n}")
            edges.append((i, j))
        try:
            graphs.append(make_graph(n, edges))
        except (SelfLoop, DuplicateEdge) as exc:
            raise SchemaMismatch(f"network {k}: {exc}") from exc
    return NetworkPopulation(n, tuple(graphs), obj.get("labels"), obj.get("groups"))


def read_population(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    return population_from_dict(obj)


def write_population(pop, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_population(pop))


def read_edge_csv(path, n=None):
    """Import a ``graph_id,u,v`` CSV with 1-based nodes.

    Graph ids keep first-appearance order. ``n`` defaults to the largest node
    seen.
    """
    order = []
    edges = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"graph_id", "u", "v"} <= set(reader.fieldnames):
            raise ParseError("CSV header must contain graph_id,u,v", line=1)
        for lineno, row in enumerate(reader, start=2):
            try:
                u, v = int(row["u"]), int(row["v"])
            except (TypeError, ValueError) as exc:
                raise ParseError("u and v must be integers", line=lineno) from exc
            gid = row["graph_id"]
            if gid not in edges:
                edges[gid] = []
                order.append(gid)
            edges[gid].append((u - 1, v - 1))
    if not order:
        raise SchemaMismatch("CSV contains no edges")
    if n is None:
        n = max(max(u, v) for es in edges.values() for u, v in es) + 1
    graphs = []
    for gid in order:
        for u, v in edges[gid]:
            if not (0 <= u < n and 0 <= v < n):
                raise SchemaMismatch(f"graph {gid}: node outside 1..{n}")
        graphs.append(make_graph(n, edges[gid]))
    return NetworkPopulation(n, tuple(graphs))


# ---------------------------------------------------------------------------
# random generators


@dataclass(frozen=True)
class GeneratorSpec:
    """Random-graph model description.

    ``variant`` is ``"er"`` (uses ``p``), ``"pa"`` (uses ``power``) or
    ``"sbm"`` (uses ``block_sizes`` and ``block_probs``).
    """

    variant: str
    n: int
    p: float = 0.1
    power: float = 1.0
    block_sizes: tuple = ()
    block_probs: tuple = ()
    target_density: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        v = self.variant.lower()
        object.__setattr__(self, "variant", v)
        if self.n < 1:
            raise InvalidSpec("n must be positive")
        if v == "er":
            if not 0.0 <= self.p <= 1.0:
                raise InvalidSpec(f"ER probability {self.p} outside [0, 1]")
        elif v == "pa":
            if self.power < 0 or not math.isfinite(self.power):
                raise InvalidSpec("PA power must be a non-negative finite number")
        elif v == "sbm":
            sizes = tuple(int(s) for s in self.block_sizes)
            probs = tuple(tuple(float(x) for x in row) for row in self.block_probs)
            object.__setattr__(self, "block_sizes", sizes)
            object.__setattr__(self, "block_probs", probs)
            if not sizes or any(s < 1 for s in sizes) or sum(sizes) != self.n:
                raise InvalidSpec("SBM block sizes must be positive and sum to n")
            P = np.asarray(probs, dtype=float)
            if P.shape != (len(sizes), len(sizes)):
                raise InvalidSpec("SBM probability matrix must be square, one row per block")
            if not np.allclose(P, P.T):
                raise InvalidSpec("SBM probability matrix must be symmetric")
            if np.any(P < 0) or np.any(P > 1):
                raise InvalidSpec("SBM probabilities must lie in [0, 1]")
        else:
            raise InvalidSpec(f"unknown generator variant {self.variant!r}")
        if self.target_density is not None and not 0.0 < self.target_density < 1.0:
            raise InvalidSpec("target density must lie in (0, 1)")

    def pair_probabilities(self):
        rows, cols = pair_arrays(self.n)
        if self.variant == "er":
            return np.full(rows.shape, self.p)
        if self.variant == "sbm":
            block = np.repeat(np.arange(len(self.block_sizes)), self.block_sizes)
            P = np.asarray(self.block_probs)
            return P[block[rows], block[cols]]
        return None

    def target_edges(self):
        if self.target_density is None:
            return None
        return int(math.floor(self.target_density * n_pairs(self.n) + 0.5))


def _draw_pa(n, power, rng):
    vec = np.zeros(n_pairs(n), dtype=np.uint8)
    deg = np.zeros(n, dtype=float)
    for v in range(1, n):
        w = deg[:v] ** power if power > 0 else np.ones(v)
        total = w.sum()
        probs = w / total if total > 0 else np.full(v, 1.0 / v)
        u = int(rng.choice(v, p=probs))
        vec[pair_index(u, v, n)] = 1
        deg[u] += 1
        deg[v] += 1
    return vec


def _repair_density(vec, target, support, rng):
    have = int(vec.sum())
    if have > target:
        on = np.flatnonzero(vec)
        drop = rng.choice(on, size=have - target, replace=False)
        vec[drop] = 0
    elif have < target:
        cand = np.flatnonzero((vec == 0) & support)
        if cand.size < target - have:
            raise InvalidSpec("model support too small to reach the target density")
        add = rng.choice(cand, size=target - have, replace=False)
        vec[add] = 1
    return vec


def draw_graph(spec, index=0):
    """One graph from ``spec``; a pure function of ``(spec, index)``."""
    rng = substream(spec.seed, f"generate:{spec.variant}", index)
    m = n_pairs(spec.n)
    probs = spec.pair_probabilities()
    if spec.variant == "pa":
        vec = _draw_pa(spec.n, spec.power, rng)
        support = np.ones(m, dtype=bool)
    else:
        vec = (rng.random(m) < probs).astype(np.uint8)
        support = probs > 0
    target = spec.target_edges()
    if target is not None:
        vec = _repair_density(vec, target, support, rng)
    return LabeledGraph.from_vector(spec.n, vec)


def generate(spec, count):
    if count < 1:
        raise InvalidSpec("count must be positive")
    graphs = tuple(draw_graph(spec, k) for k in range(count))
    return NetworkPopulation(spec.n, graphs)


def concat_populations(pops, groups=None):
    pops = list(pops)
    n = pops[0].n
    graphs = [g for p in pops for g in p.graphs]
    tags = None
    if groups is not None:
        tags = [t for p, t in zip(pops, groups) for _ in p.graphs]
    return NetworkPopulation(n, tuple(graphs), pops[0].labels, tags)


DEFAULT_SBM_PROBS = ((0.2, 0.01), (0.01, 0.3))


def default_spec(variant, n, density=None, seed=0):
    """The ER (p=0.1), PA (power 1) and two-block SBM settings used for
    metric comparisons."""
    if variant == "sbm":
        half = n // 2
        return GeneratorSpec("sbm", n, block_sizes=(half, n - half), block_probs=DEFAULT_SBM_PROBS,
                             target_density=density, seed=seed)
    return GeneratorSpec(variant, n, p=0.1, power=1.0, target_density=density, seed=seed)


def benchmark_corpus(seed=0, n=20, per_group=10, density=0.1, variants=("er", "pa", "sbm")):
    """``per_group`` networks from each default model, tagged by model."""
    pops = [generate(default_spec(v, n, density, seed * 1000 + k + 1), per_group)
            for k, v in enumerate(variants)]
    return concat_populations(pops, list(variants))
