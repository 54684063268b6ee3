"""Graph distances: Hamming, Jaccard, betweenness, cycle symmetric
difference and the Hamming plus cycle (HS) composite."""

from __future__ import annotations

import csv
import math
from collections import OrderedDict, deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .cycles import CycleCache, enumerate_cycles, symmetric_difference
from .errors import BudgetExceeded, InvalidSpec, SizeMismatch
from .graphs import (
    MAX_SPACE_N,
    LabeledGraph,
    complete_graph,
    graph_space_matrix,
    matrix_codes,
    n_pairs,
    pair_arrays,
    pair_index,
    unique_rows,
)

METRIC_KINDS = ("hamming", "jaccard", "centrality", "symmetric", "hs")
PHI_KINDS = ("identity", "sqrt", "log1p")


def _same_size(a, b):
    if a.n != b.n:
        raise SizeMismatch(a.n, b.n)


def hamming(a, b, normalized=False):
    """Edge disagreement count; ``normalized`` divides the ordered-pair
    count ``2 |a xor b|`` by ``n(n-1)``."""
    _same_size(a, b)
    raw = (a.bits ^ b.bits).bit_count()
    if not normalized:
        return raw
    if a.n < 2:
        return 0.0
    return 2.0 * raw / (a.n * (a.n - 1))


def jaccard(a, b):
    _same_size(a, b)
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 0.0
    return (a.bits ^ b.bits).bit_count() / union


def betweenness(g):
    """Unnormalised shortest-path betweenness of every node (Brandes).

    Each unordered source/target pair contributes once.
    """
    n = g.n
    nbrs = [[v for v in range(n) if (mask >> v) & 1] for mask in g.neighbor_masks]
    cb = [0.0] * n
    for s in range(n):
        stack = []
        preds = [[] for _ in range(n)]
        sigma = [0] * n
        sigma[s] = 1
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in nbrs[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    return np.asarray(cb) / 2.0


def batch_betweenness(mat, n):
    """Betweenness for every graph row of ``mat`` (compiled Brandes)."""
    mat = np.ascontiguousarray(mat, dtype=np.uint8)
    out = np.zeros((mat.shape[0], n))
    if mat.shape[0] == 0 or n < 3:
        return out
    rows, cols = pair_arrays(n)
    _kernels.brandes_batch(mat, np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64),
                           n, out)
    return out


def centrality_betweenness_distance(a, b):
    _same_size(a, b)
    return float(np.linalg.norm(betweenness(a) - betweenness(b)))


def hs(a, b, lam=1.0, hamming_normalized=True, cycles_a=None, cycles_b=None, cache=None):
    """Hamming distance plus ``lam`` times the cycle symmetric difference."""
    _same_size(a, b)
    if lam < 0:
        raise InvalidSpec("lambda must be non-negative")
    d = hamming(a, b, hamming_normalized)
    if lam == 0:
        return float(d)
    cache = cache if cache is not None else DEFAULT_CACHE
    ca = cycles_a if cycles_a is not None else cache.get(a)
    cb = cycles_b if cycles_b is not None else cache.get(b)
    ca.check(a)
    cb.check(b)
    return float(d + lam * symmetric_difference(ca, cb))


DEFAULT_CACHE = CycleCache()


_PHI = {
    "identity": lambda d: d,
    "sqrt": np.sqrt,
    "log1p": np.log1p,
}


@dataclass(frozen=True)
class MetricSpec:
    """Which distance to use and the monotone transform applied to it.

    ``kind`` is one of ``hamming``, ``jaccard``, ``centrality``,
    ``symmetric`` or ``hs``. ``normalized`` concerns the Hamming term (alone
    or inside HS); ``lam`` weights the cycle term of HS.
    """

    kind: str = "hs"
    lam: float = 1.0
    normalized: bool = True
    phi: str = "identity"

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in METRIC_KINDS:
            raise InvalidSpec(f"unknown metric {self.kind!r}")
        if self.phi not in PHI_KINDS:
            raise InvalidSpec(f"unknown phi transform {self.phi!r}")
        if not math.isfinite(self.lam) or self.lam < 0:
            raise InvalidSpec("lambda must be a non-negative finite number")

    @classmethod
    def hamming_raw(cls):
        return cls("hamming", normalized=False)

    @property
    def uses_cycles(self):
        return self.kind == "symmetric" or (self.kind == "hs" and self.lam > 0)

    def phi_fn(self, d):
        return _PHI[self.phi](d)

    def distance(self, a, b, cache=None):
        cache = cache if cache is not None else DEFAULT_CACHE
        if self.kind == "hamming":
            return float(hamming(a, b, self.normalized))
        if self.kind == "jaccard":
            return jaccard(a, b)
        if self.kind == "centrality":
            return centrality_betweenness_distance(a, b)
        if self.kind == "symmetric":
            _same_size(a, b)
            return float(symmetric_difference(cache.get(a), cache.get(b)))
        return hs(a, b, self.lam, self.normalized, cache=cache)

    def hamming_scale(self, n):
        """Factor turning a raw Hamming count into this spec's Hamming term."""
        if not self.normalized or n < 2:
            return 1.0
        return 2.0 / (n * (n - 1))

    def to_dict(self):
        return {"kind": self.kind, "lam": self.lam, "normalized": self.normalized, "phi": self.phi}


def batch_features(mat, centroid, centroid_betweenness=None, mat_betweenness=None):
    """Raw Hamming, Jaccard and betweenness distances of graph rows to one
    graph, as an ``(K, 3)`` array."""
    mat = np.asarray(mat, dtype=np.uint8)
    c = centroid.vector
    diff = (mat != c[None, :]).sum(axis=1)
    union = (mat | c[None, :]).sum(axis=1)
    jac = np.divide(diff, union, out=np.zeros(len(mat)), where=union > 0)
    if mat_betweenness is None:
        mat_betweenness = batch_betweenness(mat, centroid.n)
    if centroid_betweenness is None:
        centroid_betweenness = betweenness(centroid)
    cen = np.linalg.norm(mat_betweenness - centroid_betweenness[None, :], axis=1)
    return np.column_stack([diff.astype(float), jac, cen])


def distance_matrix(pop, spec, cache=None):
    """Symmetric pairwise distance matrix of a population."""
    graphs = list(pop.graphs if hasattr(pop, "graphs") else pop)
    n_g = len(graphs)
    if n_g == 0:
        raise InvalidSpec("population must be non-empty")
    cache = cache if cache is not None else DEFAULT_CACHE
    cycle_sets = None
    if spec.uses_cycles:
        cycle_sets = []
        for k, g in enumerate(graphs):
            try:
                cycle_sets.append(cache.get(g))
            except BudgetExceeded as exc:
                raise BudgetExceeded(exc.found_so_far, exc.reason, index=k) from exc
    btw = None
    if spec.kind == "centrality":
        btw = [betweenness(g) for g in graphs]
    D = np.zeros((n_g, n_g))
    for i in range(n_g):
        for j in range(i + 1, n_g):
            a, b = graphs[i], graphs[j]
            if spec.kind == "hamming":
                d = hamming(a, b, spec.normalized)
            elif spec.kind == "jaccard":
                d = jaccard(a, b)
            elif spec.kind == "centrality":
                d = float(np.linalg.norm(btw[i] - btw[j]))
            elif spec.kind == "symmetric":
                d = symmetric_difference(cycle_sets[i], cycle_sets[j])
            else:
                d = hamming(a, b, spec.normalized)
                if spec.lam > 0:
                    d = d + spec.lam * symmetric_difference(cycle_sets[i], cycle_sets[j])
            D[i, j] = D[j, i] = d
    return D


def write_distance_matrix(D, path, ids=None):
    ids = list(ids) if ids is not None else [str(k + 1) for k in range(len(D))]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(ids)
        for row in np.asarray(D):
            w.writerow([f"{x:.12g}" for x in row])


def read_distance_matrix(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    ids = rows[0]
    D = np.array([[float(x) for x in r] for r in rows[1:]])
    return ids, D


# ---------------------------------------------------------------------------
# batched distances to one graph


@lru_cache(maxsize=None)
def space_cycle_table(n):
    """Every simple cycle on ``n`` nodes and, for each graph code, which of
    those cycles it contains (``(2**M, C)`` bool)."""
    mat = graph_space_matrix(n)
    universe = sorted(enumerate_cycles(complete_graph(n)).cycles, key=lambda c: (len(c), c))
    m = n_pairs(n)
    cmasks = []
    for cyc in universe:
        mask = 0
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            mask |= 1 << (m - 1 - pair_index(a, b, n))
        cmasks.append(mask)
    codes = np.arange(len(mat), dtype=np.int64)
    cm = np.asarray(cmasks, dtype=np.int64)
    contains = (codes[:, None] & cm[None, :]) == cm[None, :]
    contains.setflags(write=False)
    return tuple(universe), contains


class BatchDistance:
    """Distances from many graphs (rows of a 0/1 matrix) to one graph.

    For ``n <= 6`` the distance from every graph in the space to a given
    centroid is tabulated once and then indexed by graph code. Larger graphs
    are deduplicated and their cycle sets drawn from ``cache``.
    """

    def __init__(self, spec, n, cache=None, table_max_n=MAX_SPACE_N, max_tables=4096):
        self.spec = spec
        self.n = n
        self.cache = cache if cache is not None else DEFAULT_CACHE
        self.use_table = n <= table_max_n
        self.max_tables = max_tables
        self._tables = OrderedDict()

    def table(self, centroid):
        key = centroid.bits
        tab = self._tables.get(key)
        if tab is not None:
            self._tables.move_to_end(key)
            return tab
        space = graph_space_matrix(self.n)
        c = centroid.vector
        spec = self.spec
        raw = (space != c[None, :]).sum(axis=1)
        if spec.kind == "hamming":
            tab = raw * spec.hamming_scale(self.n)
        elif spec.kind == "jaccard":
            union = (space | c[None, :]).sum(axis=1)
            tab = np.divide(raw, union, out=np.zeros(len(space)), where=union > 0)
        elif spec.kind == "centrality":
            tab = batch_features(space, centroid)[:, 2]
        else:
            _, contains = space_cycle_table(self.n)
            sym = (contains != contains[centroid.bits][None, :]).sum(axis=1)
            if spec.kind == "symmetric":
                tab = sym.astype(float)
            else:
                tab = raw * spec.hamming_scale(self.n) + spec.lam * sym
        tab = np.asarray(tab, dtype=float)
        tab.setflags(write=False)
        self._tables[key] = tab
        if len(self._tables) > self.max_tables:
            self._tables.popitem(last=False)
        return tab

    def __call__(self, mat, centroid):
        mat = np.asarray(mat, dtype=np.uint8)
        if self.use_table:
            return self.table(centroid)[matrix_codes(mat)]
        spec = self.spec
        if spec.kind in ("jaccard", "centrality"):
            uniq, inv = unique_rows(mat)
            feats = batch_features(uniq, centroid)
            return feats[inv, 1 if spec.kind == "jaccard" else 2]
        raw = (mat != centroid.vector[None, :]).sum(axis=1)
        ham = raw * spec.hamming_scale(self.n)
        if spec.kind == "hamming":
            return ham.astype(float)
        sym = self.cycle_symmetric_difference(mat, centroid)
        if spec.kind == "symmetric":
            return sym
        return ham + spec.lam * sym

    def cycle_symmetric_difference(self, mat, centroid):
        uniq, inv = unique_rows(mat)
        cc = self.cache.get(centroid)
        vals = np.empty(len(uniq))
        for k, row in enumerate(uniq):
            g = LabeledGraph.from_vector(self.n, row)
            try:
                vals[k] = symmetric_difference(self.cache.get(g), cc)
            except BudgetExceeded as exc:
                raise BudgetExceeded(exc.found_so_far, exc.reason, index=int(np.flatnonzero(inv == k)[0])) from exc
        return vals[inv]
