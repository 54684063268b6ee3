"""Posterior summaries, distance EDA, classical MDS, minimum spanning trees
and the Friedman-Rafsky permutation test."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cycles import format_cycle
from .errors import EmptyTrace, InvalidConfig
from .metrics import DEFAULT_CACHE
from .models import SnfParams, sample_snf
from .rng import substream
from .validation import check_distance_matrix, check_labels

# ---------------------------------------------------------------------------
# posterior summaries


def _centroid_counts(trace, burn_in):
    if len(trace) == 0 or burn_in >= len(trace):
        raise EmptyTrace("trace has no draws after burn-in")
    counts = {}
    for c in trace.centroids[burn_in:]:
        counts[c] = counts.get(c, 0) + 1
    return counts, len(trace) - burn_in


def posterior_mode_centroid(trace, top_k=1, burn_in=0):
    """The ``top_k`` most frequent centroids with their posterior mass."""
    counts, total = _centroid_counts(trace, burn_in)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0].bits))
    return [(g, k / total) for g, k in ranked[:top_k]]


@dataclass(frozen=True)
class CycleTableRow:
    cycle: tuple
    proportion: float
    provenance: str

    def format(self, one_based=True):
        return f"{format_cycle(self.cycle, one_based)}, {self.proportion:.2f}, {self.provenance}"


def common_cycles(trace, data, top_k=10, burn_in=0, cache=None):
    """Cycles most often present in the posterior centroid draws.

    A cycle is ``observed`` when some data network contains it and
    ``inferred`` otherwise.
    """
    cache = cache if cache is not None else DEFAULT_CACHE
    counts, total = _centroid_counts(trace, burn_in)
    freq = {}
    for g, k in counts.items():
        for cyc in cache.get(g).cycles:
            freq[cyc] = freq.get(cyc, 0) + k
    observed = set()
    for g in data:
        observed |= cache.get(g).cycles
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], len(kv[0]), kv[0]))
    return [CycleTableRow(c, k / total, "observed" if c in observed else "inferred")
            for c, k in ranked[:top_k]]


@dataclass(frozen=True)
class TraceSummary:
    mean: float
    sd: float
    quantiles: dict
    interval: tuple
    credible_level: float
    acceptance: dict
    n_draws: int

    def to_dict(self):
        return {
            "mean": self.mean, "sd": self.sd,
            "quantiles": {str(k): v for k, v in self.quantiles.items()},
            "interval": list(self.interval), "credible_level": self.credible_level,
            "acceptance": self.acceptance, "n_draws": self.n_draws,
        }


def trace_summary(trace, burn_in=0, credible_level=0.95):
    """Mean, sd, quantiles and equal-tailed credible interval of the
    post-burn-in dispersion draws."""
    if not 0 < credible_level < 1:
        raise InvalidConfig("credible_level must lie in (0, 1)")
    x = trace.dispersion_array(burn_in)
    tail = (1 - credible_level) / 2
    probs = (0.025, 0.25, 0.5, 0.75, 0.975)
    qs = np.quantile(x, probs)
    lo, hi = np.quantile(x, (tail, 1 - tail))
    acc = {m: trace.acceptance_rate(m) for m in trace.proposed_counts() if trace.proposed_counts()[m]}
    return TraceSummary(float(x.mean()), float(x.std(ddof=1)) if len(x) > 1 else 0.0,
                        dict(zip(probs, map(float, qs))), (float(lo), float(hi)),
                        credible_level, acc, len(x))


# ---------------------------------------------------------------------------
# distance EDA


@dataclass(frozen=True)
class EdaRow:
    gamma: float
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


def eda_distance_profile(centroid, metric, gamma_grid, draws_per_gamma=100, burnin=1000, thin=10,
                         omega=None, seed=0, cache=None):
    """Quantiles of ``d(G, centroid)`` for ``G`` simulated from the SNF at each
    dispersion in ``gamma_grid``."""
    grid = [float(g) for g in gamma_grid]
    if not grid or min(grid) < 0 or draws_per_gamma < 1:
        raise InvalidConfig("gamma grid must be non-empty and non-negative, draws >= 1")
    rows = []
    for k, gamma in enumerate(grid):
        params = SnfParams(centroid, gamma, metric)
        iters = burnin + draws_per_gamma * thin
        graphs = sample_snf(params, omega, iters, burnin, thin, seed=substream(seed, "eda", k),
                            cache=cache)
        d = np.array([metric.distance(g, centroid, cache) for g in graphs])
        q = np.quantile(d, (0, 0.25, 0.5, 0.75, 1))
        rows.append(EdaRow(gamma, *map(float, q)))
    return rows


# ---------------------------------------------------------------------------
# MDS, MST, Friedman-Rafsky


def classical_mds(D, n_components=2):
    """Torgerson scaling: eigenvectors of ``-J D^2 J / 2`` scaled by the
    square roots of their (clamped) eigenvalues."""
    return ClassicalMDS(n_components).fit_transform(D)


class ClassicalMDS(BaseEstimator, TransformerMixin):
    """Classical multidimensional scaling of a precomputed distance matrix.

    Negative eigenvalues, expected for non-Euclidean distances, are clamped
    at zero. Each axis is signed so that its largest-magnitude loading is
    positive, which makes the output deterministic.
    """

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, D, y=None):
        D = check_distance_matrix(D)
        N = len(D)
        J = np.eye(N) - 1.0 / N
        B = -0.5 * J @ (D ** 2) @ J
        B = 0.5 * (B + B.T)
        vals, vecs = np.linalg.eigh(B)
        idx = np.argsort(vals)[::-1][: self.n_components]
        vals = np.clip(vals[idx], 0.0, None)
        vecs = vecs[:, idx]
        for k in range(vecs.shape[1]):
            j = int(np.argmax(np.abs(vecs[:, k])))
            if vecs[j, k] < 0:
                vecs[:, k] = -vecs[:, k]
        coords = vecs * np.sqrt(vals)[None, :]
        if coords.shape[1] < self.n_components:
            coords = np.hstack([coords, np.zeros((N, self.n_components - coords.shape[1]))])
        self.eigenvalues_ = np.concatenate([vals, np.zeros(self.n_components - len(vals))])
        self.embedding_ = coords - coords.mean(axis=0)
        return self

    def transform(self, D=None):
        check_is_fitted(self, "embedding_")
        return self.embedding_

    def fit_transform(self, D, y=None):
        return self.fit(D).embedding_


def mst(D):
    """Kruskal minimum spanning tree; equal weights are taken in (i, j)
    order. Returns ``N - 1`` edges ``(i, j)`` with ``i < j``."""
    D = check_distance_matrix(D)
    N = len(D)
    iu, ju = np.triu_indices(N, 1)
    order = np.lexsort((ju, iu, D[iu, ju]))
    parent = list(range(N))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    edges = []
    for k in order:
        a, b = find(int(iu[k])), find(int(ju[k]))
        if a != b:
            parent[b] = a
            edges.append((int(iu[k]), int(ju[k])))
            if len(edges) == N - 1:
                break
    return edges


@dataclass(frozen=True)
class FrResult:
    statistic: int
    p_value: float
    permutations: int


def friedman_rafsky(D, group_labels, n_perm=50_000, seed=0, chunk=5000):
    """Same-group MST edge count with a one-sided permutation p-value
    ``(1 + #{perm >= observed}) / (1 + n_perm)``."""
    D = check_distance_matrix(D)
    labels = check_labels(group_labels, len(D))
    if n_perm < 1000:
        raise InvalidConfig("n_perm must be >= 1000")
    _, codes = np.unique(np.asarray(labels, dtype=str), return_inverse=True)
    edges = np.asarray(mst(D), dtype=np.int64).reshape(-1, 2)
    ei, ej = edges[:, 0], edges[:, 1]
    observed = int(np.sum(codes[ei] == codes[ej]))
    rng = substream(seed, "friedman-rafsky")
    at_least = 0
    done = 0
    while done < n_perm:
        b = min(chunk, n_perm - done)
        perm = rng.permuted(np.tile(codes, (b, 1)), axis=1)
        stats = (perm[:, ei] == perm[:, ej]).sum(axis=1)
        at_least += int(np.sum(stats >= observed))
        done += b
    return FrResult(observed, (1 + at_least) / (1 + n_perm), n_perm)


# ---------------------------------------------------------------------------
# CSV output


def write_mds_csv(coords, path, ids=None, groups=None):
    coords = np.asarray(coords)
    ids = ids or [str(k + 1) for k in range(len(coords))]
    groups = groups or [""] * len(coords)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "group", "x", "y"])
        for i, g, (x, y) in zip(ids, groups, coords[:, :2]):
            w.writerow([i, g, f"{x:.12g}", f"{y:.12g}"])


def write_fr_csv(rows, path):
    """``rows``: iterable of (metric label, FrResult)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "statistic", "p_value", "permutations"])
        for label, r in rows:
            w.writerow([label, r.statistic, f"{r.p_value:.12g}", r.permutations])


def write_eda_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["gamma", "min", "q1", "median", "q3", "max"])
        for r in rows:
            w.writerow([f"{v:.12g}" for v in (r.gamma, r.minimum, r.q1, r.median, r.q3, r.maximum)])


def write_cycle_table_csv(rows, path, one_based=True):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["cycle", "proportion", "provenance"])
        for r in rows:
            w.writerow([format_cycle(r.cycle, one_based), f"{r.proportion:.4g}", r.provenance])


def format_interval(lo, hi, digits=3):
    """``(0.05, 0.096)`` style credible-interval text."""
    def fmt(x):
        return f"{x:.{digits}g}" if x != 0 and math.isfinite(x) else str(x)
    return f"({fmt(lo)}, {fmt(hi)})"
