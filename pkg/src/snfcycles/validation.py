"""Input coercion and checks shared by the estimators and analysis code."""

import numpy as np

from .errors import InvalidConfig, LabelMismatch, NotSymmetric, SchemaMismatch
from .graphs import LabeledGraph, NetworkPopulation, n_pairs


def check_population(X, n=None, allow_empty=False):
    """Coerce ``X`` into a :class:`NetworkPopulation` (or a tuple of graphs
    when ``allow_empty`` and ``X`` is empty).

    Accepts a population, a sequence of :class:`LabeledGraph`, an
    ``(N, n, n)`` stack of adjacency matrices or an ``(N, n(n-1)/2)`` 0/1
    pair matrix (then ``n`` is required).
    """
    if isinstance(X, NetworkPopulation):
        if n is not None and X.n != n:
            raise SchemaMismatch(f"population has n={X.n}, expected {n}")
        return X
    if isinstance(X, (list, tuple)) and all(isinstance(g, LabeledGraph) for g in X):
        if not X:
            if allow_empty:
                return ()
            raise SchemaMismatch("population must contain at least one network")
        return NetworkPopulation(X[0].n if n is None else n, tuple(X))
    arr = np.asarray(X)
    if arr.size == 0 and allow_empty:
        return ()
    if arr.ndim == 3:
        if arr.shape[1] != arr.shape[2]:
            raise SchemaMismatch("adjacency stack must have shape (N, n, n)")
        graphs = tuple(LabeledGraph.from_adjacency(a) for a in arr)
        return NetworkPopulation(arr.shape[1], graphs)
    if arr.ndim == 2:
        if n is None:
            m = arr.shape[1]
            n = int(round((1 + np.sqrt(1 + 8 * m)) / 2))
        if n_pairs(n) != arr.shape[1]:
            raise SchemaMismatch(f"pair matrix has {arr.shape[1]} columns, expected {n_pairs(n)}")
        if not np.isin(arr, (0, 1)).all():
            raise SchemaMismatch("pair matrix entries must be 0 or 1")
        graphs = tuple(LabeledGraph.from_vector(n, row) for row in arr.astype(np.uint8))
        return NetworkPopulation(n, graphs)
    raise SchemaMismatch("cannot interpret input as a network population")


def check_distance_matrix(D, tol=1e-9):
    """Square, finite, symmetric, zero-diagonal float matrix."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise NotSymmetric("distance matrix must be square")
    if not np.all(np.isfinite(D)):
        raise NotSymmetric("distance matrix has non-finite entries")
    scale = max(1.0, float(np.abs(D).max(initial=0.0)))
    if not np.allclose(D, D.T, atol=tol * scale, rtol=0):
        raise NotSymmetric("distance matrix is not symmetric")
    if np.any(np.abs(np.diag(D)) > tol * scale):
        raise NotSymmetric("distance matrix diagonal must be zero")
    return D


def check_labels(labels, size):
    labels = list(labels)
    if len(labels) != size:
        raise LabelMismatch(f"expected {size} labels, got {len(labels)}")
    return labels


def check_probability(p, name, low=0.0, high=1.0, open_low=False, open_high=False):
    ok_low = p > low if open_low else p >= low
    ok_high = p < high if open_high else p <= high
    if not (np.isfinite(p) and ok_low and ok_high):
        raise InvalidConfig(f"{name}={p} outside the allowed range")
    return float(p)
