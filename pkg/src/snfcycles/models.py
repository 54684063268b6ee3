"""Spherical network family (SNF) and centred Erdos-Renyi (CER) models:
densities, exact partition functions for small graphs, and MH samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .errors import InvalidConfig, OutOfRange, SizeMismatch, SpaceTooLarge
from .graphs import (
    MAX_SPACE_N,
    LabeledGraph,
    graph_space_matrix,
    matrix_codes,
    n_pairs,
)
from .metrics import DEFAULT_CACHE, BatchDistance, MetricSpec
from .rng import substream


@dataclass(frozen=True)
class SnfParams:
    centroid: LabeledGraph
    gamma: float
    metric: MetricSpec = field(default_factory=MetricSpec)

    def __post_init__(self):
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise InvalidConfig("gamma must be a finite non-negative number")


@dataclass(frozen=True)
class CerParams:
    centroid: LabeledGraph
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise InvalidConfig(f"CER alpha {self.alpha} outside (0, 0.5)")

    @property
    def log_odds(self):
        return math.log(self.alpha) - math.log1p(-self.alpha)


def snf_log_kernel(g, params, cache=None):
    """Unnormalised SNF log density of a single graph."""
    if g.n != params.centroid.n:
        raise SizeMismatch(g.n, params.centroid.n)
    d = params.metric.distance(g, params.centroid, cache)
    return -params.gamma * float(params.metric.phi_fn(d))


def cer_log_density(g, params):
    if g.n != params.centroid.n:
        raise SizeMismatch(g.n, params.centroid.n)
    m = n_pairs(g.n)
    d = (g.bits ^ params.centroid.bits).bit_count()
    return d * math.log(params.alpha) + (m - d) * math.log1p(-params.alpha)


def cer_log_density_batch(mat, params):
    mat = np.asarray(mat, dtype=np.uint8)
    m = mat.shape[1]
    d = (mat != params.centroid.vector[None, :]).sum(axis=1)
    return d * math.log(params.alpha) + (m - d) * math.log1p(-params.alpha)


def cer_gamma_equivalent(alpha):
    """Dispersion of the SNF with raw Hamming distance that equals CER(alpha)."""
    if not 0.0 < alpha < 0.5:
        raise OutOfRange(f"alpha {alpha} outside (0, 0.5)")
    return math.log1p(-alpha) - math.log(alpha)


_evaluators = {}


def batch_distance_for(metric, n, cache=None):
    """Shared :class:`BatchDistance` per (metric, n) for the default cache."""
    if cache is not None and cache is not DEFAULT_CACHE:
        return BatchDistance(metric, n, cache)
    key = (metric, n)
    ev = _evaluators.get(key)
    if ev is None:
        ev = _evaluators[key] = BatchDistance(metric, n)
    return ev


def snf_log_kernel_table(params, cache=None):
    """Log kernel of every graph in the space, indexed by graph code."""
    n = params.centroid.n
    if n > MAX_SPACE_N:
        raise SpaceTooLarge(n, MAX_SPACE_N)
    ev = batch_distance_for(params.metric, n, cache)
    d = ev.table(params.centroid)
    return -params.gamma * params.metric.phi_fn(d)


def exact_log_z(params, cache=None):
    """Log partition function by summing the kernel over all graphs."""
    return float(logsumexp(snf_log_kernel_table(params, cache)))


def _check_chain_args(omega, iters, burnin, thin):
    if not 0.0 <= omega <= 1.0:
        raise InvalidConfig("omega must lie in [0, 1]")
    if iters <= burnin or burnin < 0:
        raise InvalidConfig("iters must exceed burnin (and burnin be >= 0)")
    if thin < 1:
        raise InvalidConfig("thin must be >= 1")


def default_omega(n):
    m = n_pairs(n)
    return min(1.0, 2.0 / m) if m else 0.0


class CerChain:
    """Persistent MH chain targeting CER(alpha, centroid).

    Each :meth:`draw` continues from where the previous one stopped, so the
    burn-in of later draws starts at an already-mixed state.
    """

    def __init__(self, params, omega=None, seed=0, start=None):
        self.params = params
        self.n = params.centroid.n
        self.m = n_pairs(self.n)
        self.omega = default_omega(self.n) if omega is None else omega
        self.rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "cer-chain")
        start = params.centroid if start is None else start
        self.state = np.array(start.vector, dtype=np.uint8)
        self._centroid = np.array(params.centroid.vector, dtype=np.uint8)
        self.accepted = 0
        self.steps = 0

    def draw(self, count, burnin=0, thin=1):
        """``count`` retained states after ``burnin`` steps, every ``thin``-th."""
        n_steps = burnin + count * thin
        flips = self.rng.random((n_steps, self.m)) < self.omega
        log_u = np.log(self.rng.random(n_steps))
        out = np.empty((count, self.m), dtype=np.uint8)
        acc = _kernels.cer_flip_chain(self.state, self._centroid, flips, log_u,
                                      self.params.log_odds, burnin, thin, out)
        self.accepted += int(acc)
        self.steps += n_steps
        return out


def sample_cer(params, omega=None, iters=2000, burnin=1000, thin=1, seed=0, as_matrix=False):
    """MH draws from CER(alpha, centroid) with per-pair flip proposals."""
    omega = default_omega(params.centroid.n) if omega is None else omega
    _check_chain_args(omega, iters, burnin, thin)
    count = (iters - burnin) // thin
    chain = CerChain(params, omega, seed)
    mat = chain.draw(count, burnin, thin)
    if as_matrix:
        return mat
    return [LabeledGraph.from_vector(params.centroid.n, row) for row in mat]


def sample_snf(params, omega=None, iters=2000, burnin=1000, thin=1, seed=0, start=None,
               cache=None, as_matrix=False):
    """MH draws from SNF(centroid, gamma) with per-pair flip proposals.

    The partition function cancels because the parameters are fixed.
    """
    n = params.centroid.n
    m = n_pairs(n)
    omega = default_omega(n) if omega is None else omega
    _check_chain_args(omega, iters, burnin, thin)
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "snf-chain")
    count = (iters - burnin) // thin
    start = params.centroid if start is None else start
    flips = rng.random((iters, m)) < omega
    log_u = np.log(rng.random(iters))
    if n <= MAX_SPACE_N:
        table = np.asarray(snf_log_kernel_table(params, cache), dtype=float)
        flip_codes = matrix_codes(flips.astype(np.uint8))
        out = np.empty(count, dtype=np.int64)
        _kernels.table_flip_chain(np.int64(start.bits), flip_codes, log_u, table, burnin, thin, out)
        mat = graph_space_matrix(n)[out]
    else:
        mat = _sample_snf_python(params, flips, log_u, burnin, thin, count, start, cache)
    if as_matrix:
        return np.array(mat, dtype=np.uint8)
    return [LabeledGraph.from_vector(n, row) for row in mat]


def _sample_snf_python(params, flips, log_u, burnin, thin, count, start, cache):
    n = params.centroid.n
    m = n_pairs(n)
    cur = start
    cur_lk = snf_log_kernel(cur, params, cache)
    out = np.empty((count, m), dtype=np.uint8)
    kept = 0
    shifts = [1 << (m - 1 - k) for k in range(m)]
    for t in range(len(flips)):
        idx = np.flatnonzero(flips[t])
        if idx.size:
            mask = 0
            for k in idx:
                mask |= shifts[k]
            prop = LabeledGraph(n, cur.bits ^ mask)
            prop_lk = snf_log_kernel(prop, params, cache)
            if log_u[t] < prop_lk - cur_lk:
                cur, cur_lk = prop, prop_lk
        if t >= burnin and (t - burnin) % thin == thin - 1 and kept < count:
            out[kept] = cur.vector
            kept += 1
    return out


def snf_distribution(params, cache=None):
    """Exact probabilities over the graph space (``n <= 6``), by code."""
    table = snf_log_kernel_table(params, cache)
    return np.exp(table - logsumexp(table))


def cer_distribution(params):
    n = params.centroid.n
    if n > MAX_SPACE_N:
        raise SpaceTooLarge(n, MAX_SPACE_N)
    return np.exp(cer_log_density_batch(graph_space_matrix(n), params))


