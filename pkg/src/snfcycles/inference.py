"""Posterior samplers for CER and SNF network models.

``fit_snf`` handles the SNF posterior with the partition function either
computed exactly (small graphs) or estimated by importance sampling from a
CER proposal, where the cycle term of each IS draw is either enumerated or
predicted by a boosted-tree surrogate. ``fit_snf_auxvar`` is the
auxiliary-variable baseline in which the partition function cancels.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import betaln, gammaln, logsumexp

from .cycles import CycleBudget, CycleCache, enumerate_cycles
from .errors import (
    BudgetExceeded,
    EmptySample,
    EmptyTrace,
    InvalidConfig,
    SizeMismatch,
    SpaceTooLarge,
)
from .graphs import MAX_SPACE_N, LabeledGraph, graphs_to_matrix, n_pairs
from .metrics import DEFAULT_CACHE, MetricSpec, batch_betweenness, distance_matrix
from .models import (
    CerChain,
    CerParams,
    SnfParams,
    batch_distance_for,
    cer_log_density_batch,
    default_omega,
    sample_snf,
)
from .rng import substream
from .surrogate import SurrogateConfig, SymmetricDifferencePredictor, build_training_pool

log = logging.getLogger(__name__)

Z_MODES = ("exact", "is_exact_cycles", "is_surrogate")
MOVE_FLIP = "flip"
MOVE_BERNOULLI = "bernoulli"
MOVE_DISPERSION = "dispersion"
MOVES = (MOVE_FLIP, MOVE_BERNOULLI, MOVE_DISPERSION)
ALPHA_CAP = 0.2
CENTROID_BUDGET = CycleBudget(max_cycles=20_000, max_millis=1_000)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SnfPriors:
    """Centroid prior ``exp(-gamma0 * phi(d(c, g0)))`` and a Gamma(shape,
    rate) prior on the dispersion."""

    g0: LabeledGraph
    gamma0: float = 0.01
    gamma_shape: float = 1.0
    gamma_rate: float = 1.0

    def __post_init__(self):
        if not (self.gamma0 > 0 and self.gamma_shape > 0 and self.gamma_rate > 0):
            raise InvalidConfig("gamma0, gamma_shape and gamma_rate must be positive")

    @property
    def gamma_mean(self):
        return self.gamma_shape / self.gamma_rate

    def log_prior_gamma(self, gamma):
        if gamma <= 0:
            return -math.inf
        a, b = self.gamma_shape, self.gamma_rate
        return a * math.log(b) - gammaln(a) + (a - 1) * math.log(gamma) - b * gamma


@dataclass(frozen=True)
class CerPriors:
    """Centroid prior ``exp(-alpha0_cer * d_H(c, g0))`` (raw Hamming) and a
    Beta(a, b) prior rescaled onto (0, 0.5) for alpha."""

    g0: LabeledGraph
    alpha0_cer: float = 0.01
    alpha_a: float = 1.0
    alpha_b: float = 1.0

    def __post_init__(self):
        if not (self.alpha0_cer > 0 and self.alpha_a > 0 and self.alpha_b > 0):
            raise InvalidConfig("alpha0_cer, alpha_a and alpha_b must be positive")

    def log_prior_alpha(self, alpha):
        if not 0.0 < alpha < 0.5:
            return -math.inf
        x = 2.0 * alpha
        a, b = self.alpha_a, self.alpha_b
        return math.log(2.0) + (a - 1) * math.log(x) + (b - 1) * math.log1p(-x) - betaln(a, b)


@dataclass(frozen=True)
class IsConfig:
    """Importance-sampling proposal CER(alpha_tilde, centroid_tilde).

    Each MCMC iteration draws ``K`` graphs from a persistent CER chain,
    discarding ``burnin`` steps first and keeping every ``thin``-th state.
    """

    K: int = 2000
    alpha_tilde: float = 0.1
    centroid_tilde: LabeledGraph = None
    burnin: int = 200
    thin: int = 10
    omega: float = None
    seed: int = 0

    def __post_init__(self):
        if self.K < 100:
            raise InvalidConfig(f"IS sample size K must be >= 100, got {self.K}")
        if not 0.0 < self.alpha_tilde < 0.5:
            raise InvalidConfig("alpha_tilde must lie in (0, 0.5)")
        if self.burnin < 0 or self.thin < 1:
            raise InvalidConfig("burnin must be >= 0 and thin >= 1")


DEFAULT_GAMMA_KERNEL = ((0.01, 0.5), (0.05, 0.3), (0.2, 0.2))


@dataclass(frozen=True)
class MoveMixture:
    p_flip: float = 0.4
    p_bernoulli: float = 0.1
    p_gamma: float = 0.5
    omega: float = None
    gamma_kernel: tuple = DEFAULT_GAMMA_KERNEL

    def __post_init__(self):
        probs = (self.p_flip, self.p_bernoulli, self.p_gamma)
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-9:
            raise InvalidConfig("move probabilities must be non-negative and sum to 1")
        kernel = tuple((float(w), float(p)) for w, p in self.gamma_kernel)
        object.__setattr__(self, "gamma_kernel", kernel)
        if not kernel or min(w for w, _ in kernel) <= 0 or min(p for _, p in kernel) < 0:
            raise InvalidConfig("kernel widths must be positive and weights non-negative")
        if abs(sum(p for _, p in kernel) - 1.0) > 1e-9:
            raise InvalidConfig("kernel weights must sum to 1")
        if self.omega is not None and not 0.0 <= self.omega <= 1.0:
            raise InvalidConfig("omega must lie in [0, 1]")

    def omega_for(self, n):
        return default_omega(n) if self.omega is None else self.omega

    def choose(self, u):
        if u < self.p_flip:
            return MOVE_FLIP
        if u < self.p_flip + self.p_bernoulli:
            return MOVE_BERNOULLI
        return MOVE_DISPERSION


# ---------------------------------------------------------------------------
# proposals


def _as_rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def propose_centroid_flip(current, omega, seed=None):
    """Toggle each node pair of ``current`` independently with probability
    ``omega``. The proposal is symmetric."""
    if not 0.0 <= omega <= 1.0:
        raise InvalidConfig("omega must lie in [0, 1]")
    rng = _as_rng(seed)
    flips = rng.random(current.n_pairs) < omega
    if not flips.any():
        return current
    return LabeledGraph.from_vector(current.n, current.vector ^ flips.astype(np.uint8))


def shrink_frequencies(edge_freq, n_obs):
    """``(N * p + 0.5) / (N + 1)``: keeps every Bernoulli parameter inside (0, 1)."""
    p = np.asarray(edge_freq, dtype=float)
    return (n_obs * p + 0.5) / (n_obs + 1.0)


def bernoulli_log_density(graph, probs):
    x = graph.vector.astype(bool)
    with np.errstate(divide="ignore"):
        return float(np.sum(np.where(x, np.log(probs), np.log1p(-probs))))


@dataclass(frozen=True)
class BernoulliProposal:
    graph: LabeledGraph
    log_q_forward: float
    log_q_reverse: float


def propose_centroid_bernoulli(edge_freq, seed=None, current=None, n=None):
    """Independence proposal: every pair is an edge with its own probability.

    Returns the proposed graph with ``log Q(proposal)`` and, when
    ``current`` is given, ``log Q(current)`` (the reverse move density).
    """
    probs = np.asarray(edge_freq, dtype=float)
    if probs.ndim != 1 or np.any(~np.isfinite(probs)) or probs.min(initial=0) < 0 or probs.max(initial=0) > 1:
        raise InvalidConfig("edge frequencies must lie in [0, 1]")
    if n is None:
        n = current.n if current is not None else int(round((1 + math.sqrt(1 + 8 * len(probs))) / 2))
    if n_pairs(n) != len(probs):
        raise InvalidConfig("edge frequency vector length does not match n")
    rng = _as_rng(seed)
    vec = (rng.random(len(probs)) < probs).astype(np.uint8)
    g = LabeledGraph.from_vector(n, vec)
    fwd = bernoulli_log_density(g, probs)
    rev = bernoulli_log_density(current, probs) if current is not None else math.nan
    return BernoulliProposal(g, fwd, rev)


def propose_gamma(current, gamma_kernel=DEFAULT_GAMMA_KERNEL, seed=None, u=None):
    """Reflected random walk: pick a width by weight, add Unif(-v, v) and
    return ``|y|``."""
    if u is None:
        rng = _as_rng(seed)
        widths = np.array([w for w, _ in gamma_kernel])
        weights = np.array([p for _, p in gamma_kernel])
        k = rng.choice(len(widths), p=weights / weights.sum())
        u = rng.uniform(-widths[k], widths[k])
    return abs(current + u)


def _reflect_into(x, lo, hi):
    """Fold ``x`` back into ``[lo, hi]`` by repeated mirror reflection."""
    width = hi - lo
    y = (x - lo) % (2 * width)
    return lo + (y if y <= width else 2 * width - y)


# ---------------------------------------------------------------------------
# traces


@dataclass
class Trace:
    """MCMC output: one row per iteration."""

    n: int
    kind: str
    centroids: list = field(default_factory=list)
    dispersion: list = field(default_factory=list)
    log_post: list = field(default_factory=list)
    move_type: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    budget_rejections: int = 0

    def __len__(self):
        return len(self.dispersion)

    def append(self, centroid, dispersion, log_post, move, accepted, wall_ms):
        self.centroids.append(centroid)
        self.dispersion.append(float(dispersion))
        self.log_post.append(float(log_post))
        self.move_type.append(move)
        self.accepted.append(bool(accepted))
        self.wall_ms.append(float(wall_ms))

    @property
    def draws(self):
        return list(zip(self.centroids, self.dispersion, self.log_post))

    def _check(self, burn_in=0):
        if len(self) == 0 or burn_in >= len(self):
            raise EmptyTrace("trace has no draws after burn-in")

    def dispersion_array(self, burn_in=0):
        self._check(burn_in)
        return np.asarray(self.dispersion[burn_in:])

    def proposed_counts(self):
        return {m: sum(1 for t in self.move_type if t == m) for m in MOVES}

    def accepted_counts(self):
        return {m: sum(1 for t, a in zip(self.move_type, self.accepted) if t == m and a)
                for m in MOVES}

    def acceptance_rate(self, move=None):
        if move is None:
            return float(np.mean(self.accepted)) if self.accepted else math.nan
        prop = self.proposed_counts()[move]
        return self.accepted_counts()[move] / prop if prop else math.nan

    def mean_wall_ms(self):
        return float(np.mean(self.wall_ms)) if self.wall_ms else math.nan

    def centroid_dictionary(self):
        out = {}
        for c in self.centroids:
            out.setdefault(c.fingerprint_hex, [[i + 1, j + 1] for i, j in c.edges])
        return out

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "move_type", "accepted", "dispersion", "centroid_fingerprint_hex",
                        "log_post_kernel", "wall_ms"])
            for k in range(len(self)):
                w.writerow([k + 1, self.move_type[k], int(self.accepted[k]),
                            f"{self.dispersion[k]:.12g}", self.centroids[k].fingerprint_hex,
                            f"{self.log_post[k]:.12g}", f"{self.wall_ms[k]:.3f}"])

    def write_centroid_dictionary(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.centroid_dictionary(), fh, indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# importance sampling


@dataclass
class IsSample:
    """Graphs drawn from CER(alpha_tilde, centroid_tilde) with their log
    proposal densities."""

    matrix: np.ndarray
    log_g: np.ndarray
    n: int
    _betweenness: np.ndarray = None

    def __len__(self):
        return len(self.matrix)

    @property
    def betweenness(self):
        if self._betweenness is None:
            self._betweenness = batch_betweenness(self.matrix, self.n)
        return self._betweenness


def draw_is_sample(chain, K, burnin=0, thin=1):
    mat = chain.draw(K, burnin, thin)
    return IsSample(mat, cer_log_density_batch(mat, chain.params), chain.n)


def _log_mean_weight(gamma, metric, d, log_g):
    if len(d) == 0:
        raise EmptySample("importance sample is empty")
    terms = -gamma * metric.phi_fn(d) - log_g
    return float(logsumexp(terms) - math.log(len(d)))


def is_distances(sample, centroid, metric, mode="exact_cycles", predictor=None, cache=None):
    """Distances from every IS draw to ``centroid``; in surrogate mode the
    cycle term is predicted rather than enumerated."""
    ev = batch_distance_for(metric, centroid.n, cache)
    if mode in ("exact_cycles", "is_exact_cycles") or not metric.uses_cycles:
        return ev(sample.matrix, centroid)
    if mode not in ("surrogate", "is_surrogate"):
        raise InvalidConfig(f"unknown IS mode {mode!r}")
    if predictor is None:
        raise InvalidConfig("surrogate mode needs a trained predictor")
    sym = predictor.predict(sample.matrix, centroid, sample.betweenness)
    if metric.kind == "symmetric":
        return sym
    raw = (sample.matrix != centroid.vector[None, :]).sum(axis=1)
    return raw * metric.hamming_scale(centroid.n) + metric.lam * sym


def estimate_log_z_is(centroid, gamma, metric, is_sample, mode="exact_cycles", predictor=None,
                      cache=None):
    """Log of the importance-sampling estimate
    ``(1/K) sum_k exp(-gamma phi(d(G_k, c))) / g(G_k)``."""
    if len(is_sample) == 0:
        raise EmptySample("importance sample is empty")
    d = is_distances(is_sample, centroid, metric, mode, predictor, cache)
    return _log_mean_weight(gamma, metric, d, is_sample.log_g)


# ---------------------------------------------------------------------------
# shared helpers


def _population_matrix(pop, n):
    graphs = list(pop.graphs if hasattr(pop, "graphs") else (pop or ()))
    for g in graphs:
        if g.n != n:
            raise SizeMismatch(g.n, n)
    return graphs_to_matrix(graphs, n) if graphs else np.zeros((0, n_pairs(n)), dtype=np.uint8)


def medoid_network(pop, metric=None, cache=None):
    """Data network with the smallest total distance to the others."""
    metric = metric or MetricSpec()
    D = distance_matrix(pop, metric, cache)
    return pop.graphs[int(np.argmin(D.sum(axis=1)))]


class _Aborted(Exception):
    pass


class _SnfTarget:
    """Data term of the SNF log posterior, memoised per centroid."""

    def __init__(self, data, priors, metric, cache):
        self.data = data
        self.N = len(data)
        self.priors = priors
        self.metric = metric
        self.cache = cache
        self.ev = batch_distance_for(metric, priors.g0.n, cache)
        self._memo = {}

    def stats(self, c):
        """(sum of phi(d(G_l, c)), centroid log prior)."""
        hit = self._memo.get(c.bits)
        if hit is None:
            phi = self.metric.phi_fn
            s = float(np.sum(phi(self.ev(self.data, c)))) if self.N else 0.0
            p = -self.priors.gamma0 * float(phi(self.metric.distance(c, self.priors.g0, self.cache)))
            hit = (s, p)
            if len(self._memo) > 100_000:
                self._memo.clear()
            self._memo[c.bits] = hit
        return hit

    def log_post(self, c, gamma, log_z):
        s, p = self.stats(c)
        return -gamma * s - self.N * log_z + p + self.priors.log_prior_gamma(gamma)


def _ensure_cycles(c, metric, cache, budget):
    """Enumerate a proposed centroid's cycles under ``budget`` and pin them
    in ``cache``. A centroid with that many cycles sits at an enormous HS
    distance from any sparse data network, so callers reject it."""
    if metric.uses_cycles and c not in cache:
        cache.pin(enumerate_cycles(c, budget))


def _check_centroid_size(c, n):
    if c.n != n:
        raise SizeMismatch(c.n, n)


# ---------------------------------------------------------------------------
# CER fit


def fit_cer(pop, priors, move_mix=None, iters=5000, seed=0, init=None):
    """MH over (centroid, alpha) with the exact CER likelihood."""
    move_mix = move_mix or MoveMixture()
    n = priors.g0.n
    data = _population_matrix(pop, n)
    N = len(data)
    m = n_pairs(n)
    if iters < 1:
        raise InvalidConfig("iters must be >= 1")
    rng = substream(seed, "fit-cer")
    omega = move_mix.omega_for(n)
    freq = shrink_frequencies(data.mean(axis=0) if N else np.full(m, 0.5), N)
    c, alpha = (priors.g0, 0.25) if init is None else init
    _check_centroid_size(c, n)
    if not 0.0 < alpha < 0.5:
        raise InvalidConfig("initial alpha must lie in (0, 0.5)")

    def disagreements(g):
        return int((data != g.vector[None, :]).sum()) if N else 0

    def log_post(g, a, dis):
        ll = dis * math.log(a) + (N * m - dis) * math.log1p(-a)
        prior_c = -priors.alpha0_cer * (g.bits ^ priors.g0.bits).bit_count()
        return ll + prior_c + priors.log_prior_alpha(a)

    dis = disagreements(c)
    lp = log_post(c, alpha, dis)
    trace = Trace(n, "cer", config={"iters": iters, "seed": seed, "priors": _priors_dict(priors),
                                    "moves": _moves_dict(move_mix)})
    widths = np.array([w for w, _ in move_mix.gamma_kernel])
    weights = np.array([p for _, p in move_mix.gamma_kernel])
    for _ in range(iters):
        t0 = time.perf_counter()
        move = move_mix.choose(rng.random())
        log_q = 0.0
        c_new, a_new = c, alpha
        if move == MOVE_FLIP:
            c_new = propose_centroid_flip(c, omega, rng)
        elif move == MOVE_BERNOULLI:
            prop = propose_centroid_bernoulli(freq, rng, current=c)
            c_new, log_q = prop.graph, prop.log_q_reverse - prop.log_q_forward
        else:
            k = rng.choice(len(widths), p=weights)
            a_new = _reflect_into(alpha + rng.uniform(-widths[k], widths[k]), 0.0, 0.5)
        log_u = math.log(rng.random())
        if not 0.0 < a_new < 0.5:
            ok, lp_new = False, -math.inf
        else:
            dis_new = dis if c_new is c else disagreements(c_new)
            lp_new = log_post(c_new, a_new, dis_new)
            ok = log_u < lp_new - lp + log_q
        if ok:
            c, alpha, lp = c_new, a_new, lp_new
            dis = dis_new
        trace.append(c, alpha, lp, move, ok, 1000 * (time.perf_counter() - t0))
    return trace


def is_config_from_cer(trace, K=2000, burn_in=0, cap=ALPHA_CAP, **kwargs):
    """IS proposal centred on the CER posterior: mean alpha (capped) and the
    modal centroid."""
    alpha = float(np.mean(trace.dispersion_array(burn_in)))
    alpha = min(alpha, cap)
    counts = {}
    for c in trace.centroids[burn_in:]:
        counts[c] = counts.get(c, 0) + 1
    mode = min(counts, key=lambda g: (-counts[g], g.bits))
    return IsConfig(K=K, alpha_tilde=alpha, centroid_tilde=mode, **kwargs)


def gamma_prior_from_cer(trace, pop, metric, burn_in=0, shape=1.0, cache=None):
    """Gamma(shape, rate) whose mean converts the CER dispersion to the
    scale of ``metric``.

    The CER fit corresponds to an SNF with raw Hamming distance and
    dispersion ``log((1 - alpha) / alpha)``; that value is rescaled by the
    ratio of mean raw Hamming to mean ``metric`` distance between the data
    and the CER modal centroid.
    """
    alpha = min(float(np.mean(trace.dispersion_array(burn_in))), 0.499)
    counts = {}
    for c in trace.centroids[burn_in:]:
        counts[c] = counts.get(c, 0) + 1
    mode = min(counts, key=lambda g: (-counts[g], g.bits))
    raw = np.mean([(g.bits ^ mode.bits).bit_count() for g in pop])
    dist = np.mean([metric.phi_fn(metric.distance(g, mode, cache)) for g in pop])
    gamma_hat = math.log((1 - alpha) / alpha)
    if dist > 0 and raw > 0:
        gamma_hat *= raw / dist
    gamma_hat = max(gamma_hat, 1e-6)
    return shape, shape / gamma_hat


# ---------------------------------------------------------------------------
# SNF fit


def _priors_dict(priors):
    d = asdict(priors)
    d["g0"] = [[i + 1, j + 1] for i, j in priors.g0.edges]
    return d


def _moves_dict(mm):
    d = asdict(mm)
    d["gamma_kernel"] = [list(x) for x in mm.gamma_kernel]
    return d


def _is_cfg_dict(cfg):
    if cfg is None:
        return None
    d = asdict(cfg)
    d["centroid_tilde"] = [[i + 1, j + 1] for i, j in cfg.centroid_tilde.edges]
    return d


def fit_snf(pop, priors, metric=None, move_mix=None, is_cfg=None, z_mode="exact", iters=1000,
            seed=0, pool=None, surrogate_cfg=None, cache=None, init=None,
            centroid_budget=CENTROID_BUDGET):
    """Sample the SNF posterior over (centroid, gamma).

    ``z_mode`` picks how ``log Z(c, gamma)`` enters the acceptance ratio:
    ``exact`` sums over the whole graph space (n <= 6); ``is_exact_cycles``
    and ``is_surrogate`` estimate it from a fresh CER importance sample each
    iteration, shared by the current and proposed parameters. Data distances
    are always exact.
    """
    metric = metric or MetricSpec()
    move_mix = move_mix or MoveMixture()
    n = priors.g0.n
    if z_mode not in Z_MODES:
        raise InvalidConfig(f"z_mode must be one of {Z_MODES}")
    if z_mode == "exact" and n > MAX_SPACE_N:
        raise SpaceTooLarge(n, MAX_SPACE_N)
    if z_mode != "exact":
        if is_cfg is None or is_cfg.centroid_tilde is None:
            raise InvalidConfig("importance-sampling modes need an IsConfig with centroid_tilde")
        _check_centroid_size(is_cfg.centroid_tilde, n)
    if iters < 1:
        raise InvalidConfig("iters must be >= 1")
    cache = cache if cache is not None else DEFAULT_CACHE
    data = _population_matrix(pop, n)
    N = len(data)
    target = _SnfTarget(data, priors, metric, cache)
    rng = substream(seed, "fit-snf")
    omega = move_mix.omega_for(n)
    freq = shrink_frequencies(data.mean(axis=0) if N else np.full(n_pairs(n), 0.5), N)
    widths = np.array([w for w, _ in move_mix.gamma_kernel])
    weights = np.array([p for _, p in move_mix.gamma_kernel])

    chain = predictor = None
    if z_mode != "exact" and N:
        chain = CerChain(CerParams(is_cfg.centroid_tilde, is_cfg.alpha_tilde), is_cfg.omega,
                         substream(is_cfg.seed if is_cfg.seed is not None else seed, "is-chain"))
        chain.draw(1, is_cfg.burnin, 1)
    if z_mode == "is_surrogate" and N and metric.uses_cycles:
        if pool is None:
            pool = build_training_pool(is_cfg.alpha_tilde, is_cfg.centroid_tilde,
                                       max(is_cfg.K, 50), seed=seed,
                                       burnin=is_cfg.burnin, thin=is_cfg.thin, omega=is_cfg.omega,
                                       cache=CycleCache(maxsize=None, budget=cache.budget))
        predictor = SymmetricDifferencePredictor(pool, surrogate_cfg or SurrogateConfig(), cache)

    exact_ev = batch_distance_for(metric, n, cache) if z_mode == "exact" else None

    def exact_log_z(c, gamma):
        return float(logsumexp(-gamma * metric.phi_fn(exact_ev.table(c))))

    mode = "exact_cycles" if z_mode == "is_exact_cycles" else "surrogate"

    def sample_distances(sample, centroids):
        """Distances for each centroid; one budget failure per draw is
        repaired by redrawing it."""
        redrawn = set()
        while True:
            try:
                return [is_distances(sample, c, metric, mode, predictor, cache) for c in centroids]
            except BudgetExceeded as exc:
                k = exc.index
                if k is None or k in redrawn:
                    raise _Aborted() from exc
                redrawn.add(k)
                row = chain.draw(1, 0, is_cfg.thin)
                sample.matrix[k] = row[0]
                sample.log_g[k] = cer_log_density_batch(row, chain.params)[0]
                sample._betweenness = None

    c, gamma = (priors.g0, priors.gamma_mean) if init is None else init
    _check_centroid_size(c, n)
    lp = target.log_post(c, gamma, exact_log_z(c, gamma) if z_mode == "exact" and N else 0.0)
    trace = Trace(n, "snf", config={
        "z_mode": z_mode, "iters": iters, "seed": seed, "metric": metric.to_dict(),
        "priors": _priors_dict(priors), "moves": _moves_dict(move_mix),
        "is": _is_cfg_dict(is_cfg) if z_mode != "exact" else None,
    })
    for _ in range(iters):
        t0 = time.perf_counter()
        move = move_mix.choose(rng.random())
        log_q = 0.0
        c_new, g_new = c, gamma
        if move == MOVE_FLIP:
            c_new = propose_centroid_flip(c, omega, rng)
        elif move == MOVE_BERNOULLI:
            prop = propose_centroid_bernoulli(freq, rng, current=c)
            c_new, log_q = prop.graph, prop.log_q_reverse - prop.log_q_forward
        else:
            k = rng.choice(len(widths), p=weights)
            g_new = propose_gamma(gamma, u=rng.uniform(-widths[k], widths[k]))
        log_u = math.log(rng.random())
        ok = False
        lp_cur = lp
        try:
            if c_new == c and g_new == gamma:
                ok = True
                lp_new = lp
            elif g_new <= 0:
                lp_new = -math.inf
            else:
                lz_cur = lz_new = 0.0
                try:
                    _ensure_cycles(c_new, metric, cache, centroid_budget)
                    target.stats(c_new)
                    if predictor is not None and c_new != c:
                        predictor.model_for(c_new)
                except BudgetExceeded as exc:
                    raise _Aborted() from exc
                if N and z_mode == "exact":
                    lz_cur, lz_new = exact_log_z(c, gamma), exact_log_z(c_new, g_new)
                elif N:
                    sample = draw_is_sample(chain, is_cfg.K, is_cfg.burnin, is_cfg.thin)
                    cents = [c] if c_new == c else [c, c_new]
                    ds = sample_distances(sample, cents)
                    lz_cur = _log_mean_weight(gamma, metric, ds[0], sample.log_g)
                    lz_new = _log_mean_weight(g_new, metric, ds[-1], sample.log_g)
                lp_cur = target.log_post(c, gamma, lz_cur)
                lp_new = target.log_post(c_new, g_new, lz_new)
                ok = log_u < lp_new - lp_cur + log_q
        except _Aborted:
            trace.budget_rejections += 1
            log.warning("cycle budget exceeded during iteration %d; proposal rejected", len(trace) + 1)
            ok = False
        if ok:
            c, gamma, lp = c_new, g_new, lp_new
        else:
            lp = lp_cur
        trace.append(c, gamma, lp, move, ok, 1000 * (time.perf_counter() - t0))
    if predictor is not None:
        trace.config["surrogate_trainings"] = predictor.trainings
    return trace


# ---------------------------------------------------------------------------
# auxiliary-variable baseline


def fit_snf_auxvar(pop, priors, metric=None, move_mix=None, aux_cer=None, iters=1000, seed=0,
                   aux_burnin=200, aux_thin=10, cache=None, init=None,
                   centroid_budget=CENTROID_BUDGET):
    """Auxiliary-variable MH in which the SNF normalising constant cancels.

    The state carries N auxiliary networks. Each iteration proposes new
    parameters, simulates N networks from the SNF at the proposal, and
    accepts with the extended-target ratio using the fixed CER density
    ``aux_cer`` as the auxiliary conditional.
    """
    metric = metric or MetricSpec()
    move_mix = move_mix or MoveMixture()
    n = priors.g0.n
    cache = cache if cache is not None else DEFAULT_CACHE
    data = _population_matrix(pop, n)
    N = len(data)
    if N == 0:
        raise InvalidConfig("the auxiliary-variable sampler needs data")
    if aux_cer is None:
        aux_cer = CerParams(priors.g0, 0.1)
    if iters < 1 or aux_burnin < 0 or aux_thin < 1:
        raise InvalidConfig("iters >= 1, aux_burnin >= 0 and aux_thin >= 1 required")
    _check_centroid_size(aux_cer.centroid, n)
    target = _SnfTarget(data, priors, metric, cache)
    ev = target.ev
    rng = substream(seed, "fit-auxvar")
    sim_rng = substream(seed, "auxvar-sim")
    omega = move_mix.omega_for(n)
    freq = shrink_frequencies(data.mean(axis=0), N)
    widths = np.array([w for w, _ in move_mix.gamma_kernel])
    weights = np.array([p for _, p in move_mix.gamma_kernel])

    def simulate(c, gamma):
        it = aux_burnin + N * aux_thin
        return sample_snf(SnfParams(c, gamma, metric), omega, it + 1, aux_burnin + 1, aux_thin,
                          seed=sim_rng, cache=cache, as_matrix=True)

    def log_q(mat, c, gamma):
        return -gamma * float(np.sum(metric.phi_fn(ev(mat, c))))

    def log_f(mat):
        return float(np.sum(cer_log_density_batch(mat, aux_cer)))

    c, gamma = (priors.g0, priors.gamma_mean) if init is None else init
    _check_centroid_size(c, n)
    x = simulate(c, gamma)
    lf_x = log_f(x)
    trace = Trace(n, "snf", config={
        "z_mode": "auxvar", "iters": iters, "seed": seed, "metric": metric.to_dict(),
        "priors": _priors_dict(priors), "moves": _moves_dict(move_mix),
        "aux_cer": {"alpha": aux_cer.alpha,
                    "centroid": [[i + 1, j + 1] for i, j in aux_cer.centroid.edges]},
    })
    lp = target.log_post(c, gamma, 0.0)
    for _ in range(iters):
        t0 = time.perf_counter()
        move = move_mix.choose(rng.random())
        lq_ratio = 0.0
        c_new, g_new = c, gamma
        if move == MOVE_FLIP:
            c_new = propose_centroid_flip(c, omega, rng)
        elif move == MOVE_BERNOULLI:
            prop = propose_centroid_bernoulli(freq, rng, current=c)
            c_new, lq_ratio = prop.graph, prop.log_q_reverse - prop.log_q_forward
        else:
            k = rng.choice(len(widths), p=weights)
            g_new = propose_gamma(gamma, u=rng.uniform(-widths[k], widths[k]))
        log_u = math.log(rng.random())
        ok = False
        x_new = None
        if c_new == c and g_new == gamma:
            ok, lp_new = True, lp
        elif g_new > 0:
            try:
                _ensure_cycles(c_new, metric, cache, centroid_budget)
                x_new = simulate(c_new, g_new)
                lf_new = log_f(x_new)
                lp_new = target.log_post(c_new, g_new, 0.0)
                # pi(t') q_t'(y) f(x') q_t(x) / [pi(t) q_t(y) f(x) q_t'(x')]
                log_r = (lp_new - lp + lf_new - lf_x
                         + log_q(x, c, gamma) - log_q(x_new, c_new, g_new) + lq_ratio)
                ok = log_u < log_r
            except BudgetExceeded:
                trace.budget_rejections += 1
        if ok:
            c, gamma, lp = c_new, g_new, lp_new
            if x_new is not None:
                x, lf_x = x_new, lf_new
        trace.append(c, gamma, lp, move, ok, 1000 * (time.perf_counter() - t0))
    return trace
