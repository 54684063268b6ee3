"""scikit-learn style wrappers around the samplers.

The estimators take a population of networks as ``X`` (a
:class:`NetworkPopulation`, a list of graphs, an adjacency stack or a 0/1
pair matrix) and expose posterior summaries as fitted attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .analysis import common_cycles, posterior_mode_centroid, trace_summary
from .errors import InvalidConfig
from .inference import (
    ALPHA_CAP,
    DEFAULT_GAMMA_KERNEL,
    CerPriors,
    IsConfig,
    MoveMixture,
    SnfPriors,
    fit_cer,
    fit_snf,
    gamma_prior_from_cer,
    is_config_from_cer,
    medoid_network,
)
from .metrics import MetricSpec, distance_matrix
from .models import CerParams, SnfParams, cer_log_density_batch, snf_log_kernel
from .surrogate import SurrogateConfig
from .validation import check_population


def _burn(burn_in, n_iter):
    return n_iter // 5 if burn_in is None else burn_in


class CERModel(BaseEstimator):
    """Bayesian centred Erdos-Renyi fit.

    Attributes
    ----------
    trace_ : Trace
    alpha_mean_ : float
    alpha_interval_ : tuple
        Equal-tailed 95% credible interval.
    centroid_ : LabeledGraph
        Posterior modal centroid.
    centroid_mass_ : float
    """

    def __init__(self, alpha_a=1.0, alpha_b=1.0, alpha0_cer=0.01, g0=None, n_iter=5000,
                 burn_in=None, p_flip=0.4, p_bernoulli=0.1, p_alpha=0.5, omega=None,
                 alpha_kernel=DEFAULT_GAMMA_KERNEL, random_state=0):
        self.alpha_a = alpha_a
        self.alpha_b = alpha_b
        self.alpha0_cer = alpha0_cer
        self.g0 = g0
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.p_flip = p_flip
        self.p_bernoulli = p_bernoulli
        self.p_alpha = p_alpha
        self.omega = omega
        self.alpha_kernel = alpha_kernel
        self.random_state = random_state

    def fit(self, X, y=None):
        pop = check_population(X)
        g0 = self.g0 if self.g0 is not None else medoid_network(pop, MetricSpec.hamming_raw())
        priors = CerPriors(g0, self.alpha0_cer, self.alpha_a, self.alpha_b)
        moves = MoveMixture(self.p_flip, self.p_bernoulli, self.p_alpha, self.omega,
                            self.alpha_kernel)
        self.trace_ = fit_cer(pop, priors, moves, self.n_iter, self.random_state)
        burn = _burn(self.burn_in, self.n_iter)
        summ = trace_summary(self.trace_, burn)
        self.alpha_mean_ = summ.mean
        self.alpha_interval_ = summ.interval
        self.centroid_, self.centroid_mass_ = posterior_mode_centroid(self.trace_, 1, burn)[0]
        self.n_nodes_ = pop.n
        return self

    def score_samples(self, X):
        """CER log density of each network at the posterior summaries."""
        check_is_fitted(self, "trace_")
        pop = check_population(X, self.n_nodes_)
        return cer_log_density_batch(pop.matrix(), CerParams(self.centroid_, self.alpha_mean_))


class SNFModel(BaseEstimator):
    """Bayesian spherical network family fit.

    ``z_mode`` is ``exact`` (n <= 6), ``is_exact_cycles`` or
    ``is_surrogate``. Hyperparameters left as ``None`` are set from a
    preliminary CER fit: the importance proposal (mean alpha capped at
    ``alpha_cap`` and the modal centroid) and the Gamma prior rate.

    Attributes
    ----------
    trace_ : Trace
    cer_trace_ : Trace or None
    priors_ : SnfPriors
    is_config_ : IsConfig or None
    gamma_mean_, gamma_sd_ : float
    gamma_interval_ : tuple
    centroid_ : LabeledGraph
    centroid_mass_ : float
    """

    def __init__(self, metric="hs", lam=1.0, normalized=True, phi="identity",
                 z_mode="is_surrogate", n_iter=1000, burn_in=None, K=2000, alpha_tilde=None,
                 alpha_cap=ALPHA_CAP, is_burnin=200, is_thin=10, gamma0=0.01, gamma_shape=1.0,
                 gamma_rate=None, g0=None, cer_iter=5000, p_flip=0.4, p_bernoulli=0.1,
                 p_gamma=0.5, omega=None, gamma_kernel=DEFAULT_GAMMA_KERNEL,
                 surrogate_rounds=100, surrogate_depth=4, surrogate_shrinkage=0.1,
                 surrogate_min_leaf=5, random_state=0):
        self.metric = metric
        self.lam = lam
        self.normalized = normalized
        self.phi = phi
        self.z_mode = z_mode
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.K = K
        self.alpha_tilde = alpha_tilde
        self.alpha_cap = alpha_cap
        self.is_burnin = is_burnin
        self.is_thin = is_thin
        self.gamma0 = gamma0
        self.gamma_shape = gamma_shape
        self.gamma_rate = gamma_rate
        self.g0 = g0
        self.cer_iter = cer_iter
        self.p_flip = p_flip
        self.p_bernoulli = p_bernoulli
        self.p_gamma = p_gamma
        self.omega = omega
        self.gamma_kernel = gamma_kernel
        self.surrogate_rounds = surrogate_rounds
        self.surrogate_depth = surrogate_depth
        self.surrogate_shrinkage = surrogate_shrinkage
        self.surrogate_min_leaf = surrogate_min_leaf
        self.random_state = random_state

    def metric_spec(self):
        return MetricSpec(self.metric, self.lam, self.normalized, self.phi)

    def fit(self, X, y=None):
        pop = check_population(X)
        metric = self.metric_spec()
        seed = self.random_state
        g0 = self.g0 if self.g0 is not None else medoid_network(pop, metric)
        needs_is = self.z_mode != "exact"
        self.cer_trace_ = None
        cer_burn = self.cer_iter // 5
        if self.gamma_rate is None or needs_is:
            self.cer_trace_ = fit_cer(pop, CerPriors(g0), iters=self.cer_iter, seed=seed)
        rate = self.gamma_rate
        if rate is None:
            _, rate = gamma_prior_from_cer(self.cer_trace_, pop, metric, cer_burn, self.gamma_shape)
        self.priors_ = SnfPriors(g0, self.gamma0, self.gamma_shape, rate)
        self.is_config_ = None
        if needs_is:
            cfg = is_config_from_cer(self.cer_trace_, self.K, cer_burn, cap=self.alpha_cap,
                                     burnin=self.is_burnin, thin=self.is_thin, seed=seed)
            if self.alpha_tilde is not None:
                cfg = IsConfig(self.K, self.alpha_tilde, cfg.centroid_tilde, self.is_burnin,
                               self.is_thin, None, seed)
            self.is_config_ = cfg
        moves = MoveMixture(self.p_flip, self.p_bernoulli, self.p_gamma, self.omega,
                            self.gamma_kernel)
        sur = SurrogateConfig(self.surrogate_rounds, self.surrogate_depth,
                              self.surrogate_shrinkage, self.surrogate_min_leaf)
        self.trace_ = fit_snf(pop, self.priors_, metric, moves, self.is_config_, self.z_mode,
                              self.n_iter, seed, surrogate_cfg=sur)
        burn = _burn(self.burn_in, self.n_iter)
        summ = trace_summary(self.trace_, burn)
        self.summary_ = summ
        self.gamma_mean_ = summ.mean
        self.gamma_sd_ = summ.sd
        self.gamma_interval_ = summ.interval
        self.centroid_, self.centroid_mass_ = posterior_mode_centroid(self.trace_, 1, burn)[0]
        self.n_nodes_ = pop.n
        self.data_ = pop
        return self

    def modal_centroids(self, top_k=5):
        check_is_fitted(self, "trace_")
        return posterior_mode_centroid(self.trace_, top_k, _burn(self.burn_in, self.n_iter))

    def cycle_table(self, top_k=10):
        check_is_fitted(self, "trace_")
        return common_cycles(self.trace_, self.data_, top_k, _burn(self.burn_in, self.n_iter))

    def score_samples(self, X):
        """Unnormalised SNF log kernel at the posterior mean dispersion and
        modal centroid."""
        check_is_fitted(self, "trace_")
        pop = check_population(X, self.n_nodes_)
        params = SnfParams(self.centroid_, self.gamma_mean_, self.metric_spec())
        return np.array([snf_log_kernel(g, params) for g in pop])


class PairwiseDistances(BaseEstimator, TransformerMixin):
    """Distance matrix of a population under one metric."""

    def __init__(self, metric="hs", lam=1.0, normalized=True):
        self.metric = metric
        self.lam = lam
        self.normalized = normalized

    def fit(self, X, y=None):
        if self.lam < 0:
            raise InvalidConfig("lam must be non-negative")
        self.spec_ = MetricSpec(self.metric, self.lam, self.normalized)
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        return distance_matrix(check_population(X), self.spec_)
