"""Bayesian inference for spherical network family models with a Hamming
plus cycle-set distance."""

from .analysis import (
    ClassicalMDS,
    CycleTableRow,
    FrResult,
    classical_mds,
    common_cycles,
    eda_distance_profile,
    friedman_rafsky,
    mst,
    posterior_mode_centroid,
    trace_summary,
)
from .cycles import CycleBudget, CycleCache, CycleSet, canonicalize, enumerate_cycles, symmetric_difference
from . import errors
from .estimators import CERModel, PairwiseDistances, SNFModel
from .graphs import (
    GeneratorSpec,
    LabeledGraph,
    NetworkPopulation,
    complete_graph,
    benchmark_corpus,
    draw_graph,
    empty_graph,
    generate,
    graph_space,
    make_graph,
    read_population,
    write_population,
)
from .inference import (
    CerPriors,
    IsConfig,
    MoveMixture,
    SnfPriors,
    Trace,
    estimate_log_z_is,
    fit_cer,
    fit_snf,
    fit_snf_auxvar,
    propose_centroid_bernoulli,
    propose_centroid_flip,
    propose_gamma,
)
from .metrics import MetricSpec, betweenness, centrality_betweenness_distance, distance_matrix, hamming, hs, jaccard
from .models import CerParams, SnfParams, exact_log_z, sample_cer, sample_snf
from .surrogate import BoostedTreeRegressor, TrainingPool, build_training_pool, featurize

__version__ = "0.1.0"

__all__ = [
    "BoostedTreeRegressor",
    "CERModel",
    "CerParams",
    "CerPriors",
    "ClassicalMDS",
    "CycleBudget",
    "CycleCache",
    "CycleSet",
    "CycleTableRow",
    "FrResult",
    "GeneratorSpec",
    "IsConfig",
    "LabeledGraph",
    "MetricSpec",
    "MoveMixture",
    "NetworkPopulation",
    "PairwiseDistances",
    "SNFModel",
    "SnfParams",
    "SnfPriors",
    "Trace",
    "TrainingPool",
    "benchmark_corpus",
    "betweenness",
    "build_training_pool",
    "canonicalize",
    "centrality_betweenness_distance",
    "classical_mds",
    "common_cycles",
    "complete_graph",
    "distance_matrix",
    "draw_graph",
    "eda_distance_profile",
    "empty_graph",
    "enumerate_cycles",
    "estimate_log_z_is",
    "exact_log_z",
    "featurize",
    "fit_cer",
    "fit_snf",
    "fit_snf_auxvar",
    "friedman_rafsky",
    "generate",
    "graph_space",
    "hamming",
    "hs",
    "jaccard",
    "make_graph",
    "mst",
    "posterior_mode_centroid",
    "propose_centroid_bernoulli",
    "propose_centroid_flip",
    "propose_gamma",
    "read_population",
    "sample_cer",
    "sample_snf",
    "symmetric_difference",
    "trace_summary",
    "write_population",
    "errors",
]
