import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from snfcycles import CERModel, PairwiseDistances, SNFModel
from snfcycles.errors import InvalidConfig, LabelMismatch, NotSymmetric, SchemaMismatch
from snfcycles.graphs import NetworkPopulation, graph_space, graphs_to_matrix, make_graph
from snfcycles.metrics import MetricSpec, distance_matrix
from snfcycles.models import SnfParams, snf_distribution
from snfcycles.validation import (
    check_distance_matrix,
    check_labels,
    check_population,
    check_probability,
)

CENTRE = make_graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)])


@pytest.fixture(scope="module")
def data():
    # iid draws from the exact distribution
    prob = snf_distribution(SnfParams(CENTRE, 3.0, MetricSpec("hs")))
    space = list(graph_space(5))
    idx = np.random.default_rng(0).choice(len(prob), 60, p=prob)
    return NetworkPopulation(5, tuple(space[i] for i in idx))


# --- validation helpers ---------------------------------------------------------


def test_population_forms_agree(data):
    mat = graphs_to_matrix(data.graphs)
    adj = np.stack([g.adjacency() for g in data])
    for X in (data, list(data.graphs), mat, adj):
        assert check_population(X).graphs == data.graphs


def test_population_rejects_bad_input():
    with pytest.raises(SchemaMismatch):
        check_population([])
    with pytest.raises(SchemaMismatch):
        check_population(np.zeros((2, 7)))
    with pytest.raises(SchemaMismatch):
        check_population(np.full((2, 6), 2))
    with pytest.raises(SchemaMismatch):
        check_population(np.zeros((2, 3, 4)))
    with pytest.raises(SchemaMismatch):
        check_population(NetworkPopulation(4, (make_graph(4, []),)), n=5)
    assert check_population([], allow_empty=True) == ()


def test_distance_matrix_checks():
    D = np.array([[0, 1], [1, 0.0]])
    assert check_distance_matrix(D) is not None
    for bad in (np.array([[0, 1], [2, 0.0]]), np.array([[1, 1], [1, 0.0]]),
                np.array([[0, np.nan], [np.nan, 0]]), np.zeros((2, 3))):
        with pytest.raises(NotSymmetric):
            check_distance_matrix(bad)


def test_labels_and_probability():
    assert check_labels("ab", 2) == ["a", "b"]
    with pytest.raises(LabelMismatch):
        check_labels([1], 2)
    assert check_probability(0.5, "p") == 0.5
    for p, kw in ((0.0, {"open_low": True}), (1.0, {"open_high": True}), (np.nan, {}), (2, {})):
        with pytest.raises(InvalidConfig):
            check_probability(p, "p", **kw)


# --- estimators -------------------------------------------------------------------


def test_params_round_trip():
    m = SNFModel(metric="hamming", K=300, z_mode="exact")
    assert clone(m).get_params() == m.get_params()
    assert CERModel(n_iter=10).set_params(n_iter=20).n_iter == 20


def test_not_fitted(data):
    with pytest.raises(NotFittedError):
        SNFModel().score_samples(data)
    with pytest.raises(NotFittedError):
        CERModel().score_samples(data)


def test_cer_model(data):
    m = CERModel(n_iter=3000, random_state=1).fit(data)
    lo, hi = m.alpha_interval_
    assert 0 < lo <= m.alpha_mean_ <= hi < 0.5
    assert 0 < m.centroid_mass_ <= 1
    majority = graphs_to_matrix(data.graphs).mean(axis=0) > 0.5
    assert np.array_equal(m.centroid_.vector.astype(bool), majority)
    s = m.score_samples(data)
    assert s.shape == (len(data),) and np.all(s < 0)


def test_snf_model_exact(data):
    m = SNFModel(z_mode="exact", n_iter=3000, cer_iter=1000, random_state=2).fit(data)
    assert m.is_config_ is None and m.priors_.gamma_rate > 0
    lo, hi = m.gamma_interval_
    assert lo < 3.0 < hi
    assert m.centroid_ == CENTRE
    top = m.modal_centroids(3)
    assert top[0][0] == CENTRE and sum(w for _, w in top) <= 1
    rows = m.cycle_table(5)
    assert rows[0].cycle == (0, 1, 2) and rows[0].provenance == "observed"
    s = m.score_samples(data)
    assert np.all(s <= 0)
    assert s[data.graphs.index(CENTRE)] == 0.0


def test_snf_model_deterministic(data):
    kw = dict(z_mode="exact", n_iter=300, cer_iter=300, random_state=5)
    a, b = SNFModel(**kw).fit(data), SNFModel(**kw).fit(data)
    assert a.trace_.dispersion == b.trace_.dispersion


def test_snf_model_surrogate_alpha_override(data):
    m = SNFModel(z_mode="is_surrogate", n_iter=100, K=150, alpha_tilde=0.3, is_burnin=20,
                 is_thin=2, cer_iter=500, random_state=0).fit(data)
    assert m.is_config_.alpha_tilde == 0.3 and m.is_config_.K == 150
    assert m.gamma_mean_ > 0


def test_pairwise_distances(data):
    t = PairwiseDistances(metric="hamming", normalized=False)
    D = t.fit_transform(data)
    assert np.array_equal(D, distance_matrix(data, MetricSpec("hamming", normalized=False)))
    with pytest.raises(InvalidConfig):
        PairwiseDistances(lam=-1).fit(data)
