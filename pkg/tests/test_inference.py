import math

import numpy as np
import pytest

from snfcycles.errors import EmptySample, EmptyTrace, InvalidConfig, SpaceTooLarge
from snfcycles.graphs import NetworkPopulation, complete_graph, empty_graph, make_graph
from snfcycles.inference import (
    MOVES,
    CerPriors,
    IsConfig,
    IsSample,
    MoveMixture,
    SnfPriors,
    Trace,
    bernoulli_log_density,
    draw_is_sample,
    estimate_log_z_is,
    fit_cer,
    fit_snf,
    fit_snf_auxvar,
    gamma_prior_from_cer,
    is_config_from_cer,
    medoid_network,
    propose_centroid_bernoulli,
    propose_centroid_flip,
    propose_gamma,
    shrink_frequencies,
)
from snfcycles.metrics import MetricSpec
from snfcycles.models import CerChain, CerParams, SnfParams, exact_log_z, sample_snf
from snfcycles.rng import substream

RAW = MetricSpec("hamming", normalized=False)
TRIANGLE_TAIL = make_graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)])


def _is_estimates(centroid, gamma, metric, alpha, K, reps, seed, thin=5):
    chain = CerChain(CerParams(centroid, alpha), None, substream(seed, "test-is"))
    chain.draw(1, burnin=500)
    return np.array([estimate_log_z_is(centroid, gamma, metric, draw_is_sample(chain, K, 0, thin))
                     for _ in range(reps)])


def _within_3se(log_est, log_z):
    z = np.exp(log_est)
    se = z.std(ddof=1) / math.sqrt(len(z))
    return abs(z.mean() - math.exp(log_z)) <= 3 * se


# --- proposals ----------------------------------------------------------------


def test_flip_with_zero_omega_is_identity():
    g = make_graph(5, [(0, 1)])
    assert propose_centroid_flip(g, 0.0, 1) is g


def test_flip_changes_about_omega_pairs():
    g = empty_graph(20)
    rng = np.random.default_rng(0)
    counts = [propose_centroid_flip(g, 0.05, rng).num_edges for _ in range(2000)]
    assert np.mean(counts) == pytest.approx(190 * 0.05, rel=0.05)


def test_bernoulli_complete_data():
    freq = shrink_frequencies(np.ones(10), 10_000)
    prop = propose_centroid_bernoulli(freq, 3)
    assert prop.graph == complete_graph(5)


def test_bernoulli_is_independence_proposal():
    rng = np.random.default_rng(1)
    freq = shrink_frequencies(rng.random(10), 5)
    target = make_graph(5, [(0, 1), (3, 4)])
    reverse = {propose_centroid_bernoulli(freq, s, current=target).log_q_reverse for s in range(20)}
    assert len(reverse) == 1
    assert reverse.pop() == pytest.approx(bernoulli_log_density(target, freq))
    prop = propose_centroid_bernoulli(freq, 7, current=target)
    assert prop.log_q_forward == pytest.approx(bernoulli_log_density(prop.graph, freq))


def test_shrinkage_keeps_probabilities_inside():
    p = shrink_frequencies(np.array([0.0, 1.0, 0.5]), 4)
    assert np.allclose(p, [0.1, 0.9, 0.5])
    with pytest.raises(InvalidConfig):
        propose_centroid_bernoulli(np.array([1.2] * 10))


def test_gamma_reflection():
    assert propose_gamma(0.5, u=-0.7) == pytest.approx(0.2)
    assert propose_gamma(0.5, u=0.0) == 0.5


def test_gamma_proposal_symmetric():
    rng = np.random.default_rng(5)
    kernel = ((0.05, 1.0),)
    draws = np.array([propose_gamma(0.1, kernel, rng) for _ in range(1_000_000)])
    assert draws.min() >= 0.05 and draws.max() <= 0.15
    left, _ = np.histogram(0.1 - draws[draws < 0.1], bins=10, range=(0, 0.05))
    right, _ = np.histogram(draws[draws > 0.1] - 0.1, bins=10, range=(0, 0.05))
    expected = len(draws) / 20
    assert np.all(np.abs(left - right) < 4 * math.sqrt(2 * expected))


def test_move_mixture_validation():
    with pytest.raises(InvalidConfig):
        MoveMixture(0.5, 0.5, 0.5)
    with pytest.raises(InvalidConfig):
        MoveMixture(gamma_kernel=((0.0, 1.0),))
    assert MoveMixture().omega_for(20) == pytest.approx(2 / 190)


# --- importance sampling --------------------------------------------------------


def test_is_gamma_zero_two_nodes():
    est = _is_estimates(empty_graph(2), 0.0, RAW, 0.25, 10_000, 30, seed=1, thin=1)
    assert _within_3se(est, math.log(2))


def test_is_two_nodes_hamming():
    gamma = math.log(2)
    assert exact_log_z(SnfParams(empty_graph(2), gamma, RAW)) == pytest.approx(math.log(1.5))
    est = _is_estimates(empty_graph(2), gamma, RAW, 0.25, 10_000, 30, seed=2, thin=1)
    assert _within_3se(est, math.log(1.5))


@pytest.mark.parametrize("metric", [RAW, MetricSpec("hs")], ids=["hamming", "hs"])
@pytest.mark.parametrize("centroid", [make_graph(4, [(0, 1), (1, 2), (0, 2)]), TRIANGLE_TAIL],
                         ids=["n4", "n5"])
def test_is_unbiased_natural_scale(metric, centroid):
    gamma = 0.6
    lz = exact_log_z(SnfParams(centroid, gamma, metric))
    est = _is_estimates(centroid, gamma, metric, 0.4, 300, 200, seed=3)
    assert _within_3se(est, lz)


def test_empty_sample():
    sample = IsSample(np.zeros((0, 10), dtype=np.uint8), np.zeros(0), 5)
    with pytest.raises(EmptySample):
        estimate_log_z_is(TRIANGLE_TAIL, 0.5, MetricSpec("hs"), sample)


# --- CER fit --------------------------------------------------------------------


def test_cer_identical_copies():
    g = make_graph(4, [(0, 1), (1, 3), (2, 3)])
    pop = NetworkPopulation(4, (g,) * 8)
    tr = fit_cer(pop, CerPriors(empty_graph(4), alpha_a=1, alpha_b=50), iters=4000, seed=1)
    from snfcycles.analysis import posterior_mode_centroid
    mode, mass = posterior_mode_centroid(tr, 1, 1000)[0]
    assert mode == g and mass > 0.9


def test_cer_trace_invariants():
    pop = NetworkPopulation(5, tuple(sample_snf(SnfParams(TRIANGLE_TAIL, 0.6), iters=5000,
                                                burnin=1000, thin=1000, seed=1)))
    tr = fit_cer(pop, CerPriors(pop.graphs[0]), iters=1500, seed=2)
    a = np.asarray(tr.dispersion)
    assert len(tr) == 1500 and np.all((a > 0) & (a < 0.5))
    assert sum(tr.proposed_counts().values()) == 1500
    assert all(tr.accepted_counts()[m] <= tr.proposed_counts()[m] for m in MOVES)
    again = fit_cer(pop, CerPriors(pop.graphs[0]), iters=1500, seed=2)
    assert again.dispersion == tr.dispersion and again.centroids == tr.centroids


def test_cer_derived_configs():
    pop = NetworkPopulation(5, tuple(sample_snf(SnfParams(TRIANGLE_TAIL, 0.6), iters=5000,
                                                burnin=1000, thin=1000, seed=1)))
    tr = fit_cer(pop, CerPriors(pop.graphs[0]), iters=2000, seed=2)
    cfg = is_config_from_cer(tr, K=500, burn_in=500, cap=0.01)
    assert cfg.alpha_tilde == 0.01 and cfg.K == 500
    loose = is_config_from_cer(tr, K=500, burn_in=500, cap=0.49)
    assert loose.alpha_tilde == pytest.approx(np.mean(tr.dispersion[500:]))
    shape, rate = gamma_prior_from_cer(tr, pop, MetricSpec("hs"), 500)
    assert shape == 1.0 and rate > 0
    with pytest.raises(InvalidConfig):
        IsConfig(K=50)


def test_medoid_network():
    a, b = make_graph(4, [(0, 1)]), make_graph(4, [(0, 1), (2, 3)])
    c = make_graph(4, [(0, 1), (2, 3), (1, 2)])
    assert medoid_network(NetworkPopulation(4, (a, b, c)), RAW) == b


# --- SNF fits -----------------------------------------------------------------------


@pytest.fixture(scope="module")
def n5_data():
    graphs = sample_snf(SnfParams(TRIANGLE_TAIL, 0.6), iters=6000, burnin=1000, thin=1000, seed=11)
    return NetworkPopulation(5, tuple(graphs))


def test_exact_fit_trace(n5_data):
    pri = SnfPriors(n5_data.graphs[0], 0.01, 1.0, 1.0)
    tr = fit_snf(n5_data, pri, MetricSpec("hs"), iters=800, seed=4)
    g = np.asarray(tr.dispersion)
    assert len(tr) == 800 and np.all(g > 0)
    assert sum(tr.proposed_counts().values()) == 800
    assert 0.05 < tr.acceptance_rate() < 0.95
    again = fit_snf(n5_data, pri, MetricSpec("hs"), iters=800, seed=4)
    assert again.dispersion == tr.dispersion and again.centroids == tr.centroids


@pytest.mark.parametrize("mode", ["is_exact_cycles", "is_surrogate"])
def test_is_modes_run(n5_data, mode):
    pri = SnfPriors(n5_data.graphs[0], 0.01, 1.0, 1.0)
    cfg = IsConfig(K=200, alpha_tilde=0.3, centroid_tilde=n5_data.graphs[0], burnin=50, thin=2)
    tr = fit_snf(n5_data, pri, MetricSpec("hs"), is_cfg=cfg, z_mode=mode, iters=150, seed=4)
    assert len(tr) == 150 and np.all(np.asarray(tr.dispersion) > 0)
    if mode == "is_surrogate":
        assert tr.config["surrogate_trainings"] >= 1


def test_fit_guards(n5_data):
    pri = SnfPriors(n5_data.graphs[0])
    with pytest.raises(InvalidConfig):
        fit_snf(n5_data, pri, MetricSpec("hs"), z_mode="is_exact_cycles", iters=10)
    with pytest.raises(InvalidConfig):
        fit_snf(n5_data, pri, MetricSpec("hs"), z_mode="bogus", iters=10)
    big = NetworkPopulation(8, (empty_graph(8),))
    with pytest.raises(SpaceTooLarge):
        fit_snf(big, SnfPriors(empty_graph(8)), MetricSpec("hs"), z_mode="exact", iters=10)


def test_trivial_moves_always_accepted(n5_data):
    pri = SnfPriors(n5_data.graphs[0])
    still = MoveMixture(1.0, 0.0, 0.0, omega=0.0)
    tr = fit_snf_auxvar(n5_data, pri, MetricSpec("hs"), still,
                        CerParams(n5_data.graphs[0], 0.3), iters=50, seed=1)
    assert all(tr.accepted)
    tr = fit_snf(n5_data, pri, MetricSpec("hs"), still, iters=50, seed=1)
    assert all(tr.accepted)


def test_auxvar_trace_valid(n5_data):
    pri = SnfPriors(n5_data.graphs[0])
    tr = fit_snf_auxvar(n5_data, pri, MetricSpec("hs"), None,
                        CerParams(n5_data.graphs[0], 0.3), iters=200, seed=2)
    assert len(tr) == 200 and np.all(np.asarray(tr.dispersion) > 0)
    assert sum(tr.proposed_counts().values()) == 200


# --- traces ---------------------------------------------------------------------------


def test_trace_files(tmp_path, n5_data):
    pri = SnfPriors(n5_data.graphs[0])
    tr = fit_snf(n5_data, pri, MetricSpec("hs"), iters=30, seed=1)
    tr.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iter,move_type,accepted,dispersion,centroid_fingerprint_hex,log_post_kernel,wall_ms"
    assert len(lines) == 31
    tr.write_centroid_dictionary(tmp_path / "c.json")
    import json
    d = json.loads((tmp_path / "c.json").read_text())
    assert n5_data.graphs[0].fingerprint_hex in d


def test_empty_trace():
    with pytest.raises(EmptyTrace):
        Trace(4, "snf").dispersion_array()
