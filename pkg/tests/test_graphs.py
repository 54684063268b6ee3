import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snfcycles.errors import (
    DuplicateEdge,
    InvalidSpec,
    NodeOutOfRange,
    ParseError,
    SchemaMismatch,
    SelfLoop,
    SpaceTooLarge,
)
from snfcycles.graphs import (
    GeneratorSpec,
    LabeledGraph,
    NetworkPopulation,
    benchmark_corpus,
    complete_graph,
    concat_populations,
    generate,
    graph_space,
    make_graph,
    read_edge_csv,
    read_population,
    write_population,
)


def test_figure1_graph(figure1):
    assert figure1.n == 6
    assert figure1.num_edges == 7
    assert (0, 5) in figure1.edges


def test_make_graph_is_order_insensitive():
    a = make_graph(4, [(0, 1), (3, 2)])
    b = make_graph(4, [(2, 3), (1, 0)])
    assert a == b and a.edges == ((0, 1), (2, 3))


def test_empty_graph():
    assert make_graph(3, []).num_edges == 0


@pytest.mark.parametrize("edges, err", [
    ([(0, 0)], SelfLoop),
    ([(0, 3)], NodeOutOfRange),
    ([(-1, 1)], NodeOutOfRange),
    ([(0, 1), (1, 0)], DuplicateEdge),
])
def test_make_graph_errors(edges, err):
    with pytest.raises(err):
        make_graph(3, edges)


@pytest.mark.parametrize("n, size", [(1, 1), (2, 2), (3, 8), (4, 64), (5, 1024)])
def test_graph_space_size_and_distinct(n, size):
    space = list(graph_space(n))
    assert len(space) == size
    assert len(set(space)) == size
    assert [g.bits for g in space] == sorted(g.bits for g in space)


def test_graph_space_guard():
    with pytest.raises(SpaceTooLarge):
        list(graph_space(7))


def test_bitmask_order_is_big_endian():
    # pair (0,1) is the most significant bit
    assert make_graph(3, [(0, 1)]).bits == 0b100
    assert make_graph(3, [(1, 2)]).bits == 0b001


def test_er_full_probability_gives_complete_graph():
    pop = generate(GeneratorSpec("er", 4, p=1.0), 1)
    assert pop.graphs[0] == complete_graph(4)


@pytest.mark.parametrize("variant", ["er", "pa", "sbm"])
def test_fixed_density_is_exact(variant):
    corpus = benchmark_corpus(seed=3, variants=(variant,))
    assert len(corpus) == 10
    assert all(g.num_edges == 19 for g in corpus)


def test_sbm_blocks_are_denser_within():
    spec = GeneratorSpec("sbm", 20, block_sizes=(10, 10),
                         block_probs=((0.2, 0.01), (0.01, 0.3)), seed=1)
    within = across = 0
    for g in generate(spec, 200):
        for i, j in g.edges:
            if (i < 10) == (j < 10):
                within += 1
            else:
                across += 1
    # 90 within-block pairs at about 0.25 against 100 cross pairs at 0.01
    assert within / 90 > 5 * across / 100


def test_pa_without_repair_is_a_tree():
    g = generate(GeneratorSpec("pa", 15, seed=2), 1).graphs[0]
    assert g.num_edges == 14


def test_generators_are_deterministic():
    spec = GeneratorSpec("er", 10, p=0.3, seed=9)
    assert generate(spec, 5).graphs == generate(spec, 5).graphs


@pytest.mark.parametrize("kwargs", [
    dict(variant="er", n=5, p=1.5),
    dict(variant="pa", n=5, power=-1),
    dict(variant="sbm", n=5, block_sizes=(2, 2), block_probs=((0.1, 0.1), (0.1, 0.1))),
    dict(variant="sbm", n=4, block_sizes=(2, 2), block_probs=((0.1, 0.2), (0.3, 0.1))),
    dict(variant="er", n=5, target_density=1.0),
    dict(variant="xyz", n=5),
])
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpec):
        GeneratorSpec(**kwargs)


@settings(max_examples=40, deadline=None)
@given(variant=st.sampled_from(["er", "pa", "sbm"]), n=st.integers(4, 12),
       density=st.one_of(st.none(), st.floats(0.05, 0.6)), seed=st.integers(0, 2**32))
def test_generated_graphs_are_valid(variant, n, density, seed):
    half = n // 2
    spec = GeneratorSpec(variant, n, p=0.3, block_sizes=(half, n - half),
                         block_probs=((0.5, 0.1), (0.1, 0.5)), target_density=density, seed=seed)
    for g in generate(spec, 3):
        assert all(0 <= i < j < n for i, j in g.edges)
        if density is not None:
            assert g.num_edges == spec.target_edges()


def test_population_requires_members():
    with pytest.raises(Exception):
        NetworkPopulation(3, ())


def test_population_roundtrip(tmp_path):
    pop = generate(GeneratorSpec("er", 18, p=0.2, seed=4), 3)
    pop = NetworkPopulation(18, pop.graphs, tuple(f"sp{k}" for k in range(18)))
    path = tmp_path / "data.json"
    write_population(pop, path)
    back = read_population(path)
    assert back.n == 18 and len(back) == 3
    assert back.graphs == pop.graphs and back.labels == pop.labels
    first = path.read_bytes()
    write_population(back, path)
    assert path.read_bytes() == first


def test_population_file_is_one_based(tmp_path):
    path = tmp_path / "d.json"
    write_population(NetworkPopulation(3, (make_graph(3, [(0, 2)]),)), path)
    assert json.loads(path.read_text())["networks"] == [[[1, 3]]]


def test_out_of_range_edge_in_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 18, "networks": [[[1, 20]]]}))
    with pytest.raises(SchemaMismatch):
        read_population(path)


def test_malformed_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        read_population(path)


def test_edge_csv_import(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("graph_id,u,v\n1,1,2\n1,2,3\n2,1,3\n")
    pop = read_edge_csv(path, n=3)
    assert len(pop) == 2
    assert pop.graphs[0] == make_graph(3, [(0, 1), (1, 2)])


def test_group_tags_survive_roundtrip(tmp_path):
    pop = concat_populations([generate(GeneratorSpec("er", 5, seed=1), 2),
                              generate(GeneratorSpec("pa", 5, seed=1), 2)], ["er", "pa"])
    path = tmp_path / "c.json"
    write_population(pop, path)
    assert read_population(path).groups == ("er", "er", "pa", "pa")


def test_vector_roundtrip():
    rng = np.random.default_rng(0)
    vec = rng.integers(0, 2, 45).astype(np.uint8)
    assert np.array_equal(LabeledGraph.from_vector(10, vec).vector, vec)
