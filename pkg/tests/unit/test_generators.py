import numpy as np

from qrflow.exceptions import GenerationError
from qrflow.generators import UNIFORM, gen_grid, gen_mass, gen_random_graph, sample_degrees
from qrflow.graph import components

import pytest


def out_degrees(graph):
    return np.bincount(graph.tails, minlength=graph.node_count)


# random graphs
# =============================================================================


def test_gen_random_graph_is_deterministic():
    # when
    first = gen_random_graph(50, seed=4)
    second = gen_random_graph(50, seed=4)

    # then
    np.testing.assert_array_equal(first.tails, second.tails)
    np.testing.assert_array_equal(first.heads, second.heads)
    np.testing.assert_array_equal(first.costs, second.costs)


def test_gen_random_graph_degrees_are_capped():
    # when
    graph = gen_random_graph(50, seed=0)

    # then
    degrees = out_degrees(graph)
    assert degrees.min() >= 1
    assert degrees.max() <= 10


def test_gen_random_graph_is_bidirectional_and_connected():
    # when
    graph = gen_random_graph(50, seed=1)

    # then
    edges = set(graph.edges())
    assert all((w, v) in edges for v, w in edges)
    assert components(graph, np.ones(graph.edge_count, dtype=bool)).count == 1
    np.testing.assert_array_equal(out_degrees(graph), np.bincount(graph.heads))


def test_gen_random_graph_mean_degree():
    # when
    means = [out_degrees(gen_random_graph(50, seed)).mean() for seed in range(100)]

    # then
    assert 4.5 <= np.mean(means) <= 5.5


def test_gen_random_graph_with_two_nodes():
    graph = gen_random_graph(2, seed=0)

    assert sorted(graph.edges()) == [(0, 1), (1, 0)]


def test_gen_random_graph_uniform_costs():
    # when
    graph = gen_random_graph(40, seed=2, costs=UNIFORM)

    # then
    assert np.all(graph.costs > 0)
    assert np.all(graph.costs <= 1)
    assert np.unique(graph.costs).size > 1


def test_gen_random_graph_unit_costs():
    assert np.all(gen_random_graph(40, seed=2).costs == 1.0)


def test_gen_random_graph_rejects_a_single_node():
    with pytest.raises(GenerationError):
        gen_random_graph(1, seed=0)


def test_gen_random_graph_rejects_unknown_cost_models():
    with pytest.raises(ValueError):
        gen_random_graph(10, seed=0, costs="lognormal")


def test_sample_degrees_sum_is_even():
    # given
    rng = np.random.default_rng(0)

    # when
    degrees = sample_degrees(100, rng)

    # then
    assert degrees.sum() % 2 == 0
    assert degrees.sum() >= 2 * 99


# grids
# =============================================================================


def test_gen_grid_counts():
    # when
    graph = gen_grid(10)

    # then
    assert graph.node_count == 100
    assert graph.edge_count == 360


def test_gen_grid_interior_degree():
    # when
    degrees = out_degrees(gen_grid(10))

    # then
    assert degrees[5 * 10 + 5] == 4
    assert degrees[0] == 2
    assert degrees[5] == 3


def test_gen_grid_smallest():
    graph = gen_grid(2)

    assert graph.node_count == 4
    assert graph.edges() == [
        (0, 1), (1, 0), (0, 2), (2, 0), (1, 3), (3, 1), (2, 3), (3, 2)
    ]
    assert np.all(graph.costs == 1.0)


def test_gen_grid_rejects_a_single_cell():
    with pytest.raises(GenerationError):
        gen_grid(1)


# mass
# =============================================================================


def test_gen_mass_is_balanced():
    # given
    graph = gen_random_graph(100, seed=0)

    # when
    mass = gen_mass(graph, seed=0)

    # then
    assert abs(mass.sum()) <= 1e-12
    assert np.count_nonzero(mass) == 10


def test_gen_mass_is_deterministic():
    graph = gen_grid(5)

    np.testing.assert_array_equal(gen_mass(graph, seed=3), gen_mass(graph, seed=3))


def test_gen_mass_chooses_at_least_two_nodes():
    # when
    mass = gen_mass(gen_grid(2), seed=0)

    # then
    assert np.count_nonzero(mass) == 2
    assert mass.sum() == pytest.approx(0.0)
