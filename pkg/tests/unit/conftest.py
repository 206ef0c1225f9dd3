import numpy as np

from qrflow.generators import gen_mass, gen_random_graph
from qrflow.graph import Graph

import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance runs")


@pytest.fixture
def single_edge():
    """Edge (0, 1) with cost 1, carrying one unit of mass."""
    graph = Graph.from_edges(2, [(0, 1)])
    return graph, np.array([-1.0, 1.0])


@pytest.fixture
def triangle():
    """A -> B costing 2, A -> C and C -> B costing 1; one unit from A to B."""
    graph = Graph.from_edges(3, [(0, 1), (0, 2), (2, 1)], costs=[2.0, 1.0, 1.0])
    return graph, np.array([-1.0, 1.0, 0.0])


@pytest.fixture
def random_instance():
    graph = gen_random_graph(30, seed=3)
    return graph, gen_mass(graph, seed=3)
