import numpy as np

from qrflow.generators import gen_mass, gen_random_graph
from qrflow.graph import Graph
from qrflow.solvers import (
    SOLVERS,
    GradientAscentSolver,
    PrecondGradientSolver,
    SolverConfig,
    gradient_ascent,
    precond_gradient,
    solve,
)

import pytest


def test_registry_names():
    assert sorted(SOLVERS) == ["graddescent", "hessupdate", "precondgrad"]
    assert SOLVERS["graddescent"] is GradientAscentSolver
    assert SOLVERS["precondgrad"] is PrecondGradientSolver


def test_gradient_ascent_single_edge(single_edge):
    # given
    graph, mass = single_edge

    # when
    report = gradient_ascent(graph, mass, SolverConfig(alpha=1.0))

    # then
    assert report.solver == "graddescent"
    assert report.converged
    np.testing.assert_allclose(report.J, [1.0], atol=1e-8)
    assert report.primal_value == pytest.approx(1.5, abs=1e-8)


def test_precond_gradient_single_node():
    # given
    graph = Graph.from_edges(1, [])

    # when
    report = precond_gradient(graph, np.zeros(1))

    # then
    assert report.converged
    assert report.iterations == 0
    assert report.J.size == 0


def test_precond_gradient_triangle(triangle):
    # given
    graph, mass = triangle

    # when
    report = precond_gradient(graph, mass, SolverConfig(alpha=1.0))

    # then
    assert report.solver == "precondgrad"
    assert report.converged
    np.testing.assert_allclose(report.J, [2 / 3, 1 / 3, 1 / 3], atol=1e-8)


def test_solvers_agree_on_the_optimum():
    # given
    graph = gen_random_graph(20, seed=9)
    mass = gen_mass(graph, seed=9)
    config = SolverConfig(alpha=1.0)

    # when
    reports = [cls(graph, mass, config).solve() for cls in SOLVERS.values()]

    # then
    reference = reports[0]
    assert reference.converged
    for report in reports[1:]:
        if report.converged:
            assert report.dual_value == pytest.approx(
                reference.dual_value, rel=1e-6
            )
            np.testing.assert_allclose(report.J, reference.J, atol=1e-5)


def test_hessupdate_needs_fewer_iterations_than_gradient_ascent():
    # given
    graph = gen_random_graph(50, seed=1)
    mass = gen_mass(graph, seed=1)
    config = SolverConfig(alpha=0.1)

    # when
    newton = solve(graph, mass, config)
    plain = gradient_ascent(graph, mass, config)

    # then
    assert newton.converged
    assert newton.iterations <= plain.iterations


@pytest.mark.slow
@pytest.mark.parametrize("n", [50, 100])
@pytest.mark.parametrize("alpha", [1e-1, 1.0])
def test_gradient_ascent_stalls_where_hessupdate_converges(n, alpha):
    stalled = 0
    for seed in range(10):
        # given
        graph = gen_random_graph(n, seed)
        mass = gen_mass(graph, seed)
        config = SolverConfig(alpha=alpha)

        # when
        newton = solve(graph, mass, config)
        plain = gradient_ascent(graph, mass, config)

        # then
        assert newton.converged, (seed, newton.gradient_norm)
        assert plain.iterations >= newton.iterations, seed
        stalled += not plain.converged

    assert stalled >= 5
