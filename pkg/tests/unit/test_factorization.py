import numpy as np
import scipy.linalg

from qrflow.exceptions import FactorizationError
from qrflow.factorization import (
    ADD_COMPONENT,
    ADD_EDGE,
    REMOVE_COMPONENT,
    REMOVE_EDGE,
    CholeskyFactor,
    FactorEvent,
    apply_events,
    augmented_laplacian,
    factorize,
    pinv_apply,
    rank1_downdate,
    rank1_update,
    solve_factored,
)
from qrflow.graph import Graph, active_laplacian_matrix, components
from qrflow.generators import gen_random_graph

from hypothesis import given, settings, strategies as st
import pytest


def identity_factor(n):
    return CholeskyFactor(np.eye(n))


def k2():
    graph = Graph.from_edges(2, [(0, 1)])
    mask = np.array([True])
    return graph, mask, components(graph, mask)


# factorize
# =============================================================================


def test_factorize_single_node():
    # given
    graph = Graph.from_edges(1, [])
    mask = np.zeros(0, dtype=bool)

    # when
    factor = factorize(graph, mask, components(graph, mask))

    # then
    np.testing.assert_allclose(factor.R, [[1.0]])
    assert factor.update_count == 0


def test_factorize_single_active_edge():
    # given
    graph, mask, labeling = k2()
    expected = scipy.linalg.cholesky(np.array([[1.5, -0.5], [-0.5, 1.5]]))

    # when
    factor = factorize(graph, mask, labeling)

    # then
    np.testing.assert_allclose(factor.R, expected, atol=1e-14)
    np.testing.assert_allclose(factor.gram(), [[1.5, -0.5], [-0.5, 1.5]], atol=1e-14)


def test_factorize_all_inactive_is_identity():
    # given
    graph = gen_random_graph(10, seed=0)
    mask = np.zeros(graph.edge_count, dtype=bool)

    # when
    factor = factorize(graph, mask, components(graph, mask))

    # then
    np.testing.assert_allclose(factor.R, np.eye(10), atol=1e-14)


# rank-1 update and downdate
# =============================================================================


def test_rank1_update_on_a_diagonal():
    # when
    factor = rank1_update(identity_factor(2), np.array([1.0, 0.0]))

    # then
    np.testing.assert_allclose(factor.R, np.diag([np.sqrt(2.0), 1.0]), atol=1e-15)
    assert factor.update_count == 1


def test_rank1_update_with_a_full_vector():
    # when
    factor = rank1_update(identity_factor(2), np.array([1.0, 1.0]))

    # then
    np.testing.assert_allclose(factor.gram(), [[2.0, 1.0], [1.0, 2.0]], atol=1e-14)
    assert np.all(np.diag(factor.R) > 0)


def test_rank1_update_with_zero_vector_is_a_no_op():
    # given
    factor = identity_factor(3)

    # when
    result = rank1_update(factor, np.zeros(3))

    # then
    np.testing.assert_array_equal(result.R, factor.R)


def test_rank1_update_does_not_modify_input_by_default():
    # given
    factor = identity_factor(2)

    # when
    rank1_update(factor, np.array([1.0, 1.0]))

    # then
    np.testing.assert_array_equal(factor.R, np.eye(2))
    assert factor.update_count == 0


def test_rank1_downdate_on_a_diagonal():
    # given
    factor = CholeskyFactor(np.diag([np.sqrt(2.0), 1.0]))

    # when
    result = rank1_downdate(factor, np.array([1.0, 0.0]))

    # then
    np.testing.assert_allclose(result.R, np.eye(2), atol=1e-15)


def test_rank1_downdate_with_zero_vector_is_a_no_op():
    factor = CholeskyFactor(np.diag([2.0, 3.0]))

    np.testing.assert_array_equal(rank1_downdate(factor, np.zeros(2)).R, factor.R)


def test_rank1_downdate_raises_when_definiteness_is_lost():
    with pytest.raises(FactorizationError):
        rank1_downdate(identity_factor(2), np.array([1.0, 0.0]))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_update_then_downdate_restores_the_factor(seed):
    # given
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 10))
    A = rng.normal(size=(n, n))
    factor = CholeskyFactor(scipy.linalg.cholesky(A @ A.T + n * np.eye(n)))
    x = rng.normal(size=n)

    # when
    result = rank1_downdate(rank1_update(factor, x), x)

    # then
    np.testing.assert_allclose(result.gram(), factor.gram(), atol=1e-10)


def test_apply_events_runs_updates_before_downdates():
    # given - downdating first would lose definiteness
    factor = identity_factor(2)
    events = [
        FactorEvent(REMOVE_EDGE, np.array([1.0, 0.0])),
        FactorEvent(ADD_EDGE, np.array([1.0, 0.0])),
    ]

    # when
    apply_events(factor, events)

    # then
    np.testing.assert_allclose(factor.R, np.eye(2), atol=1e-14)
    assert factor.update_count == 2


def test_apply_events_tracks_a_merge():
    # given - two isolated nodes, then the edge between them becomes active
    graph = Graph.from_edges(2, [(0, 1)])
    before = np.array([False])
    factor = factorize(graph, before, components(graph, before))
    merged = np.array([1.0, 1.0]) / np.sqrt(2.0)
    events = [
        FactorEvent(ADD_EDGE, graph.edge_vector(0)),
        FactorEvent(ADD_COMPONENT, merged),
        FactorEvent(REMOVE_COMPONENT, np.array([1.0, 0.0])),
        FactorEvent(REMOVE_COMPONENT, np.array([0.0, 1.0])),
    ]

    # when
    apply_events(factor, events)

    # then
    after = np.array([True])
    np.testing.assert_allclose(
        factor.gram(), augmented_laplacian(graph, after, components(graph, after)),
        atol=1e-12,
    )


# solves
# =============================================================================


def test_solve_factored_with_identity():
    b = np.array([1.0, -2.0, 3.0])

    np.testing.assert_allclose(solve_factored(identity_factor(3), b), b)


def test_solve_factored_two_by_two():
    # given
    factor = CholeskyFactor(scipy.linalg.cholesky(np.array([[2.0, 1.0], [1.0, 2.0]])))

    # when
    x = solve_factored(factor, np.array([1.0, 1.0]))

    # then
    np.testing.assert_allclose(x, [1.0 / 3.0, 1.0 / 3.0], atol=1e-14)


def test_solve_factored_of_zero_is_zero():
    factor = CholeskyFactor(scipy.linalg.cholesky(np.array([[2.0, 1.0], [1.0, 2.0]])))

    np.testing.assert_array_equal(solve_factored(factor, np.zeros(2)), np.zeros(2))


def test_solve_factored_matches_a_dense_solve():
    # given
    graph = gen_random_graph(25, seed=4)
    mask = np.random.default_rng(4).random(graph.edge_count) < 0.4
    labeling = components(graph, mask)
    factor = factorize(graph, mask, labeling)
    b = np.random.default_rng(5).normal(size=25)

    # when
    x = solve_factored(factor, b)

    # then
    expected = np.linalg.solve(augmented_laplacian(graph, mask, labeling), b)
    assert np.linalg.norm(x - expected) <= 1e-10 * np.linalg.norm(expected)


def test_pinv_apply_on_k2():
    # given
    graph, mask, labeling = k2()
    factor = factorize(graph, mask, labeling)

    # when
    x = pinv_apply(factor, labeling, np.array([1.0, -1.0]))

    # then
    np.testing.assert_allclose(x, [0.5, -0.5], atol=1e-14)


def test_pinv_apply_annihilates_the_null_space():
    # given
    graph = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    mask = np.array([True, False, True])
    labeling = components(graph, mask)
    factor = factorize(graph, mask, labeling)

    # when
    x = pinv_apply(factor, labeling, labeling.indicator(0) - 2 * labeling.indicator(1))

    # then
    np.testing.assert_allclose(x, np.zeros(4), atol=1e-14)


def test_pinv_apply_of_zero_is_zero():
    graph, mask, labeling = k2()
    factor = factorize(graph, mask, labeling)

    np.testing.assert_array_equal(pinv_apply(factor, labeling, np.zeros(2)), np.zeros(2))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_pinv_apply_matches_the_moore_penrose_inverse(seed):
    # given
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 13))
    graph = gen_random_graph(n, seed=seed % 1000)
    mask = rng.random(graph.edge_count) < 0.5
    labeling = components(graph, mask)
    factor = factorize(graph, mask, labeling)
    L = active_laplacian_matrix(graph, mask)

    # when
    columns = [pinv_apply(factor, labeling, e) for e in np.eye(n)]
    pinv = np.column_stack(columns)

    # then
    eigenvalues, eigenvectors = np.linalg.eigh(L)
    inverted = np.zeros_like(eigenvalues)
    inverted[eigenvalues > 1e-9] = 1.0 / eigenvalues[eigenvalues > 1e-9]
    expected = eigenvectors @ np.diag(inverted) @ eigenvectors.T
    np.testing.assert_allclose(pinv, expected, atol=1e-9)
    np.testing.assert_allclose(L @ pinv @ L, L, atol=1e-9)
    np.testing.assert_allclose(pinv @ L @ pinv, pinv, atol=1e-9)
    np.testing.assert_allclose(L @ pinv, (L @ pinv).T, atol=1e-9)
    np.testing.assert_allclose(pinv @ L, (pinv @ L).T, atol=1e-9)
    np.testing.assert_allclose(
        labeling.null_basis.T @ pinv, np.zeros((labeling.count, n)), atol=1e-10
    )
