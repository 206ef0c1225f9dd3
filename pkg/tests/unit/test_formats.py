import io
import textwrap

import numpy as np

from qrflow.exceptions import ImbalancedMassError, ParseError
from qrflow.formats import (
    read_flow,
    read_graph,
    read_mass,
    write_flow,
    write_graph,
    write_mass,
)
from qrflow.graph import Graph

import pytest


TRIANGLE = textwrap.dedent(
    """
    # one unit from 0 to 1, directly or through 2
    graph 3 3
    0 1 2.0
    0 2 1.0
    2 1 1.0   # the second leg
    """
)


def read(text, reader, *args):
    return reader(io.StringIO(textwrap.dedent(text)), *args)


# graphs
# =============================================================================


def test_read_graph():
    # when
    graph = read(TRIANGLE, read_graph)

    # then
    assert graph.node_count == 3
    assert graph.edges() == [(0, 1), (0, 2), (2, 1)]
    assert graph.costs.tolist() == [2.0, 1.0, 1.0]


def test_write_graph():
    # given
    graph = Graph.from_edges(2, [(0, 1), (1, 0)], costs=[0.5, 1.0])
    fileobj = io.StringIO()

    # when
    write_graph(graph, fileobj)

    # then
    assert fileobj.getvalue() == "graph 2 2\n0 1 0.5\n1 0 1.0\n"


def test_write_graph_is_read_back_exactly():
    # given
    graph = Graph.from_edges(3, [(0, 1), (1, 2)], costs=[0.1, 1 / 3])
    fileobj = io.StringIO()

    # when
    write_graph(graph, fileobj)
    fileobj.seek(0)
    copy = read_graph(fileobj)

    # then
    assert copy.edges() == graph.edges()
    assert copy.costs.tolist() == graph.costs.tolist()


def test_read_graph_raises_on_an_empty_file():
    with pytest.raises(ParseError):
        read("# nothing here\n", read_graph)


def test_read_graph_raises_on_a_bad_header():
    # when
    with pytest.raises(ParseError) as excinfo:
        read("digraph 3 3\n", read_graph)

    # then
    assert excinfo.value.line == 1


def test_read_graph_reports_the_line_of_a_bad_cost():
    # given
    text = """\
        graph 2 1
        0 1 cheap
        """

    # when
    with pytest.raises(ParseError) as excinfo:
        read(text, read_graph)

    # then
    assert str(excinfo.value) == "line 2: Expected a number for the cost, got 'cheap'."


def test_read_graph_raises_on_a_wrong_edge_count():
    with pytest.raises(ParseError):
        read("graph 2 2\n0 1 1.0\n", read_graph)


def test_read_graph_raises_on_an_invalid_graph():
    # given - node 2 is disconnected
    text = "graph 3 1\n0 1 1.0\n"

    # when
    with pytest.raises(ParseError) as excinfo:
        read(text, read_graph)

    # then
    assert "disconnected" in str(excinfo.value)


# mass and flow vectors
# =============================================================================


def test_read_mass():
    # given
    graph = read(TRIANGLE, read_graph)

    # when
    mass = read("0 -1.0\n1 1.0\n", read_mass, graph)

    # then
    assert mass.tolist() == [-1.0, 1.0, 0.0]


def test_read_mass_raises_when_unbalanced():
    # given
    graph = read(TRIANGLE, read_graph)

    # when
    with pytest.raises(ImbalancedMassError) as excinfo:
        read("0 -1.0\n1 2.0\n", read_mass, graph)

    # then
    assert str(excinfo.value) == (
        "Invalid mass file: Mass is unbalanced: entries sum to 1.000e+00."
    )


@pytest.mark.parametrize(
    "text, message",
    [
        ("3 1.0\n", "out of range"),
        ("0 -1.0\n0 1.0\n", "listed twice"),
        ("0\n", "Expected"),
        ("zero 1.0\n", "integer"),
    ],
)
def test_read_mass_raises_on_malformed_lines(text, message):
    graph = read(TRIANGLE, read_graph)

    with pytest.raises(ParseError, match=message):
        read(text, read_mass, graph)


def test_write_mass_lists_nonzero_entries():
    # given
    fileobj = io.StringIO()

    # when
    write_mass(np.array([-1.5, 0.0, 1.5]), fileobj)

    # then
    assert fileobj.getvalue() == "0 -1.5\n2 1.5\n"


def test_read_flow_leaves_unlisted_edges_empty():
    # given
    graph = read(TRIANGLE, read_graph)

    # when
    flow = read("2 0.25\n", read_flow, graph)

    # then
    assert flow.tolist() == [0.0, 0.0, 0.25]


def test_write_flow_is_read_back_exactly():
    # given
    graph = read(TRIANGLE, read_graph)
    flow = np.array([2 / 3, 1 / 3, 1 / 3])
    fileobj = io.StringIO()

    # when
    write_flow(flow, fileobj)
    fileobj.seek(0)

    # then
    assert read_flow(fileobj, graph).tolist() == flow.tolist()
