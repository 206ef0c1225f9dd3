"""Line-based text formats for graphs, mass vectors and flows.

A graph file starts with a header ``graph <node_count> <edge_count>`` followed
by one ``<tail> <head> <cost>`` line per edge, nodes numbered from 0. A mass
file has one ``<node> <value>`` line per node carrying mass; nodes not listed
carry none. A flow file has one ``<edge> <value>`` line per edge with nonzero
flow. Blank lines and anything after a ``#`` are ignored.

"""

import numpy as np

from .exceptions import GraphError, ImbalancedMassError, ParseError
from .graph import Graph, check_mass


def _lines(fileobj):
    """Yield (line number, fields) for every line with content."""
    for number, line in enumerate(fileobj, start=1):
        content = line.split("#", 1)[0].strip()
        if content:
            yield number, content.split()


def _int(text, number, what):
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"Expected an integer {what}, got {text!r}.", number)


def _float(text, number, what):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"Expected a number for the {what}, got {text!r}.", number)


def read_graph(fileobj):
    """Read a graph file.

    Raises
    ------
    ParseError
        If the file is malformed or describes an invalid graph.

    """
    lines = _lines(fileobj)
    try:
        number, fields = next(lines)
    except StopIteration:
        raise ParseError("Empty graph file.")

    if len(fields) != 3 or fields[0] != "graph":
        raise ParseError('Expected a header "graph <node_count> <edge_count>".', number)
    node_count = _int(fields[1], number, "node count")
    edge_count = _int(fields[2], number, "edge count")

    tails, heads, costs = [], [], []
    for number, fields in lines:
        if len(fields) != 3:
            raise ParseError('Expected "<tail> <head> <cost>".', number)
        tails.append(_int(fields[0], number, "tail"))
        heads.append(_int(fields[1], number, "head"))
        costs.append(_float(fields[2], number, "cost"))

    if len(tails) != edge_count:
        raise ParseError(
            f"The header announces {edge_count} edges but {len(tails)} were given."
        )

    try:
        return Graph(
            node_count,
            np.array(tails, dtype=np.intp),
            np.array(heads, dtype=np.intp),
            np.array(costs, dtype=float),
        )
    except GraphError as exc:
        raise ParseError(f"Invalid graph: {exc}")


def write_graph(graph, fileobj):
    fileobj.write(f"graph {graph.node_count} {graph.edge_count}\n")
    for (tail, head), cost in zip(graph.edges(), graph.costs):
        fileobj.write(f"{tail} {head} {float(cost)!r}\n")


def _read_entries(fileobj, size, what):
    values = np.zeros(size)
    seen = set()
    for number, fields in _lines(fileobj):
        if len(fields) != 2:
            raise ParseError(f'Expected "<{what}> <value>".', number)
        index = _int(fields[0], number, what)
        if not 0 <= index < size:
            raise ParseError(f"The {what} {index} is out of range [0, {size}).", number)
        if index in seen:
            raise ParseError(f"The {what} {index} is listed twice.", number)
        seen.add(index)
        values[index] = _float(fields[1], number, "value")
    return values


def read_mass(fileobj, graph):
    """Read a mass file for ``graph``.

    Raises
    ------
    ParseError
        If the file is malformed.
    ImbalancedMassError
        If the values do not sum to zero.

    """
    mass = _read_entries(fileobj, graph.node_count, "node")
    try:
        return check_mass(graph, mass)
    except ImbalancedMassError as exc:
        raise ImbalancedMassError(f"Invalid mass file: {exc}")


def write_mass(mass, fileobj):
    for node in np.flatnonzero(mass):
        fileobj.write(f"{node} {float(mass[node])!r}\n")


def read_flow(fileobj, graph):
    """Read a flow file for ``graph``; unlisted edges carry no flow."""
    return _read_entries(fileobj, graph.edge_count, "edge")


def write_flow(flow, fileobj):
    for edge in np.flatnonzero(flow):
        fileobj.write(f"{edge} {float(flow[edge])!r}\n")
