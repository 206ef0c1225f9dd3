"""Random and structured problem instances.

Random graphs have a heavy-tailed degree sequence: degrees are drawn from a
continuous power law with density proportional to x^-2.5, capped at 10 and
rounded, with the lower cutoff chosen so that the mean degree is 5. The
sequence is realized as a simple graph by Havel-Hakimi and then connected by
degree-preserving edge swaps. Every undirected adjacency becomes two directed
edges.

"""

import logging
import math

import networkx as nx
import numpy as np
import scipy.optimize

from . import settings
from .exceptions import GenerationError
from .graph import bidirectional


logger = logging.getLogger(__name__)


UNIT = "unit"
UNIFORM = "uniform"
COST_MODELS = (UNIT, UNIFORM)


def _capped_mean(xmin, exponent, cap):
    """E[min(X, cap)] for a power law with density ~ x^-exponent on [xmin, inf)."""
    a = exponent - 1.0
    return xmin + xmin ** a * (xmin ** (1.0 - a) - cap ** (1.0 - a)) / (a - 1.0)


def _degree_cutoff(exponent, target, low, cap):
    """The lower cutoff giving mean ``target`` once samples are capped."""
    if _capped_mean(low, exponent, cap) >= target:
        return float(low)
    return scipy.optimize.brentq(
        lambda xmin: _capped_mean(xmin, exponent, cap) - target, low, cap
    )


def sample_degrees(n, rng, exponent=settings.DEGREE_EXPONENT,
                   mean=settings.MEAN_DEGREE):
    """Draw a graphical degree sequence that can be connected.

    Graphs with fewer than 11 nodes cap degrees at n - 1 and aim for a mean
    of at most the midpoint of the allowed range.

    Raises
    ------
    GenerationError
        If no acceptable sequence turns up within the allowed attempts.

    """
    cap = min(settings.MAX_DEGREE, n - 1)
    target = min(mean, 0.5 * (settings.MIN_DEGREE + cap))
    xmin = _degree_cutoff(exponent, target, settings.MIN_DEGREE, cap)
    a = exponent - 1.0

    for _ in range(settings.GENERATOR_ATTEMPTS):
        draws = xmin * (1.0 + rng.pareto(a, size=n))
        degrees = np.clip(np.rint(np.minimum(draws, cap)), settings.MIN_DEGREE, cap)
        degrees = degrees.astype(int)
        total = int(degrees.sum())
        if abs(degrees.mean() - target) > settings.MEAN_DEGREE_SLACK:
            continue
        # odd sums are not graphical; fewer than n - 1 edges cannot connect
        if total % 2 or total < 2 * (n - 1):
            continue
        if nx.is_valid_degree_sequence_havel_hakimi(degrees.tolist()):
            return degrees

    raise GenerationError(
        f"No connectable degree sequence for {n} nodes after "
        f"{settings.GENERATOR_ATTEMPTS} attempts."
    )


def _sorted_edges(graph):
    return sorted(tuple(sorted(edge)) for edge in graph.edges())


def _connect(graph, rng):
    """Join the components of ``graph`` by degree-preserving swaps, in place.

    A swap removes a non-bridge edge (a, b) of a hub component and an edge
    (c, d) of another component and adds (a, c) and (b, d); the hub stays
    connected and absorbs the other component.

    """
    swaps = 0
    while not nx.is_connected(graph):
        pieces = sorted(
            (sorted(piece) for piece in nx.connected_components(graph)),
            key=lambda piece: (-len(piece), piece[0]),
        )
        hub = None
        for piece in pieces:
            subgraph = graph.subgraph(piece)
            bridges = {tuple(sorted(edge)) for edge in nx.bridges(subgraph)}
            loose = [edge for edge in _sorted_edges(subgraph) if edge not in bridges]
            if loose:
                hub = piece
                break
        if hub is None:
            raise GenerationError("Every component is a tree; cannot connect.")

        other = next(piece for piece in pieces if piece is not hub)
        other_edges = _sorted_edges(graph.subgraph(other))

        a, b = loose[rng.integers(len(loose))]
        c, d = other_edges[rng.integers(len(other_edges))]
        graph.remove_edges_from([(a, b), (c, d)])
        graph.add_edges_from([(a, c), (b, d)])
        swaps += 1

    return swaps


def _edge_costs(model, count, rng):
    if model == UNIT:
        return None
    if model == UNIFORM:
        # uniform on (0, 1]
        return 1.0 - rng.random(count)
    raise ValueError(f"Unknown cost model {model!r}; expected one of {COST_MODELS}.")


def gen_random_graph(n, seed, costs=UNIT):
    """A connected bidirectional graph with a heavy-tailed degree sequence.

    Arguments
    ---------
    n : int
        Number of nodes, at least 2.
    seed : int
    costs : str
        ``"unit"`` for unit costs, ``"uniform"`` for costs uniform on (0, 1].

    Returns
    -------
    Graph

    Raises
    ------
    GenerationError
        If no suitable degree sequence is found.

    """
    if n < 2:
        raise GenerationError(f"A random graph needs at least 2 nodes, got {n}.")
    rng = np.random.default_rng(seed)

    degrees = sample_degrees(n, rng)
    graph = nx.havel_hakimi_graph(degrees.tolist())
    swaps = _connect(graph, rng)

    pairs = _sorted_edges(graph)
    logger.debug(
        "Random graph: %d nodes, %d adjacencies, mean degree %.2f, %d swaps.",
        n, len(pairs), degrees.mean(), swaps,
    )
    return bidirectional(n, pairs, _edge_costs(costs, 2 * len(pairs), rng))


def gen_grid(side):
    """The side x side lattice, every adjacency in both directions, unit costs.

    Node ``i * side + j`` sits in row i, column j.

    """
    if side < 2:
        raise GenerationError(f"A grid needs a side of at least 2, got {side}.")
    lattice = nx.convert_node_labels_to_integers(
        nx.grid_2d_graph(side, side), ordering="sorted"
    )
    return bidirectional(side * side, _sorted_edges(lattice))


def gen_mass(graph, seed):
    """A balanced mass vector on a random tenth of the nodes.

    At least two nodes are chosen. All but the last get values uniform on
    (-10, 10); the last gets minus their sum.

    Raises
    ------
    GenerationError
        If the graph has a single node.

    """
    n = graph.node_count
    if n < 2:
        raise GenerationError("A mass vector needs at least 2 nodes.")
    rng = np.random.default_rng(seed)

    count = min(n, max(2, math.ceil(settings.MASS_FRACTION * n)))
    nodes = rng.choice(n, size=count, replace=False)
    values = rng.uniform(-settings.MASS_RANGE, settings.MASS_RANGE, size=count - 1)

    mass = np.zeros(n)
    mass[nodes[:-1]] = values
    mass[nodes[-1]] = -values.sum()
    return mass
