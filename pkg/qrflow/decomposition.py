"""Path and cycle decompositions of arc flows.

Every nonnegative flow with divergence f splits into flows along simple
paths, each from a node with f < 0 to a node with f > 0, plus flows around
cycles. This module peels such a decomposition off a flow, rebuilds the arc
flow from one, checks the bounds every optimal decomposition obeys, and
evaluates the transport objective in path space.

It also splits the difference of two path decompositions carrying the same
mass into a sum of divergence-free terms, each a loop of paths alternating
between paths that must gain flow and paths that must lose it.

"""

import collections
import dataclasses
import logging

import numpy as np
import scipy.sparse as sp

from . import settings
from .exceptions import DecompositionError
from .graph import divergence


logger = logging.getLogger(__name__)


class DirectedPath(collections.namedtuple("DirectedPath", "nodes edges")):
    """A simple directed path, as its node sequence and its edge indices."""

    __slots__ = ()

    @property
    def source(self):
        return self.nodes[0]

    @property
    def target(self):
        return self.nodes[-1]

    @property
    def length(self):
        return len(self.edges)


class DirectedCycle(collections.namedtuple("DirectedCycle", "nodes edges")):
    """A directed cycle; ``nodes`` lists each node once, starting anywhere."""

    __slots__ = ()

    @property
    def length(self):
        return len(self.edges)


def path_from_nodes(graph, nodes):
    """Build a path from its node sequence.

    Raises
    ------
    DecompositionError
        If a node repeats.
    GraphError
        If consecutive nodes are not joined by an edge.

    """
    nodes = tuple(int(v) for v in nodes)
    if len(set(nodes)) != len(nodes):
        raise DecompositionError(f"The node sequence {nodes} is not a simple path.")
    edges = tuple(graph.edge_index((v, w)) for v, w in zip(nodes, nodes[1:]))
    return DirectedPath(nodes, edges)


@dataclasses.dataclass
class PathDecomposition:
    """Path flows and cycle flows summing to an arc flow.

    Attributes
    ----------
    edge_count : int
        Number of edges of the underlying graph.
    paths : list of (DirectedPath, float)
    cycles : list of (DirectedCycle, float)

    """

    edge_count: int
    paths: list = dataclasses.field(default_factory=list)
    cycles: list = dataclasses.field(default_factory=list)

    @property
    def amounts(self):
        """The path flows, in the order of ``paths``."""
        return np.array([amount for _, amount in self.paths], dtype=float)

    def node_balance(self, node_count):
        """The divergence implied by the path flows (cycles contribute none)."""
        balance = np.zeros(node_count)
        for path, amount in self.paths:
            balance[path.source] -= amount
            balance[path.target] += amount
        return balance


class _Accumulator:
    """Collects peeled flows, merging those along the same node sequence."""

    def __init__(self, edge_count):
        self.decomposition = PathDecomposition(edge_count)
        self._paths = {}
        self._cycles = {}

    def add_path(self, nodes, edges, amount):
        key = tuple(nodes)
        if key in self._paths:
            position = self._paths[key]
            path, previous = self.decomposition.paths[position]
            self.decomposition.paths[position] = (path, previous + amount)
        else:
            self._paths[key] = len(self.decomposition.paths)
            self.decomposition.paths.append(
                (DirectedPath(key, tuple(edges)), amount)
            )

    def add_cycle(self, nodes, edges, amount):
        # rotate so the smallest node comes first
        first = nodes.index(min(nodes))
        nodes = tuple(nodes[first:] + nodes[:first])
        edges = tuple(edges[first:] + edges[:first])
        if nodes in self._cycles:
            position = self._cycles[nodes]
            cycle, previous = self.decomposition.cycles[position]
            self.decomposition.cycles[position] = (cycle, previous + amount)
        else:
            self._cycles[nodes] = len(self.decomposition.cycles)
            self.decomposition.cycles.append((DirectedCycle(nodes, edges), amount))


def _heaviest_out_edge(graph, residual, node, zero):
    """The outgoing edge with the most residual flow, lowest index on ties."""
    candidates = graph.out_edges(node)
    if not candidates.size:
        return None
    best = int(np.argmax(residual[candidates]))
    if residual[candidates[best]] <= zero:
        return None
    return int(candidates[best])


def _peel_cycle(graph, residual, nodes, edges, start, closing_edge, accumulator):
    cycle_edges = edges[start:] + [closing_edge]
    amount = residual[cycle_edges].min()
    residual[cycle_edges] -= amount
    accumulator.add_cycle(nodes[start:], cycle_edges, amount)


def _peel_path(graph, residual, surplus, source, zero, accumulator):
    """Walk from ``source`` to a deficit and peel the bottleneck off the walk.

    Cycles closed by the walk are peeled on the way.

    Returns
    -------
    bool
        False if ``source`` has no outgoing residual flow at all.

    """
    nodes = [source]
    edges = []
    position = {source: 0}
    node = source

    while node == source or surplus[node] >= -zero:
        e = _heaviest_out_edge(graph, residual, node, zero)
        if e is None:
            if node == source:
                return False
            # a rounding-level deficit
            break

        head = int(graph.heads[e])
        if head in position:
            start = position[head]
            _peel_cycle(graph, residual, nodes, edges, start, e, accumulator)
            for v in nodes[start + 1:]:
                del position[v]
            nodes = nodes[:start + 1]
            edges = edges[:start]
            node = head
            continue

        position[head] = len(nodes)
        nodes.append(head)
        edges.append(e)
        node = head

    if not edges:
        return True

    amount = min(surplus[source], residual[edges].min())
    if surplus[node] < -zero:
        amount = min(amount, -surplus[node])

    residual[edges] -= amount
    residual[edges] = np.where(residual[edges] <= zero, 0.0, residual[edges])
    surplus[source] -= amount
    surplus[node] += amount
    accumulator.add_path(nodes, edges, amount)
    return True


def decompose(graph, flow, mass, atol=settings.DIVERGENCE_TOL):
    """Decompose a flow into source-to-target path flows and cycle flows.

    Paths are peeled greedily: from the first node with surplus, follow the
    outgoing edge carrying the most residual flow (lowest index on ties) until
    a node with a deficit, then subtract the bottleneck. Peeling follows the
    flow's own divergence, so the decomposition rebuilds the flow exactly;
    ``mass`` is only used to check the flow.

    Arguments
    ---------
    graph : Graph
    flow : np.ndarray
        Nonnegative arc flow.
    mass : np.ndarray
        The divergence the flow should have.
    atol : float
        Accepted divergence mismatch.

    Returns
    -------
    PathDecomposition

    Raises
    ------
    DecompositionError
        If the flow has a negative entry or the wrong divergence.

    """
    flow = np.asarray(flow, dtype=float)
    if flow.shape != (graph.edge_count,):
        raise DecompositionError(
            f"Expected a flow with {graph.edge_count} entries, got shape {flow.shape}."
        )
    negative = np.flatnonzero(flow < 0)
    if negative.size:
        raise DecompositionError(
            f"Edge {negative[0]} carries negative flow {flow[negative[0]]:.3e}."
        )

    surplus = -divergence(graph, flow)
    mismatch = np.abs(surplus + np.asarray(mass, dtype=float))
    if mismatch.max(initial=0.0) > atol:
        node = int(mismatch.argmax())
        raise DecompositionError(
            f"The flow's divergence misses the mass by {mismatch[node]:.3e} "
            f"at node {node}."
        )

    residual = flow.copy()
    zero = settings.PEEL_ZERO_TOL * max(1.0, flow.max(initial=0.0))
    accumulator = _Accumulator(graph.edge_count)

    while True:
        sources = np.flatnonzero(surplus > zero)
        if not sources.size:
            break
        source = int(sources[0])
        if not _peel_path(graph, residual, surplus, source, zero, accumulator):
            surplus[source] = 0.0

    # what is left is a circulation
    while True:
        remaining = np.flatnonzero(residual > zero)
        if not remaining.size:
            break
        node = int(graph.tails[remaining[0]])
        nodes, edges, position = [node], [], {node: 0}
        while True:
            e = _heaviest_out_edge(graph, residual, node, zero)
            if e is None:
                # rounding residue that does not close up
                residual[edges] = 0.0
                residual[remaining[0]] = 0.0
                break
            head = int(graph.heads[e])
            if head in position:
                _peel_cycle(
                    graph, residual, nodes, edges, position[head], e, accumulator
                )
                residual[residual <= zero] = 0.0
                break
            position[head] = len(nodes)
            nodes.append(head)
            edges.append(e)
            node = head

    decomposition = accumulator.decomposition
    logger.debug(
        "Decomposed a flow into %d paths and %d cycles.",
        len(decomposition.paths), len(decomposition.cycles),
    )
    return decomposition


def reconstruct(graph, decomposition):
    """Sum path and cycle flows back into an arc flow."""
    flow = np.zeros(graph.edge_count)
    for element, amount in decomposition.paths + decomposition.cycles:
        flow[list(element.edges)] += amount
    return flow


# bounds and the path-space objective
# =============================================================================

BoundsReport = collections.namedtuple("BoundsReport", "holds violations")


def _require_acyclic(decomposition):
    if decomposition.cycles:
        raise DecompositionError(
            f"Expected a cycle-free decomposition, found {len(decomposition.cycles)} "
            "cycle(s)."
        )


def check_bounds(decomposition, mass, atol=1e-9):
    """Check the bounds obeyed by decompositions of optimal flows.

    Every path carries at most the mass its source emits, and every edge
    carries at most the total mass emitted by all sources.

    Returns
    -------
    BoundsReport
        ``holds`` and a list of violations naming the path or edge.

    Raises
    ------
    DecompositionError
        If the decomposition has cycles.

    """
    _require_acyclic(decomposition)
    mass = np.asarray(mass, dtype=float)
    violations = []

    for path, amount in decomposition.paths:
        bound = -mass[path.source]
        if amount > bound + atol:
            violations.append(
                f"path {list(path.nodes)} carries {amount:.6g} but its source "
                f"emits {bound:.6g}"
            )

    total = -mass[mass < 0].sum()
    flow = np.zeros(decomposition.edge_count)
    for path, amount in decomposition.paths:
        flow[list(path.edges)] += amount
    for e in np.flatnonzero(flow > total + atol):
        violations.append(
            f"edge {e} carries {flow[e]:.6g} but the sources emit {total:.6g}"
        )

    return BoundsReport(not violations, violations)


def path_incidence(decomposition):
    """The sparse edge-by-path matrix delta with delta[e, r] = 1 if e is on r."""
    rows, cols = [], []
    for r, (path, _) in enumerate(decomposition.paths):
        rows.extend(path.edges)
        cols.extend([r] * path.length)
    return sp.csc_matrix(
        (np.ones(len(rows)), (rows, cols)),
        shape=(decomposition.edge_count, len(decomposition.paths)),
    )


def path_costs(decomposition, costs):
    """The cost of every path, the sum of the costs of its edges."""
    costs = np.asarray(costs, dtype=float)
    return np.array(
        [costs[list(path.edges)].sum() for path, _ in decomposition.paths]
    )


def path_objective(decomposition, costs, alpha):
    """The regularized objective in path space.

    Equals c_paths^T x + (alpha/2) x^T S x, where x are the path flows and
    S = delta^T delta counts the edges shared by two paths.

    Raises
    ------
    DecompositionError
        If the decomposition has cycles.

    """
    _require_acyclic(decomposition)
    amounts = decomposition.amounts
    delta = path_incidence(decomposition)
    shared = (delta.T @ delta).toarray()
    return float(path_costs(decomposition, costs) @ amounts
                 + 0.5 * alpha * amounts @ shared @ amounts)


def to_document(decomposition):
    """A JSON-serializable document listing node sequences with their flows."""
    return {
        "paths": [
            {"nodes": list(path.nodes), "flow": float(amount)}
            for path, amount in decomposition.paths
        ],
        "cycles": [
            {"nodes": list(cycle.nodes), "flow": float(amount)}
            for cycle, amount in decomposition.cycles
        ],
    }


# divergence-free differences
# =============================================================================


@dataclasses.dataclass(frozen=True)
class DivergenceFreeTerm:
    """One loop of a divergence-free difference.

    Attributes
    ----------
    epsilon : float
        Positive coefficient of the loop.
    minus : tuple of int
        Universe indices of the paths gaining ``epsilon``.
    plus : tuple of int
        Universe indices of the paths losing ``epsilon``.

    """

    epsilon: float
    minus: tuple
    plus: tuple


@dataclasses.dataclass
class DivergenceFreeDiff:
    """The difference of two path flows as a sum of divergence-free loops.

    ``first = second + sum_k terms[k].epsilon * loop(k)`` on the path
    universe, where ``loop(k)`` is +1 on the minus paths and -1 on the plus
    paths of term k.

    """

    universe: list
    first: np.ndarray
    second: np.ndarray
    terms: list

    def loop(self, k):
        """The path-space vector of term k."""
        vector = np.zeros(len(self.universe))
        vector[list(self.terms[k].minus)] = 1.0
        vector[list(self.terms[k].plus)] = -1.0
        return vector

    def minus_paths(self, k):
        return [self.universe[r] for r in self.terms[k].minus]

    def plus_paths(self, k):
        return [self.universe[r] for r in self.terms[k].plus]

    def residual(self):
        """first - second - sum of the terms; zero up to rounding."""
        total = self.second.copy()
        for k, term in enumerate(self.terms):
            total += term.epsilon * self.loop(k)
        return self.first - total

    def arc_flow(self, k, edge_count):
        """The arc flow of term k's loop, which has zero divergence."""
        flow = np.zeros(edge_count)
        for r in self.terms[k].minus:
            flow[list(self.universe[r].edges)] += 1.0
        for r in self.terms[k].plus:
            flow[list(self.universe[r].edges)] -= 1.0
        return flow


def _check_balance(decomposition, mass, atol, which):
    _require_acyclic(decomposition)
    balance = decomposition.node_balance(mass.size)
    mismatch = np.abs(balance - mass)
    if mismatch.max(initial=0.0) > atol:
        node = int(mismatch.argmax())
        raise DecompositionError(
            f"The {which} decomposition misses the mass by {mismatch[node]:.3e} "
            f"at node {node}."
        )


def _build_loop(gap, sources, targets, r0, tol):
    """Alternate between paths with gap < 0 and gap > 0 until an end repeats.

    ``gap[r0]`` is positive. Odd steps leave the previous source along a path
    with negative gap; even steps enter the previous target along a path with
    positive gap.

    Returns
    -------
    loop : list of int
        The paths of the closed loop.
    start : int
        Chain index of the loop's first path; chain indices of paths with
        positive gap are even.

    """
    chain = [r0]
    seen_sources = {sources[r0]: 0}
    seen_targets = {targets[r0]: 0}
    n = 0
    while True:
        n += 1
        previous = chain[-1]
        if n % 2:
            candidates = np.flatnonzero(
                (sources == sources[previous]) & (gap < -tol)
            )
        else:
            candidates = np.flatnonzero(
                (targets == targets[previous]) & (gap > tol)
            )
        if not candidates.size:
            raise DecompositionError(
                "The two decompositions do not carry the same mass."
            )
        r = int(candidates[0])
        chain.append(r)

        if n % 2:
            target = targets[r]
            if target in seen_targets:
                # closing on the first target keeps the whole chain
                start = seen_targets[target] + 1 if seen_targets[target] else 0
                return chain[start:], start
            seen_targets[target] = n
        else:
            source = sources[r]
            if source in seen_sources:
                start = seen_sources[source] + 1
                return chain[start:], start
            seen_sources[source] = n


def divergence_free_diff(first, second, mass, atol=settings.DIVERGENCE_TOL,
                         tol=settings.PATH_FLOW_TOL):
    """Write first = second + sum_k epsilon_k loop_k with divergence-free loops.

    Both decompositions are aligned on the union of their paths, keyed by node
    sequence. While they differ, a loop is built from a path on which they
    differ by alternately leaving a source and entering a target along paths
    on which the difference has the opposite sign, until a source or target
    repeats. The loop carries +1 on the paths where ``first`` has more flow
    and -1 on those where it has less; every source and target of the loop
    meets one path of each kind, so the loop's arc flow has zero divergence.
    Its coefficient is the smallest difference along the loop, which closes
    at least one more path each round.

    Arguments
    ---------
    first, second : PathDecomposition
        Cycle-free decompositions carrying the same mass.
    mass : np.ndarray
    atol : float
        Accepted mismatch between a decomposition's balance and ``mass``.
    tol : float
        Path flows closer than this count as equal.

    Returns
    -------
    DivergenceFreeDiff

    Raises
    ------
    DecompositionError
        If a decomposition has cycles or does not carry ``mass``.

    """
    mass = np.asarray(mass, dtype=float)
    _check_balance(first, mass, atol, "first")
    _check_balance(second, mass, atol, "second")

    universe, index = [], {}
    for decomposition in (first, second):
        for path, _ in decomposition.paths:
            if path.nodes not in index:
                index[path.nodes] = len(universe)
                universe.append(path)

    flows = []
    for decomposition in (first, second):
        values = np.zeros(len(universe))
        for path, amount in decomposition.paths:
            values[index[path.nodes]] += amount
        flows.append(values)
    target_flow, start_flow = flows

    sources = np.array([path.source for path in universe], dtype=np.intp)
    targets = np.array([path.target for path in universe], dtype=np.intp)

    current = start_flow.copy()
    terms = []
    rounds = 0
    while True:
        difference = target_flow - current
        open_paths = np.flatnonzero(np.abs(difference) > tol)
        if not open_paths.size:
            break
        rounds += 1
        assert rounds <= len(universe) + 1, "divergence_free_diff does not terminate"

        r0 = int(open_paths[0])
        sign = 1.0 if difference[r0] > 0 else -1.0
        loop, start = _build_loop(sign * difference, sources, targets, r0, tol)

        # position j of the loop has index start + j in the chain
        gaining = [r for j, r in enumerate(loop) if (start + j) % 2 == 0]
        losing = [r for j, r in enumerate(loop) if (start + j) % 2 == 1]
        if sign < 0:
            gaining, losing = losing, gaining

        gaps = np.abs(difference[loop])
        epsilon = float(gaps.min())
        closed = loop[int(gaps.argmin())]

        current[gaining] += epsilon
        current[losing] -= epsilon
        current[closed] = target_flow[closed]

        terms.append(DivergenceFreeTerm(epsilon, tuple(gaining), tuple(losing)))

    logger.debug("Split the difference into %d divergence-free loop(s).", len(terms))
    return DivergenceFreeDiff(universe, target_flow, start_flow, terms)
