"""Directed graphs and the operators of the flow formulation.

A graph stores its edges as an ordered list; the position of an edge in that
list is its identity everywhere else (masks, flows, factor events). The
incidence operator D maps node potentials to per-edge differences, with -1 at
the tail and +1 at the head of every edge. Its transpose plays the role of the
(negative) divergence.

"""

import dataclasses
import functools

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from . import settings
from .exceptions import GraphError, ImbalancedMassError


def _check_length(values, expected, what):
    values = np.asarray(values, dtype=float)
    if values.shape != (expected,):
        raise GraphError(
            f"Expected a {what} with {expected} entries, got shape {values.shape}."
        )
    return values


@dataclasses.dataclass(frozen=True, eq=False)
class Graph:
    """A connected directed graph with nonnegative per-edge costs.

    Arguments
    ---------
    node_count : int
        Number of nodes; nodes are the integers ``0 .. node_count - 1``.
    tails : np.ndarray
        Tail node of every edge.
    heads : np.ndarray
        Head node of every edge.
    costs : np.ndarray
        Cost per unit of flow on every edge.

    Raises
    ------
    GraphError
        On self-loops, duplicate directed edges, negative costs, out of range
        nodes, or if the underlying undirected graph is disconnected.

    """

    node_count: int
    tails: np.ndarray
    heads: np.ndarray
    costs: np.ndarray

    def __post_init__(self):
        tails = np.asarray(self.tails, dtype=np.intp).reshape(-1)
        heads = np.asarray(self.heads, dtype=np.intp).reshape(-1)
        costs = np.asarray(self.costs, dtype=float).reshape(-1)

        if self.node_count < 1:
            raise GraphError("A graph needs at least one node.")

        if not (tails.shape == heads.shape == costs.shape):
            raise GraphError("Tails, heads and costs must have one entry per edge.")

        if tails.size and (
            min(tails.min(), heads.min()) < 0
            or max(tails.max(), heads.max()) >= self.node_count
        ):
            raise GraphError(f"Edge endpoints must lie in [0, {self.node_count}).")

        loops = np.flatnonzero(tails == heads)
        if loops.size:
            raise GraphError(f"Edge {loops[0]} is a self-loop at node {tails[loops[0]]}.")

        keys = tails * self.node_count + heads
        unique, counts = np.unique(keys, return_counts=True)
        if np.any(counts > 1):
            key = unique[counts > 1][0]
            raise GraphError(
                f"Duplicate edge ({key // self.node_count}, {key % self.node_count})."
            )

        if np.any(costs < 0) or not np.all(np.isfinite(costs)):
            raise GraphError("Edge costs must be finite and nonnegative.")

        # frozen dataclass: write the normalized arrays through object.__setattr__
        for name, value in (("tails", tails), ("heads", heads), ("costs", costs)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

        adjacency = sp.coo_matrix(
            (np.ones(tails.size), (tails, heads)),
            shape=(self.node_count, self.node_count),
        )
        count, _ = csgraph.connected_components(adjacency, directed=False)
        if count != 1:
            raise GraphError(
                f"The graph is disconnected ({count} connected components)."
            )

    @classmethod
    def from_edges(cls, node_count, edges, costs=None):
        """Build a graph from a list of (tail, head) pairs.

        Costs default to 1 on every edge.

        """
        edges = list(edges)
        if costs is None:
            costs = np.ones(len(edges))
        tails = [tail for tail, _ in edges]
        heads = [head for _, head in edges]
        return cls(node_count, np.array(tails, dtype=np.intp),
                   np.array(heads, dtype=np.intp), np.asarray(costs, dtype=float))

    def with_costs(self, costs):
        """A copy of the graph with the same edges and new costs."""
        return Graph(self.node_count, self.tails, self.heads, costs)

    @property
    def edge_count(self):
        return self.tails.size

    def edges(self):
        """The (tail, head) pairs, in edge order."""
        return list(zip(self.tails.tolist(), self.heads.tolist()))

    @functools.cached_property
    def incidence(self):
        """The incidence matrix D as a sparse |E| x |V| matrix."""
        rows = np.repeat(np.arange(self.edge_count), 2)
        cols = np.column_stack([self.tails, self.heads]).reshape(-1)
        data = np.tile([-1.0, 1.0], self.edge_count)
        return sp.csr_matrix(
            (data, (rows, cols)), shape=(self.edge_count, self.node_count)
        )

    @functools.cached_property
    def _out_edges(self):
        order = np.argsort(self.tails, kind="stable")
        bounds = np.searchsorted(self.tails[order], np.arange(self.node_count + 1))
        return [order[bounds[v]:bounds[v + 1]] for v in range(self.node_count)]

    def out_edges(self, node):
        """Indices of the edges leaving ``node``, in increasing order."""
        return self._out_edges[node]

    @functools.cached_property
    def _in_edges(self):
        order = np.argsort(self.heads, kind="stable")
        bounds = np.searchsorted(self.heads[order], np.arange(self.node_count + 1))
        return [order[bounds[v]:bounds[v + 1]] for v in range(self.node_count)]

    def in_edges(self, node):
        """Indices of the edges entering ``node``, in increasing order."""
        return self._in_edges[node]

    @functools.cached_property
    def _edge_lookup(self):
        return {edge: index for index, edge in enumerate(self.edges())}

    def edge_index(self, edge):
        """The index of the directed edge (tail, head).

        Raises
        ------
        GraphError
            If the edge is not in the graph.

        """
        try:
            return self._edge_lookup[tuple(edge)]
        except KeyError:
            raise GraphError(f"Edge {tuple(edge)} is not in the graph.")

    def edge_vector(self, edge):
        """The row d_e of the incidence matrix as a dense node vector."""
        d = np.zeros(self.node_count)
        d[self.tails[edge]] = -1.0
        d[self.heads[edge]] = 1.0
        return d


def bidirectional(node_count, pairs, costs=None):
    """Build a graph with both directions of every undirected adjacency.

    Arguments
    ---------
    node_count : int
    pairs : Iterable[Tuple[int, int]]
        Undirected adjacencies.
    costs : np.ndarray or None
        One cost per directed edge (twice the number of pairs), in emission
        order. Defaults to unit costs.

    Returns
    -------
    Graph
        Edge ``2 i`` is ``pairs[i]`` and edge ``2 i + 1`` is its reverse.

    """
    edges = []
    for v, w in pairs:
        edges.append((v, w))
        edges.append((w, v))
    return Graph.from_edges(node_count, edges, costs)


# masses and potentials
# =============================================================================


def check_mass(graph, values):
    """Validate a mass vector f (negative at sources, positive at sinks).

    Returns
    -------
    np.ndarray
        The values as a float array.

    Raises
    ------
    ImbalancedMassError
        If the vector has the wrong length or does not sum to zero.

    """
    values = np.asarray(values, dtype=float)
    if values.shape != (graph.node_count,):
        raise ImbalancedMassError(
            f"Expected {graph.node_count} mass entries, got shape {values.shape}."
        )
    total = values.sum()
    if abs(total) > settings.MASS_BALANCE_TOL:
        raise ImbalancedMassError(f"Mass is unbalanced: entries sum to {total:.3e}.")
    return values


def center_potential(graph, p):
    """Shift a potential to have zero mean.

    The graph is connected, so this is the canonical representative of p up to
    the constants in the null space of D.

    """
    p = _check_length(p, graph.node_count, "potential")
    return p - p.mean()


# operators
# =============================================================================


def incidence_apply(graph, p):
    """Compute Dp; the entry for edge (v, w) is p_w - p_v."""
    p = _check_length(p, graph.node_count, "potential")
    return p[graph.heads] - p[graph.tails]


def divergence(graph, flow):
    """Compute D^T J: inflow minus outflow at every node."""
    flow = _check_length(flow, graph.edge_count, "flow")
    n = graph.node_count
    return (np.bincount(graph.heads, weights=flow, minlength=n)
            - np.bincount(graph.tails, weights=flow, minlength=n))


def active_set(graph, p):
    """The mask of edges with Dp - c strictly positive."""
    return incidence_apply(graph, p) - graph.costs > 0


def active_laplacian_apply(graph, mask, x):
    """Compute D^T M D x for the active mask M without forming the Laplacian."""
    mask = _check_length(mask, graph.edge_count, "mask").astype(bool)
    return divergence(graph, incidence_apply(graph, x) * mask)


def active_laplacian_matrix(graph, mask):
    """The dense Laplacian D^T M D of the active subgraph."""
    mask = np.asarray(mask, dtype=bool)
    active = graph.incidence[np.flatnonzero(mask)]
    return (active.T @ active).toarray()


# connected components of the active subgraph
# =============================================================================


@dataclasses.dataclass(frozen=True, eq=False)
class ComponentLabeling:
    """Connected components of an active subgraph.

    Component ids are consecutive and numbered in order of their smallest node.
    The null basis N has one column per component, equal to the indicator of
    the component divided by the square root of its size.

    """

    labels: np.ndarray
    sizes: np.ndarray

    @classmethod
    def from_labels(cls, labels):
        """Canonicalize arbitrary integer labels."""
        labels = np.asarray(labels)
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        rank = np.empty(first.size, dtype=np.intp)
        rank[np.argsort(first, kind="stable")] = np.arange(first.size)
        canonical = rank[inverse.reshape(-1)]
        return cls(canonical, np.bincount(canonical, minlength=first.size))

    @property
    def count(self):
        return self.sizes.size

    @property
    def null_basis(self):
        """The orthonormal null basis N as a sparse |V| x components matrix."""
        n = self.labels.size
        return sp.csc_matrix(
            (1.0 / np.sqrt(self.sizes[self.labels]), (np.arange(n), self.labels)),
            shape=(n, self.count),
        )

    def members(self, component):
        return np.flatnonzero(self.labels == component)

    def indicator(self, component):
        """The normalized indicator column of one component."""
        column = np.zeros(self.labels.size)
        column[self.labels == component] = 1.0 / np.sqrt(self.sizes[component])
        return column

    def null_coefficients(self, x):
        """Compute N^T x."""
        sums = np.bincount(self.labels, weights=x, minlength=self.count)
        return sums / np.sqrt(self.sizes)

    def project_out(self, x):
        """Compute P x = x - N N^T x, removing each component's mean."""
        sums = np.bincount(self.labels, weights=x, minlength=self.count)
        return x - (sums / self.sizes)[self.labels]

    def gram(self):
        """The dense matrix N N^T."""
        same = self.labels[:, None] == self.labels[None, :]
        return same / self.sizes[self.labels][:, None]


def components(graph, mask):
    """Label the connected components of (V, active edges), ignoring direction."""
    mask = _check_length(mask, graph.edge_count, "mask").astype(bool)
    adjacency = sp.coo_matrix(
        (np.ones(int(mask.sum())), (graph.tails[mask], graph.heads[mask])),
        shape=(graph.node_count, graph.node_count),
    )
    _, labels = csgraph.connected_components(adjacency, directed=False)
    return ComponentLabeling.from_labels(labels)


def flood_fill(graph, mask, start, within=None):
    """Nodes reachable from ``start`` along active edges, ignoring direction.

    Arguments
    ---------
    graph : Graph
    mask : np.ndarray
        Active mask.
    start : int
    within : np.ndarray or None
        Optional boolean node mask; only edges with both ends inside are used.

    Returns
    -------
    np.ndarray
        Boolean node mask of the reached nodes.

    """
    selected = np.asarray(mask, dtype=bool)
    if within is not None:
        selected = selected & within[graph.tails] & within[graph.heads]
    adjacency = sp.csr_matrix(
        (np.ones(int(selected.sum())), (graph.tails[selected], graph.heads[selected])),
        shape=(graph.node_count, graph.node_count),
    )
    order = csgraph.breadth_first_order(
        adjacency, start, directed=False, return_predecessors=False
    )
    reached = np.zeros(graph.node_count, dtype=bool)
    reached[order] = True
    return reached
