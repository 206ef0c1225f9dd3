"""Exact solver of the unregularized transport problem.

Minimizes c^T J over nonnegative flows with D^T J = f by successive shortest
augmenting paths. Node potentials keep the reduced costs of the residual
graph nonnegative, so every shortest path search is a Dijkstra run; since all
edge costs are nonnegative, the zero potential is a valid start.

On termination the potentials are an optimal solution of the dual linear
program: c_e - (p_head - p_tail) >= 0 on every edge, with equality wherever
the returned flow is positive.

"""

import collections
import dataclasses
import heapq
import logging
import math

import numpy as np

from . import settings
from .exceptions import InfeasibleError
from .graph import check_mass, divergence, incidence_apply


logger = logging.getLogger(__name__)


@dataclasses.dataclass
class OracleResult:
    """An optimal flow of the linear problem with its dual certificate.

    Attributes
    ----------
    optimal_value : float
        c^T J of the optimal flow.
    flow : np.ndarray
        One optimal flow; in general optimal flows are not unique.
    node_potentials : np.ndarray
        Optimal dual potentials.
    augmentations : int
        Number of augmenting paths used.

    """

    optimal_value: float
    flow: np.ndarray
    node_potentials: np.ndarray
    augmentations: int = 0

    def to_dict(self):
        return {
            "optimal_value": self.optimal_value,
            "augmentations": self.augmentations,
            "flow": self.flow.tolist(),
            "node_potentials": self.node_potentials.tolist(),
        }


# residual arcs are (edge, FORWARD) from tail to head or (edge, BACKWARD) from
# head to tail, the latter only while the edge carries flow
FORWARD = 1
BACKWARD = -1


def _shortest_paths(graph, flow, potential, excess):
    """Dijkstra over the residual graph from every node with surplus.

    Stops as soon as a node with a deficit is settled.

    Returns
    -------
    target : int
    distance : np.ndarray
    settled : np.ndarray
    predecessor : dict
        Maps a reached node to the residual arc (edge, direction) used.

    """
    tol = settings.ORACLE_TOL
    costs = graph.costs

    distance = np.full(graph.node_count, math.inf)
    settled = np.zeros(graph.node_count, dtype=bool)
    predecessor = {}

    heap = []
    for u in np.flatnonzero(excess > tol):
        distance[u] = 0.0
        heap.append((0.0, int(u)))
    heapq.heapify(heap)

    while heap:
        d_u, u = heapq.heappop(heap)
        if settled[u]:
            continue
        settled[u] = True
        if excess[u] < -tol:
            return u, distance, settled, predecessor

        arcs = [(e, FORWARD, graph.heads[e], costs[e]) for e in graph.out_edges(u)]
        arcs += [
            (e, BACKWARD, graph.tails[e], -costs[e])
            for e in graph.in_edges(u)
            if flow[e] > tol
        ]
        for e, direction, w, cost in arcs:
            if settled[w]:
                continue
            reduced = max(cost - potential[u] + potential[w], 0.0)
            d_w = d_u + reduced
            if d_w < distance[w]:
                distance[w] = d_w
                predecessor[int(w)] = (int(e), direction)
                heapq.heappush(heap, (d_w, int(w)))

    raise InfeasibleError("No augmenting path reaches a node with a deficit.")


def _path_to(graph, predecessor, target):
    arcs = []
    node = target
    while node in predecessor:
        e, direction = predecessor[node]
        arcs.append((e, direction))
        node = graph.tails[e] if direction == FORWARD else graph.heads[e]
    arcs.reverse()
    return int(node), arcs


def lp_oracle(graph, mass):
    """Solve min c^T J subject to D^T J = f, J >= 0.

    Arguments
    ---------
    graph : Graph
        A connected graph with nonnegative costs.
    mass : np.ndarray
        Balanced mass vector.

    Returns
    -------
    OracleResult

    Raises
    ------
    ImbalancedMassError
        If the mass does not sum to zero.
    InfeasibleError
        If some mass cannot be routed.

    """
    mass = check_mass(graph, mass)
    tol = settings.ORACLE_TOL

    flow = np.zeros(graph.edge_count)
    potential = np.zeros(graph.node_count)
    # surplus still to leave each source, as a positive number; sinks negative
    excess = -mass.copy()
    augmentations = 0

    # a residual imbalance within the mass tolerance is left unrouted
    while np.any(excess > tol) and np.any(excess < -tol):
        target, distance, settled, predecessor = _shortest_paths(
            graph, flow, potential, excess
        )
        source, arcs = _path_to(graph, predecessor, target)

        amount = min(excess[source], -excess[target])
        for e, direction in arcs:
            if direction == BACKWARD:
                amount = min(amount, flow[e])

        for e, direction in arcs:
            flow[e] += direction * amount
            if direction == BACKWARD and flow[e] < tol:
                flow[e] = 0.0
        excess[source] -= amount
        excess[target] += amount
        augmentations += 1

        # nodes settled before the target keep their reduced costs nonnegative
        d_t = distance[target]
        potential[settled] -= distance[settled] - d_t

    # the invariant is c - pi_tail + pi_head >= 0, so the LP potentials are -pi
    node_potentials = -potential
    node_potentials -= node_potentials.mean()

    result = OracleResult(
        optimal_value=float(graph.costs @ flow),
        flow=flow,
        node_potentials=node_potentials,
        augmentations=augmentations,
    )
    logger.info(
        "Oracle: optimal value %.12g after %d augmenting paths.",
        result.optimal_value, augmentations,
    )
    return result


# certificates
# =============================================================================

Certificate = collections.namedtuple("Certificate", "holds violations")


def check_certificate(graph, mass, result, atol=1e-9):
    """Check that an oracle result is optimal.

    Verifies that the flow is feasible, that every reduced cost
    c_e - (p_head - p_tail) is nonnegative and that the reduced cost vanishes
    wherever the flow is positive.

    Returns
    -------
    Certificate
        ``holds`` and a list of human-readable violations.

    """
    violations = []

    residual = np.abs(divergence(graph, result.flow) - mass)
    if residual.max(initial=0.0) > atol:
        node = int(residual.argmax())
        violations.append(f"divergence mismatch {residual[node]:.3e} at node {node}")

    negative = np.flatnonzero(result.flow < -atol)
    for e in negative:
        violations.append(f"negative flow {result.flow[e]:.3e} on edge {e}")

    reduced = graph.costs - incidence_apply(graph, result.node_potentials)
    for e in np.flatnonzero(reduced < -atol):
        violations.append(f"negative reduced cost {reduced[e]:.3e} on edge {e}")

    for e in np.flatnonzero((result.flow > atol) & (np.abs(reduced) > atol)):
        violations.append(
            f"edge {e} carries flow {result.flow[e]:.3e} "
            f"with reduced cost {reduced[e]:.3e}"
        )

    return Certificate(not violations, violations)
