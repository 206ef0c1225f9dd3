"""Dual ascent alternating gradient and pseudo-Newton steps.

Odd iterations step along the gradient; even iterations along L^+ times the
gradient, where L is the Laplacian of the current active subgraph. L^+ is
applied through a Cholesky factor of L + NN^T that follows the active set:
each edge that enters or leaves the active set, and each merge or split of a
component it causes, is a rank-1 change of L + NN^T applied to the factor.

"""

import collections
import logging

import numpy as np

from .. import settings
from ..exceptions import FactorizationError
from ..factorization import (
    ADD_COMPONENT,
    ADD_EDGE,
    REMOVE_COMPONENT,
    REMOVE_EDGE,
    FactorEvent,
    apply_events,
    factorize,
    pinv_apply,
)
from ..graph import ComponentLabeling, components, flood_fill, incidence_apply
from ..objective import active_piece, dual_gradient
from .abc import SolverABC


logger = logging.getLogger(__name__)


Transition = collections.namedtuple("Transition", "entering leaving events refactorized")


def _indicator(nodes):
    """The normalized indicator of a boolean node mask."""
    return nodes / np.sqrt(nodes.sum())


def search_direction(state, mass, alpha, k, gradient=None):
    """The search direction of iteration k.

    Arguments
    ---------
    state : SolverState
        Must carry a factor and labeling matching its mask.
    mass : np.ndarray
    alpha : float
    k : int
        Iteration index, starting at 1.
    gradient : np.ndarray or None
        The gradient at ``state.p``, computed if not given.

    Returns
    -------
    np.ndarray
        The gradient when k is odd, L^+ times the gradient when k is even,
        shifted to sum to zero.

    """
    if gradient is None:
        gradient = dual_gradient(state, mass, alpha)
    if k % 2:
        s = gradient
    else:
        s = pinv_apply(state.factor, state.labeling, gradient)
    return s - s.mean()


def _transition_events(graph, old_mask, entering, leaving, labels):
    """The rank-1 events taking L + NN^T from the old to the new active set.

    Deactivations are processed first, then activations, each one against the
    active set and labels left by the previous. ``labels`` is updated in
    place.

    """
    events = []
    work = old_mask.copy()
    next_label = labels.max() + 1

    for e in leaving:
        work[e] = False
        events.append(FactorEvent(REMOVE_EDGE, graph.edge_vector(e)))

        tail, head = graph.tails[e], graph.heads[e]
        members = labels == labels[tail]
        reached = flood_fill(graph, work, tail, within=members)
        if reached[head]:
            continue

        # split
        rest = members & ~reached
        events.append(FactorEvent(ADD_COMPONENT, _indicator(reached)))
        events.append(FactorEvent(ADD_COMPONENT, _indicator(rest)))
        events.append(FactorEvent(REMOVE_COMPONENT, _indicator(members)))
        labels[rest] = next_label
        next_label += 1

    for e in entering:
        work[e] = True
        events.append(FactorEvent(ADD_EDGE, graph.edge_vector(e)))

        first = labels == labels[graph.tails[e]]
        second = labels == labels[graph.heads[e]]
        if first[graph.heads[e]]:
            continue

        # merge
        events.append(FactorEvent(ADD_COMPONENT, _indicator(first | second)))
        events.append(FactorEvent(REMOVE_COMPONENT, _indicator(first)))
        events.append(FactorEvent(REMOVE_COMPONENT, _indicator(second)))
        labels[second] = labels[graph.tails[e]]

    return events


def apply_transition(state, p_new, refactor_period=settings.REFACTOR_PERIOD,
                     direction=None, hit=None):
    """Move the state to ``p_new``, keeping its factor and labeling current.

    The mask is recomputed from the new slacks, with edges on a kink and the
    ``hit`` edges placed by ``direction`` (see ``SolverState.move_to``), and
    diffed with the old one. The factor is rebuilt from scratch every
    ``refactor_period`` events, or when a downdate fails.

    Arguments
    ---------
    state : SolverState
        Modified in place.
    p_new : np.ndarray
    refactor_period : int
    direction : np.ndarray or None
        The direction of the step that reached ``p_new``.
    hit : np.ndarray or None
        The edges the line search stopped on.

    Returns
    -------
    Transition
        The entering and leaving edges, the events applied to the factor and
        whether the factor was rebuilt.

    """
    old_mask = state.move_to(p_new, direction=direction, hit=hit)
    return _follow_mask(state, old_mask, refactor_period)


def assign_active_set(state, mask, refactor_period=settings.REFACTOR_PERIOD):
    """Give the state a new mask without moving, updating factor and labeling.

    Returns
    -------
    Transition

    """
    old_mask = state.set_mask(mask)
    return _follow_mask(state, old_mask, refactor_period)


def _follow_mask(state, old_mask, refactor_period):
    entering = np.flatnonzero(state.mask & ~old_mask)
    leaving = np.flatnonzero(old_mask & ~state.mask)
    if not entering.size and not leaving.size:
        return Transition(entering, leaving, [], False)

    labels = state.labeling.labels.copy()
    events = _transition_events(state.graph, old_mask, entering, leaving, labels)
    state.labeling = ComponentLabeling.from_labels(labels)

    try:
        apply_events(state.factor, events)
    except FactorizationError as exc:
        logger.warning(
            "%s at iteration %d; refactorizing.", exc, state.iteration
        )
        state.labeling = components(state.graph, state.mask)
        state.factor = factorize(state.graph, state.mask, state.labeling)
        return Transition(entering, leaving, events, True)

    if state.factor.update_count >= refactor_period:
        logger.debug(
            "Refactorizing after %d rank-1 events at iteration %d.",
            state.factor.update_count, state.iteration,
        )
        state.factor = factorize(state.graph, state.mask, state.labeling)
        return Transition(entering, leaving, events, True)

    return Transition(entering, leaving, events, False)


class HessUpdateSolver(SolverABC):
    """Alternating gradient / pseudo-Newton ascent with an updated factor."""

    name = "hessupdate"

    def prepare(self, state):
        state.labeling = components(self.graph, state.mask)
        state.factor = factorize(self.graph, state.mask, state.labeling)
        self._refactorizations = 0

    def direction(self, state, gradient):
        alpha = self.config.alpha
        s = search_direction(state, self.mass, alpha, state.iteration, gradient=gradient)
        if state.iteration % 2:
            return s

        # kink edges whose side disagrees with the step are zero-length flips;
        # move them and recompute so the step is Newton for its own piece
        for _ in range(settings.KINK_ROUNDS):
            piece = active_piece(state, incidence_apply(self.graph, s))
            flips = int(np.count_nonzero(piece != state.mask))
            if not flips:
                break
            self.zero_step_flips += flips
            logger.debug(
                "%s: %d kink edge(s) flipped before the pseudo-Newton step "
                "of iteration %d.", self.name, flips, state.iteration,
            )
            result = assign_active_set(state, piece, self.config.refactor_period)
            if result.refactorized:
                self._refactorizations += 1
            s = search_direction(state, self.mass, alpha, state.iteration, gradient=gradient)
        return s

    def transition(self, state, p_new, direction=None, hit=None):
        result = apply_transition(
            state, p_new, self.config.refactor_period, direction=direction, hit=hit
        )
        if result.refactorized:
            self._refactorizations += 1
        return result.entering.size + result.leaving.size

    @property
    def refactorizations(self):
        return getattr(self, "_refactorizations", 0)


def solve(graph, mass, config=None, initial_potential=None):
    """Solve the regularized transport problem.

    Arguments
    ---------
    graph : Graph
        The graph, carrying the edge costs.
    mass : np.ndarray
        Balanced mass vector.
    config : SolverConfig or None
    initial_potential : np.ndarray or None
        Starting potential; random if not given.

    Returns
    -------
    SolveReport

    Raises
    ------
    ImbalancedMassError
        If the mass does not sum to zero.
    InfeasibleError
        If the dual is unbounded.

    """
    return HessUpdateSolver(graph, mass, config).solve(initial_potential)
