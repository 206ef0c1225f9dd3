"""The regularized transport objectives and the exact dual line search.

The primal problem minimizes c^T J + (alpha/2)|J|^2 over nonnegative flows J
with D^T J = f. Its dual maximizes

    g(p) = alpha f^T p - 1/2 |(Dp - c)_+|^2

(reported divided by alpha so it compares directly with the primal value).
The dual is piecewise quadratic: on a region where the active set
S(p) = {e : (Dp - c)_e > 0} is fixed, it is a concave quadratic with Hessian
-L, the Laplacian of the active subgraph. A line search therefore either
reaches the vertex of the current parabola or stops at the first edge whose
slack changes sign.

"""

import collections
import dataclasses
import math

import numpy as np

from . import settings
from .exceptions import InfeasibleError
from .graph import divergence, incidence_apply


@dataclasses.dataclass
class SolverState:
    """The iterate of a dual ascent method.

    Attributes
    ----------
    graph : Graph
    p : np.ndarray
        Node potentials.
    v : np.ndarray
        Edge slacks, always Dp - c.
    mask : np.ndarray
        The active set of p.
    labeling : ComponentLabeling or None
        Components of the active subgraph, when a method tracks them.
    factor : CholeskyFactor or None
        Factor of L + NN^T, when a method tracks it.
    iteration : int

    """

    graph: object
    p: np.ndarray
    v: np.ndarray
    mask: np.ndarray
    labeling: object = None
    factor: object = None
    iteration: int = 0

    @classmethod
    def from_potential(cls, graph, p):
        p = np.array(p, dtype=float)
        v = incidence_apply(graph, p) - graph.costs
        return cls(graph, p, v, v > 0)

    def kinks(self):
        """The edges whose side is ambiguous.

        Those with a numerically zero slack, and those whose mask disagrees
        with the sign of their slack, as a hit edge snapped a rounding error
        short of zero does.

        """
        scale = max(
            1.0,
            float(np.abs(self.graph.costs).max(initial=0.0)),
            float(np.abs(self.p).max(initial=0.0)),
        )
        near_zero = np.abs(self.v) <= settings.KINK_TOL * scale
        return near_zero | (self.mask != (self.v > 0))

    def move_to(self, p, direction=None, hit=None):
        """Set a new potential, recomputing slacks and mask.

        Edges off a kink are active when their slack is positive. When the
        move was a step along ``direction``, edges on a kink and the ``hit``
        edges of the line search take the side the step carried them to, see
        ``active_piece``.

        Returns
        -------
        np.ndarray
            The previous mask.

        """
        old_mask = self.mask
        self.p = np.asarray(p, dtype=float)
        self.v = incidence_apply(self.graph, self.p) - self.graph.costs
        mask = self.v > 0
        if direction is not None:
            Ds = incidence_apply(self.graph, direction)
            side = _side(Ds, old_mask)
            mask = np.where(self.kinks(), side, mask)
            if hit is not None and len(hit):
                hit = np.asarray(hit, dtype=np.intp)
                mask[hit] = side[hit]
        self.mask = mask
        return old_mask

    def set_mask(self, mask):
        """Replace the mask without moving; returns the previous mask."""
        old_mask = self.mask
        self.mask = np.asarray(mask, dtype=bool).copy()
        return old_mask


def _side(Ds, fallback):
    # active when pushed up, inactive when pushed down, unchanged otherwise
    return np.where(Ds > 0, True, np.where(Ds < 0, False, fallback))


def active_piece(state, Ds, kinks=None):
    """The active set of the dual along p + t s for small t > 0.

    Off a kink an edge keeps its place in ``state.mask``. On a kink it is
    active exactly when s pushes its slack up, ``(Ds)_e > 0``, and keeps its
    place when ``(Ds)_e = 0``. The line search, the pseudo-Newton direction
    and the mask after a step all follow this rule.

    Arguments
    ---------
    state : SolverState
    Ds : np.ndarray
        The incidence operator applied to the direction.
    kinks : np.ndarray or None
        Precomputed ``state.kinks()``.

    """
    if kinks is None:
        kinks = state.kinks()
    return np.where(kinks, _side(Ds, state.mask), state.mask)


def dual_objective(state, mass, alpha):
    """g(p) = alpha f^T p - 1/2 sum over active edges of v_e^2."""
    positive = state.v[state.mask]
    return alpha * float(mass @ state.p) - 0.5 * float(positive @ positive)


def dual_value(state, mass, alpha):
    """The dual objective with its 1/alpha prefactor, comparable to the primal value."""
    return dual_objective(state, mass, alpha) / alpha


def dual_gradient(state, mass, alpha):
    """The gradient alpha f - D^T M v."""
    return alpha * mass - divergence(state.graph, np.where(state.mask, state.v, 0.0))


def recover_primal(state, alpha):
    """The primal flow J = (Dp - c)_+ / alpha."""
    return np.maximum(state.v, 0.0) / alpha


def primal_objective(flow, costs, alpha):
    """c^T J + (alpha/2)|J|^2.

    Raises
    ------
    ValueError
        If the flow has a negative entry.

    """
    flow = np.asarray(flow, dtype=float)
    if np.any(flow < 0):
        raise ValueError("Flows must be nonnegative.")
    return float(costs @ flow) + 0.5 * alpha * float(flow @ flow)


# line search
# =============================================================================

QUADRATIC = "quadratic"
ACTIVE_SET = "active-set"


LineSearchResult = collections.namedtuple(
    "LineSearchResult",
    "step rule t_quadratic t_active_set hitting_edges entering_kinks",
)


def is_ascent_direction(gradient, s, rel_tol=settings.DIRECTION_REL_TOL):
    """Whether s is a usable ascent direction rather than rounding noise.

    Both |s| relative to |grad g| and the cosine between s and the gradient
    must exceed ``rel_tol``. A pseudo-Newton step of a gradient lying in the
    null space of the active Laplacian fails the first test.

    """
    gradient_norm = float(np.linalg.norm(gradient))
    s_norm = float(np.linalg.norm(s))
    if s_norm <= rel_tol * gradient_norm or s_norm == 0.0:
        return False
    return float(gradient @ s) > rel_tol * gradient_norm * s_norm


def line_search(state, mass, alpha, s, tie_rel_tol=settings.HIT_TIE_REL_TOL):
    """Exact line search of the piecewise quadratic dual along s.

    Along p + t s the dual is the parabola of the current active set until the
    first hitting time h_e = -v_e / (Ds)_e > 0 of some edge. The step is the
    smaller of the parabola's vertex and that hitting time.

    Edges sitting on a kink (see ``SolverState.kinks``) belong to the piece
    that s moves them into: they count as active when (Ds)_e > 0, and have no
    hitting time. Those that enter
    this way are reported as ``entering_kinks``; they are the edges that would
    otherwise give a zero hitting time.

    Arguments
    ---------
    state : SolverState
    mass : np.ndarray
    alpha : float
    s : np.ndarray
        An ascent direction.
    tie_rel_tol : float
        Hitting times within this relative distance of the minimum are
        reported as simultaneous.

    Returns
    -------
    LineSearchResult

    Raises
    ------
    InfeasibleError
        If the dual increases without bound along s.

    """
    Ds = incidence_apply(state.graph, s)
    v = state.v

    kinks = state.kinks()
    piece = active_piece(state, Ds, kinks)
    entering = np.flatnonzero(kinks & piece & ~state.mask)

    slope = alpha * float(mass @ s) - float(v[piece] @ Ds[piece])
    curvature = float(Ds[piece] @ Ds[piece])
    if curvature > settings.CURVATURE_TOL * float(Ds @ Ds):
        t_quadratic = slope / curvature
    else:
        t_quadratic = math.inf

    # only crossings that would change the mask bound the piece
    candidates = ~kinks & (Ds != 0) & (_side(Ds, state.mask) != state.mask)
    hitting = np.full(v.shape, math.inf)
    hitting[candidates] = -v[candidates] / Ds[candidates]
    hitting[hitting <= 0] = math.inf
    t_active_set = float(hitting.min(initial=math.inf))

    if math.isinf(t_quadratic) and math.isinf(t_active_set):
        raise InfeasibleError(
            "The dual is unbounded along the search direction; "
            "no feasible flow carries this mass."
        )

    if t_active_set <= t_quadratic:
        tied = hitting <= t_active_set * (1.0 + tie_rel_tol)
        return LineSearchResult(
            t_active_set, ACTIVE_SET, t_quadratic, t_active_set,
            np.flatnonzero(tied), entering,
        )

    return LineSearchResult(
        t_quadratic, QUADRATIC, t_quadratic, t_active_set,
        np.array([], dtype=np.intp), entering,
    )
