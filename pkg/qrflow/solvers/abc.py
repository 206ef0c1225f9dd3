"""The abstract base class defining the Solver interface.

A solver maximizes the dual of the regularized transport problem by ascent:
from the current potential it picks a search direction, runs the exact line
search along it, and moves. Solvers differ only in how they pick directions
and in what they maintain between iterations, so the loop, the stopping rule
and the report live here.

"""

import abc
import dataclasses
import logging
import time

import numpy as np

from .. import settings
from ..exceptions import ConfigError
from ..graph import check_mass
from ..objective import (
    SolverState,
    dual_gradient,
    dual_value,
    is_ascent_direction,
    line_search,
    primal_objective,
    recover_primal,
)


logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    """Parameters shared by every solver.

    Attributes
    ----------
    alpha : float
        Regularization coefficient, positive.
    grad_tol : float
        Stop once the gradient norm is at most this (absolute).
    max_iter : int
        Maximum number of ascent steps.
    refactor_period : int
        Rebuild the Laplacian factor after this many rank-1 events.
    seed : int
        Seed of the random initial potential.
    hit_tie_rel_tol : float
        Relative tolerance for simultaneous hitting times.

    Raises
    ------
    ConfigError
        If a value is out of range.

    """

    alpha: float = settings.DEFAULT_ALPHA
    grad_tol: float = settings.GRAD_TOL
    max_iter: int = settings.MAX_ITER
    refactor_period: int = settings.REFACTOR_PERIOD
    seed: int = settings.SEED
    hit_tie_rel_tol: float = settings.HIT_TIE_REL_TOL

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}.")
        if not self.grad_tol > 0:
            raise ConfigError(f"grad_tol must be positive, got {self.grad_tol}.")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be at least 1, got {self.max_iter}.")
        if self.refactor_period < 1:
            raise ConfigError(
                f"refactor_period must be at least 1, got {self.refactor_period}."
            )
        if self.hit_tie_rel_tol < 0:
            raise ConfigError("hit_tie_rel_tol must be nonnegative.")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass
class SolveReport:
    """The outcome of one solve."""

    solver: str
    alpha: float
    p: np.ndarray
    J: np.ndarray
    dual_value: float
    primal_value: float
    gradient_norm: float
    iterations: int
    converged: bool
    wall_time: float
    active_set_changes: int
    zero_step_flips: int = 0
    refactorizations: int = 0
    newton_tail: int = 0

    _SCALARS = (
        "solver",
        "alpha",
        "converged",
        "iterations",
        "gradient_norm",
        "dual_value",
        "primal_value",
        "wall_time",
        "active_set_changes",
        "zero_step_flips",
        "refactorizations",
        "newton_tail",
    )

    def transport_cost(self, graph):
        """The unregularized cost c^T J of the recovered flow."""
        return float(graph.costs @ self.J)

    def to_record(self):
        """Format the scalar fields as ``key: value`` lines."""
        lines = []
        for key in self._SCALARS:
            value = getattr(self, key)
            if isinstance(value, float):
                value = repr(float(value))
            lines.append(f"{key}: {value}")
        return "\n".join(lines)

    def to_dict(self):
        """A JSON-serializable document of the report."""
        document = {}
        for key in self._SCALARS:
            value = getattr(self, key)
            document[key] = value.item() if isinstance(value, np.generic) else value
        document["p"] = self.p.tolist()
        document["J"] = self.J.tolist()
        return document


class SolverABC(abc.ABC):
    """Dual ascent with exact line search.

    Arguments
    ---------
    graph : Graph
    mass : np.ndarray
        Balanced mass vector f.
    config : SolverConfig or None

    """

    name = None

    def __init__(self, graph, mass, config=None):
        self.graph = graph
        self.mass = check_mass(graph, mass)
        self.config = config if config is not None else SolverConfig()
        self.zero_step_flips = 0

    def initial_state(self, initial_potential=None):
        """A mean-centered starting potential, uniform on [0, 1) unless given."""
        if initial_potential is None:
            rng = np.random.default_rng(self.config.seed)
            initial_potential = rng.random(self.graph.node_count)
        p = np.array(initial_potential, dtype=float)
        return SolverState.from_potential(self.graph, p - p.mean())

    def prepare(self, state):
        """Set up whatever the solver maintains across iterations."""

    @abc.abstractmethod
    def direction(self, state, gradient):
        """Pick the search direction for iteration ``state.iteration``.

        Arguments
        ---------
        state : SolverState
        gradient : np.ndarray
            The dual gradient at ``state.p``.

        Returns
        -------
        np.ndarray
            A direction with nonnegative inner product with the gradient.

        """

    def transition(self, state, p_new, direction=None, hit=None):
        """Move to ``p_new``, reached by a step along ``direction``.

        ``hit`` are the edges the line search stopped on; see
        ``SolverState.move_to``.

        Returns
        -------
        int
            The number of edges whose active status changed.

        """
        old_mask = state.move_to(p_new, direction=direction, hit=hit)
        return int(np.count_nonzero(old_mask != state.mask))

    @property
    def refactorizations(self):
        return 0

    def solve(self, initial_potential=None):
        """Run the ascent until the gradient is small or the cap is reached.

        Returns
        -------
        SolveReport

        Raises
        ------
        InfeasibleError
            If the dual is unbounded (no feasible flow exists).

        """
        start = time.perf_counter()
        config = self.config
        alpha = config.alpha

        state = self.initial_state(initial_potential)
        self.prepare(state)

        gradient = dual_gradient(state, self.mass, alpha)
        norm = float(np.linalg.norm(gradient))

        steps = 0
        changes = 0
        self.zero_step_flips = 0
        last_change = 0
        converged = norm <= config.grad_tol

        while not converged and steps < config.max_iter:
            steps += 1
            state.iteration = steps

            s = self.direction(state, gradient)
            s = s - s.mean()
            if not is_ascent_direction(gradient, s):
                # a pseudo-Newton step whose gradient lies in the null space
                continue

            search = line_search(
                state, self.mass, alpha, s, tie_rel_tol=config.hit_tie_rel_tol
            )
            if search.entering_kinks.size:
                self.zero_step_flips += search.entering_kinks.size
                logger.debug(
                    "%s: %d edge(s) on a kink entered the active set at iteration %d.",
                    self.name, search.entering_kinks.size, steps,
                )

            flipped = self.transition(
                state, state.p + search.step * s, direction=s,
                hit=search.hitting_edges,
            )
            if flipped:
                changes += flipped
                last_change = steps

            gradient = dual_gradient(state, self.mass, alpha)
            norm = float(np.linalg.norm(gradient))
            converged = norm <= config.grad_tol

            if steps % settings.LOG_EVERY == 0:
                logger.debug(
                    "%s: iteration %d, |grad| = %.3e, %s step %.3e, %d active edges.",
                    self.name, steps, norm, search.rule, search.step,
                    int(state.mask.sum()),
                )

        flow = recover_primal(state, alpha)
        report = SolveReport(
            solver=self.name,
            alpha=alpha,
            p=state.p,
            J=flow,
            dual_value=dual_value(state, self.mass, alpha),
            primal_value=primal_objective(flow, self.graph.costs, alpha),
            gradient_norm=norm,
            iterations=steps,
            converged=converged,
            wall_time=time.perf_counter() - start,
            active_set_changes=changes,
            zero_step_flips=self.zero_step_flips,
            refactorizations=self.refactorizations,
            newton_tail=steps - last_change,
        )

        if converged:
            logger.info(
                "%s converged in %d iterations (|grad| = %.3e).",
                self.name, steps, norm,
            )
        else:
            logger.info(
                "%s stopped at the iteration cap %d (|grad| = %.3e).",
                self.name, steps, norm,
            )
        return report
