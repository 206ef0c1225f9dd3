"""Gradient ascent preconditioned by the Laplacian of the whole graph.

The full Laplacian D^T D is factored once before the first step; even
iterations step along its pseudoinverse applied to the gradient. When most
edges end up active this is close to the pseudo-Newton step, and far from it
when few do.

"""

import numpy as np

from ..factorization import factorize, pinv_apply
from ..graph import components
from .abc import SolverABC


class PrecondGradientSolver(SolverABC):
    """Alternating gradient / full-Laplacian preconditioned ascent."""

    name = "precondgrad"

    def prepare(self, state):
        everything = np.ones(self.graph.edge_count, dtype=bool)
        self._labeling = components(self.graph, everything)
        self._factor = factorize(self.graph, everything, self._labeling)

    def direction(self, state, gradient):
        if state.iteration % 2:
            return gradient
        return pinv_apply(self._factor, self._labeling, gradient)


def precond_gradient(graph, mass, config=None, initial_potential=None):
    """Solve by preconditioned gradient ascent; see ``hessupdate.solve``."""
    return PrecondGradientSolver(graph, mass, config).solve(initial_potential)
