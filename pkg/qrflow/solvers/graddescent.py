"""Plain gradient ascent on the dual, with the exact line search."""

from .abc import SolverABC


class GradientAscentSolver(SolverABC):
    """Steps along the gradient at every iteration."""

    name = "graddescent"

    def direction(self, state, gradient):
        return gradient


def gradient_ascent(graph, mass, config=None, initial_potential=None):
    """Solve by gradient ascent; see ``hessupdate.solve`` for the arguments."""
    return GradientAscentSolver(graph, mass, config).solve(initial_potential)
