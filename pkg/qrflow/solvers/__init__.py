from .abc import SolverABC, SolverConfig, SolveReport
from .hessupdate import (
    HessUpdateSolver,
    apply_transition,
    assign_active_set,
    search_direction,
    solve,
)
from .graddescent import GradientAscentSolver, gradient_ascent
from .precondgrad import PrecondGradientSolver, precond_gradient


SOLVERS = {
    HessUpdateSolver.name: HessUpdateSolver,
    GradientAscentSolver.name: GradientAscentSolver,
    PrecondGradientSolver.name: PrecondGradientSolver,
}
