"""Universal settings."""

import os
import pathlib


# solver defaults; the stopping rule is an absolute bound on the gradient norm
DEFAULT_ALPHA = 1.0
GRAD_TOL = 1e-8
MAX_ITER = 3000
REFACTOR_PERIOD = 500
SEED = 0
HIT_TIE_REL_TOL = 1e-12

# slack below which |Dp - c| is treated as sitting on a kink of the dual,
# relative to the largest of 1, the costs and the potentials
KINK_TOL = 1e-12

# s'Ls at or below this times |Ds|^2 makes the line search parabola flat
CURVATURE_TOL = 1e-14

# a direction with |s| or the cosine of its angle with the gradient at or
# below this is rounding noise, and the step is skipped
DIRECTION_REL_TOL = 1e-10

# rounds of moving kink edges onto the side a pseudo-Newton step pushes them
KINK_ROUNDS = 2

# a downdate pivot r_kk^2 at or below (DOWNDATE_PIVOT_TOL * r_kk)^2 is a failure
DOWNDATE_PIVOT_TOL = 1e-8

# |sum(f)| allowed for a mass vector
MASS_BALANCE_TOL = 1e-9

# divergence mismatch accepted by decompose()
DIVERGENCE_TOL = 1e-6

# residual arc flow, relative to the largest flow, below which decompose() stops peeling
PEEL_ZERO_TOL = 1e-14

# path flows closer than this are considered equal when building loops
PATH_FLOW_TOL = 1e-10

# slack of the shortest path oracle when comparing reduced costs and residuals
ORACLE_TOL = 1e-12

# reference run used as ground truth by the benchmark
REFERENCE_GRAD_TOL = 1e-12
REFERENCE_MAX_ITER = 100000

# log a progress line every this many iterations (DEBUG level)
LOG_EVERY = 100

# random graph generator, degrees follow a truncated power law
DEGREE_EXPONENT = 2.5
MEAN_DEGREE = 5.0
MIN_DEGREE = 1
MAX_DEGREE = 10
MEAN_DEGREE_SLACK = 0.5
GENERATOR_ATTEMPTS = 1000

# fraction of nodes that carry mass, and the range of their values
MASS_FRACTION = 0.1
MASS_RANGE = 10.0

# the CSV columns of a benchmark record, in order
BENCH_COLUMNS = [
    "size",
    "alpha",
    "seed",
    "solver",
    "time_s",
    "iters",
    "converged",
    "rel_err",
    "l1_cost",
]

# the CSV columns of the per-cell benchmark table
TABLE_COLUMNS = [
    "size",
    "alpha",
    "solver",
    "runs",
    "converged",
    "mean_time_s",
    "mean_iters",
    "mean_rel_err",
    "mean_l1_cost",
]

# the CSV columns of the sparsity experiment
SPARSITY_COLUMNS = [
    "size",
    "alpha",
    "seed",
    "converged",
    "l1_cost",
    "lp_value",
    "rel_diff",
]

# fitted loop coefficients within this distance count as a reproduced flow
MONOTONICITY_TOL = 1e-6

# where the solver defaults dotfile lives
CONFIG_PATH = os.getenv(
    "QRFLOW_CONFIG_PATH", pathlib.Path.home() / ".config" / "qrflow" / "qrflow.yaml"
)
