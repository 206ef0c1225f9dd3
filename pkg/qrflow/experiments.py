"""Benchmarks and experiments over generated instances.

``bench`` runs every requested solver on a grid of (size, alpha, seed) cells
and measures each run against a high-precision reference solve.
``exp_sparsity`` compares the transport cost of regularized solutions with
the exact unregularized optimum. ``exp_monotonicity`` follows the solution
along increasing alphas and reports how the differences between solutions
split into divergence-free loops.

"""

import collections
import concurrent.futures
import csv
import dataclasses
import logging
import math
import time

import numpy as np
import scipy.optimize

from . import settings
from .decomposition import decompose, divergence_free_diff
from .exceptions import ConfigError, ConvergenceError, Error, GenerationError
from .generators import COST_MODELS, gen_grid, gen_mass, gen_random_graph
from .oracle import lp_oracle
from .solvers import SOLVERS, SolverConfig, solve


logger = logging.getLogger(__name__)


ORACLE = "oracle"
RANDOM = "random"
GRID = "grid"


@dataclasses.dataclass(frozen=True)
class BenchSpec:
    """The grid of a benchmark.

    Attributes
    ----------
    sizes : tuple of int
        Node counts, or grid side lengths when ``graph`` is ``"grid"``.
    alphas : tuple of float
    seeds_per_cell : int
    solvers : tuple of str
        Any of ``hessupdate``, ``graddescent``, ``precondgrad``, ``oracle``.
    max_iter : int
    grad_tol : float
    costs : str
        ``unit`` or ``uniform`` edge costs for random graphs.
    graph : str
        ``random`` or ``grid``.
    jobs : int
        Worker processes; 1 runs everything in this process.
    seed_offset : int
        The seeds of a cell are ``seed_offset .. seed_offset + seeds_per_cell - 1``.

    Raises
    ------
    ConfigError
        If a value is out of range.

    """

    sizes: tuple
    alphas: tuple
    seeds_per_cell: int = 10
    solvers: tuple = ("hessupdate", "graddescent", "precondgrad", ORACLE)
    max_iter: int = settings.MAX_ITER
    grad_tol: float = settings.GRAD_TOL
    costs: str = "unit"
    graph: str = RANDOM
    jobs: int = 1
    seed_offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "solvers", tuple(self.solvers))

        if not self.sizes:
            raise ConfigError("The benchmark needs at least one size.")
        if min(self.sizes) < 2:
            raise ConfigError("Benchmark sizes must be at least 2.")
        if not self.alphas:
            raise ConfigError("The benchmark needs at least one alpha.")
        if min(self.alphas) <= 0:
            raise ConfigError("Benchmark alphas must be positive.")
        if not self.solvers:
            raise ConfigError("The benchmark needs at least one solver.")
        unknown = set(self.solvers) - set(SOLVERS) - {ORACLE}
        if unknown:
            raise ConfigError(f"Unknown solver(s): {', '.join(sorted(unknown))}.")
        if self.seeds_per_cell < 1:
            raise ConfigError("seeds_per_cell must be at least 1.")
        if self.costs not in COST_MODELS:
            raise ConfigError(f"costs must be one of {', '.join(COST_MODELS)}.")
        if self.graph not in (RANDOM, GRID):
            raise ConfigError(f'graph must be "{RANDOM}" or "{GRID}".')
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1.")
        # validates max_iter and grad_tol
        self.solver_config(self.alphas[0])

    @property
    def seeds(self):
        return range(self.seed_offset, self.seed_offset + self.seeds_per_cell)

    def solver_config(self, alpha, seed=settings.SEED):
        return SolverConfig(
            alpha=alpha, grad_tol=self.grad_tol, max_iter=self.max_iter, seed=seed
        )


@dataclasses.dataclass
class BenchRecord:
    """One run of one solver on one instance."""

    size: int
    alpha: float
    seed: int
    solver: str
    time_s: float
    iters: int
    converged: bool
    rel_err: float = None
    l1_cost: float = None

    @property
    def key(self):
        return (self.size, self.alpha, self.seed, self.solver)

    def as_row(self):
        row = dataclasses.asdict(self)
        return {key: "" if value is None else value for key, value in row.items()}


def make_instance(kind, size, seed, costs="unit"):
    """The graph and mass vector of one benchmark instance."""
    if kind == GRID:
        graph = gen_grid(size)
    else:
        graph = gen_random_graph(size, seed, costs=costs)
    return graph, gen_mass(graph, seed)


def reference_solve(graph, mass, alpha, seed=settings.SEED):
    """The high-precision solve used as ground truth."""
    config = SolverConfig(
        alpha=alpha,
        grad_tol=settings.REFERENCE_GRAD_TOL,
        max_iter=settings.REFERENCE_MAX_ITER,
        seed=seed,
    )
    return solve(graph, mass, config)


def _relative_error(value, reference):
    return abs(value - reference) / max(abs(reference), np.finfo(float).tiny)


def _run_solver(name, graph, mass, config, reference):
    start = time.perf_counter()
    try:
        report = SOLVERS[name](graph, mass, config).solve()
    except Error as exc:
        logger.warning("%s failed: %s", name, exc)
        return dict(time_s=time.perf_counter() - start, iters=0, converged=False)
    rel_err = None
    if reference is not None:
        rel_err = _relative_error(report.dual_value, reference.dual_value)
    return dict(
        time_s=report.wall_time,
        iters=report.iterations,
        converged=report.converged,
        rel_err=rel_err,
        l1_cost=report.transport_cost(graph),
    )


def run_instance(spec, size, seed):
    """Run every solver of the benchmark spec at every alpha on one instance.

    Returns
    -------
    list of BenchRecord
        A failed record for every (alpha, solver) when the instance cannot be
        generated.

    """
    start = time.perf_counter()
    try:
        graph, mass = make_instance(spec.graph, size, seed, spec.costs)
    except GenerationError as exc:
        logger.warning("Instance size %d, seed %d failed: %s", size, seed, exc)
        elapsed = time.perf_counter() - start
        return [
            BenchRecord(size, alpha, seed, name, time_s=elapsed, iters=0,
                        converged=False)
            for alpha in spec.alphas
            for name in spec.solvers
        ]
    records = []

    oracle_row = None
    if ORACLE in spec.solvers:
        start = time.perf_counter()
        try:
            result = lp_oracle(graph, mass)
            oracle_row = dict(
                time_s=time.perf_counter() - start,
                iters=result.augmentations,
                converged=True,
                l1_cost=result.optimal_value,
            )
        except Error as exc:
            logger.warning("oracle failed: %s", exc)
            oracle_row = dict(time_s=time.perf_counter() - start, iters=0,
                              converged=False)

    for alpha in spec.alphas:
        iterative = [name for name in spec.solvers if name != ORACLE]
        reference = None
        if iterative:
            try:
                reference = reference_solve(graph, mass, alpha, seed)
            except Error as exc:
                logger.warning("reference solve failed: %s", exc)
            else:
                if not reference.converged:
                    logger.warning(
                        "Reference solve for size %d, alpha %g, seed %d did not "
                        "converge (|grad| = %.3e).",
                        size, alpha, seed, reference.gradient_norm,
                    )

        config = spec.solver_config(alpha, seed)
        for name in spec.solvers:
            if name == ORACLE:
                row = oracle_row
            else:
                row = _run_solver(name, graph, mass, config, reference)
            records.append(BenchRecord(size, alpha, seed, name, **row))

    logger.info("Finished instance size %d, seed %d.", size, seed)
    return records


def bench(spec):
    """Run a benchmark.

    Instances run in parallel when ``spec.jobs > 1``; each solve is
    single-threaded.

    Returns
    -------
    records : list of BenchRecord
        Ordered by (size, alpha, seed, solver).
    table : list of dict
        The per-cell averages, see ``aggregate``.

    """
    tasks = [(size, seed) for size in spec.sizes for seed in spec.seeds]

    records = []
    if spec.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            futures = [pool.submit(run_instance, spec, size, seed)
                       for size, seed in tasks]
            for future in concurrent.futures.as_completed(futures):
                records.extend(future.result())
    else:
        for size, seed in tasks:
            records.extend(run_instance(spec, size, seed))

    records.sort(key=lambda record: record.key)
    return records, aggregate(records)


def _mean(values):
    values = [value for value in values if value is not None]
    return float(np.mean(values)) if values else None


def aggregate(records):
    """Average the records of every (size, alpha, solver) cell.

    ``mean_rel_err`` is infinite in a cell where some run did not converge.

    Returns
    -------
    list of dict
        One row per cell with the keys of ``settings.TABLE_COLUMNS``.

    """
    cells = collections.defaultdict(list)
    for record in records:
        cells[(record.size, record.alpha, record.solver)].append(record)

    table = []
    for (size, alpha, solver), group in sorted(cells.items()):
        converged = sum(record.converged for record in group)
        rel_err = _mean(record.rel_err for record in group)
        if rel_err is not None and converged < len(group):
            rel_err = math.inf
        table.append({
            "size": size,
            "alpha": alpha,
            "solver": solver,
            "runs": len(group),
            "converged": converged,
            "mean_time_s": _mean(record.time_s for record in group),
            "mean_iters": _mean(record.iters for record in group),
            "mean_rel_err": rel_err,
            "mean_l1_cost": _mean(record.l1_cost for record in group),
        })
    return table


def _write_csv(rows, columns, fileobj):
    writer = csv.DictWriter(fileobj, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: "" if row[key] is None else row[key] for key in columns})


def write_records_csv(records, fileobj):
    """Write benchmark records with the columns of ``settings.BENCH_COLUMNS``."""
    _write_csv([record.as_row() for record in records], settings.BENCH_COLUMNS,
               fileobj)


def write_table_csv(table, fileobj, columns=None):
    """Write aggregated rows, by default with ``settings.TABLE_COLUMNS``."""
    _write_csv(table, columns or settings.TABLE_COLUMNS, fileobj)


# sparsity
# =============================================================================

SparsityGap = collections.namedtuple(
    "SparsityGap", "rel_diff l1_cost lp_value converged"
)


def sparsity_gap(graph, mass, alpha, config=None, oracle=None):
    """How far the regularized solution's transport cost is from the LP optimum.

    Arguments
    ---------
    graph : Graph
    mass : np.ndarray
    alpha : float
    config : SolverConfig or None
        Its alpha is replaced by ``alpha``.
    oracle : OracleResult or None
        A precomputed oracle result for this instance.

    Returns
    -------
    SparsityGap
        ``rel_diff`` is |c^T J - LP*| / LP*, or the absolute difference when
        the optimum is zero.

    """
    config = (config or SolverConfig()).replace(alpha=alpha)
    if oracle is None:
        oracle = lp_oracle(graph, mass)
    report = solve(graph, mass, config)
    l1_cost = report.transport_cost(graph)
    difference = abs(l1_cost - oracle.optimal_value)
    if oracle.optimal_value > 0:
        difference /= oracle.optimal_value
    return SparsityGap(difference, l1_cost, oracle.optimal_value, report.converged)


def exp_sparsity(sizes, alphas, seeds, config=None, costs="unit"):
    """The sparsity gap over random instances.

    Unconverged runs are kept and flagged; their gap is not meaningful.

    Returns
    -------
    list of dict
        One row per (size, alpha, seed) with ``settings.SPARSITY_COLUMNS``.

    """
    rows = []
    for size in sizes:
        for seed in seeds:
            graph, mass = make_instance(RANDOM, size, seed, costs)
            oracle = lp_oracle(graph, mass)
            for alpha in alphas:
                gap = sparsity_gap(graph, mass, alpha, config, oracle=oracle)
                if not gap.converged:
                    logger.warning(
                        "Unconverged solve at size %d, alpha %g, seed %d.",
                        size, alpha, seed,
                    )
                rows.append({
                    "size": size,
                    "alpha": alpha,
                    "seed": seed,
                    "converged": gap.converged,
                    "l1_cost": gap.l1_cost,
                    "lp_value": gap.lp_value,
                    "rel_diff": gap.rel_diff,
                })
    return rows


def sparsity_table(rows):
    """The largest converged gap for every (size, alpha)."""
    cells = collections.defaultdict(list)
    for row in rows:
        if row["converged"]:
            cells[(row["size"], row["alpha"])].append(row["rel_diff"])
    return [
        {"size": size, "alpha": alpha, "runs": len(gaps), "max_rel_diff": max(gaps)}
        for (size, alpha), gaps in sorted(cells.items())
    ]


# monotonicity
# =============================================================================


@dataclasses.dataclass
class LoopSplit:
    """The divergence-free loops between the solutions at two alphas."""

    alpha_low: float
    alpha_high: float
    diff: object
    supports: list
    epsilons: list


@dataclasses.dataclass
class InteriorFit:
    """An interior solution written with the outer pair's loops."""

    alpha: float
    coefficients: np.ndarray
    residual: float
    in_span: bool


@dataclasses.dataclass
class MonotonicityReport:
    """Whether solutions between two alphas move along the same loops.

    Attributes
    ----------
    alphas : list of float
    flows : list of np.ndarray
        The solution at every alpha.
    splits : list of LoopSplit
        Loops between consecutive alphas.
    outer : LoopSplit or None
        Loops between the smallest and the largest alpha.
    fits : list of InteriorFit
        Every interior solution fitted on the outer loops, with coefficients
        bounded by the outer epsilons.
    in_span : bool
        Every interior solution is reproduced by its fit.
    monotone : bool
        Every loop's coefficient is nondecreasing along the alphas.

    """

    alphas: list
    flows: list
    splits: list
    outer: object
    fits: list
    in_span: bool
    monotone: bool


def _split(graph, mass, alpha_low, flow_low, alpha_high, flow_high):
    diff = divergence_free_diff(
        decompose(graph, flow_high, mass), decompose(graph, flow_low, mass), mass
    )
    supports = []
    for k in range(len(diff.terms)):
        loop = diff.arc_flow(k, graph.edge_count)
        supports.append(np.flatnonzero(loop).tolist())
    epsilons = [term.epsilon for term in diff.terms]
    return LoopSplit(alpha_low, alpha_high, diff, supports, epsilons)


def exp_monotonicity(graph, mass, alphas, config=None):
    """Follow the solution along increasing alphas.

    This reports on the conjectured behaviour; it never asserts it.

    Arguments
    ---------
    graph : Graph
    mass : np.ndarray
    alphas : Sequence[float]
        Strictly increasing.
    config : SolverConfig or None

    Returns
    -------
    MonotonicityReport

    Raises
    ------
    ValueError
        If the alphas are not strictly increasing.
    ConvergenceError
        If a solve does not converge.

    """
    alphas = [float(alpha) for alpha in alphas]
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("The alphas must be strictly increasing.")
    config = config or SolverConfig()

    flows = []
    for alpha in alphas:
        report = solve(graph, mass, config.replace(alpha=alpha))
        if not report.converged:
            raise ConvergenceError(
                f"The solve at alpha {alpha:g} did not converge "
                f"(|grad| = {report.gradient_norm:.3e})."
            )
        flows.append(report.J)

    splits = [
        _split(graph, mass, alphas[i], flows[i], alphas[i + 1], flows[i + 1])
        for i in range(len(alphas) - 1)
    ]
    if len(alphas) < 2:
        return MonotonicityReport(alphas, flows, splits, None, [], True, True)

    outer = _split(graph, mass, alphas[0], flows[0], alphas[-1], flows[-1])
    loops = np.column_stack(
        [outer.diff.arc_flow(k, graph.edge_count) for k in range(len(outer.epsilons))]
    ) if outer.epsilons else np.zeros((graph.edge_count, 0))
    bounds = np.array(outer.epsilons)

    fits = []
    for alpha, flow in zip(alphas[1:-1], flows[1:-1]):
        target = flow - flows[0]
        if bounds.size:
            fit = scipy.optimize.lsq_linear(loops, target, bounds=(0.0, bounds))
            coefficients = fit.x
        else:
            coefficients = np.zeros(0)
        residual = float(np.linalg.norm(loops @ coefficients - target))
        fits.append(InteriorFit(
            alpha, coefficients, residual, residual <= settings.MONOTONICITY_TOL
        ))

    path = [np.zeros(bounds.size)]
    path += [fit.coefficients for fit in fits]
    path.append(bounds)
    steps = np.diff(np.array(path), axis=0)
    monotone = bool(np.all(steps >= -settings.MONOTONICITY_TOL))
    in_span = all(fit.in_span for fit in fits)

    logger.info(
        "Monotonicity: %d outer loop(s), interior solutions %s the span, "
        "coefficients %s.",
        bounds.size, "in" if in_span else "outside",
        "monotone" if monotone else "not monotone",
    )
    return MonotonicityReport(alphas, flows, splits, outer, fits, in_span, monotone)
