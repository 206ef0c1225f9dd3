"""The command line interface."""

import argparse
import contextlib
import json
import logging
import os
import pathlib
import sys

from . import dotfile, exceptions, formats, settings
from .decomposition import check_bounds, decompose, to_document
from .experiments import (
    bench,
    exp_monotonicity,
    exp_sparsity,
    sparsity_table,
    write_records_csv,
    write_table_csv,
)
from .generators import UNIFORM, UNIT, gen_grid, gen_mass, gen_random_graph
from .oracle import check_certificate, lp_oracle
from .solvers import SOLVERS


# output formatting
# =============================================================================

_RESET = "\u001b[0m"


def _style(code):
    """An ANSI styler for report lines, a no-op when QRFLOW_COLOR is no.

    The variable is read on every call rather than at import.

    """

    def styler(message):
        if os.getenv("QRFLOW_COLOR", "yes") == "no":
            return message
        return code + message + _RESET

    return styler


# separators and tolerances
faded = _style("\u001b[2m")
# report values and cycles
info = _style("\u001b[35m")
# report keys
info_heading = _style("\u001b[34m")
# solver names, paths, alpha intervals
highlight = _style("\u001b[37;1m")
# failed certificates, violated bounds, errors
bad = _style("\u001b[31m")
# converged solves, certificates that hold
good = _style("\u001b[32m")


def fatal_error(msg, code=1):
    """Print a one-line error after the report on stdout and exit with ``code``."""
    print(bad(msg), file=sys.stdout)
    sys.exit(code)


def _print_field(key, value):
    print(f"{info_heading(key)}: {info(str(value))}")


@contextlib.contextmanager
def _output(path):
    """Open ``path`` for writing, or yield stdout when it is None or "-"."""
    if path is None or str(path) == "-":
        yield sys.stdout
    else:
        with pathlib.Path(path).open("w") as fileobj:
            yield fileobj


def _read(path, reader, *args):
    try:
        with pathlib.Path(path).open() as fileobj:
            return reader(fileobj, *args)
    except FileNotFoundError:
        raise exceptions.Error(f"No such file: {path}.")


def _load_instance(args):
    graph = _read(args.graph, formats.read_graph)
    mass = _read(args.mass, formats.read_mass, graph)
    return graph, mass


def _float_list(value):
    try:
        return [float(part) for part in value.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected a comma-separated list: {value}")


def _int_list(value):
    try:
        return [int(part) for part in value.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected a comma-separated list: {value}")


def _add_instance_arguments(parser):
    parser.add_argument("graph", type=pathlib.Path, help="Graph file.")
    parser.add_argument("mass", type=pathlib.Path, help="Mass file.")


def _add_solver_arguments(parser):
    parser.add_argument("--alpha", type=float, help="Regularization coefficient.")
    parser.add_argument("--tol", type=float, help="Gradient norm tolerance.")
    parser.add_argument("--max-iter", type=int, help="Iteration cap.")
    parser.add_argument("--seed", type=int, help="Seed of the initial potential.")


def _solver_config(args):
    overrides = {
        "alpha": args.alpha,
        "grad_tol": args.tol,
        "max_iter": args.max_iter,
        "seed": args.seed,
    }
    return args.defaults.replace(
        **{key: value for key, value in overrides.items() if value is not None}
    )


# commands
# =============================================================================

# qrflow solve
# ------------
# usage:
#   qrflow solve <graph> <mass> [--alpha A] [--tol T] [--max-iter K] [--seed S]
#                [--solver NAME] [--flow-out FILE] [--json]


def configure_solve_parser(subparsers):
    solve_parser = subparsers.add_parser("solve", help="Solve a regularized instance.")
    _add_instance_arguments(solve_parser)
    _add_solver_arguments(solve_parser)
    solve_parser.add_argument(
        "--solver", choices=sorted(SOLVERS), default="hessupdate"
    )
    solve_parser.add_argument("--flow-out", type=pathlib.Path)
    solve_parser.add_argument("--json", action="store_true")
    solve_parser.set_defaults(cmd=cmd_solve)


def cmd_solve(args):
    graph, mass = _load_instance(args)
    config = _solver_config(args)
    report = SOLVERS[args.solver](graph, mass, config).solve()

    if args.flow_out is not None:
        with _output(args.flow_out) as fileobj:
            formats.write_flow(report.J, fileobj)

    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
        return

    status = good("converged") if report.converged else bad("not converged")
    print(highlight(report.solver) + faded(f" :: alpha = {report.alpha:g} :: ") + status)
    for line in report.to_record().splitlines():
        key, value = line.split(": ", 1)
        _print_field(key, value)
    _print_field("l1_cost", repr(report.transport_cost(graph)))


# qrflow oracle
# -------------
# usage:
#   qrflow oracle <graph> <mass> [--flow-out FILE] [--json]


def configure_oracle_parser(subparsers):
    oracle_parser = subparsers.add_parser(
        "oracle", help="Solve the unregularized problem exactly."
    )
    _add_instance_arguments(oracle_parser)
    oracle_parser.add_argument("--flow-out", type=pathlib.Path)
    oracle_parser.add_argument("--json", action="store_true")
    oracle_parser.set_defaults(cmd=cmd_oracle)


def cmd_oracle(args):
    graph, mass = _load_instance(args)
    result = lp_oracle(graph, mass)
    certificate = check_certificate(graph, mass, result)

    if args.flow_out is not None:
        with _output(args.flow_out) as fileobj:
            formats.write_flow(result.flow, fileobj)

    if args.json:
        document = result.to_dict()
        document["certificate"] = certificate.violations
        print(json.dumps(document, indent=2))
        return

    _print_field("optimal_value", repr(result.optimal_value))
    _print_field("augmentations", result.augmentations)
    if certificate.holds:
        print(good("certificate holds"))
    else:
        for violation in certificate.violations:
            print(bad(violation))


# qrflow decompose
# ----------------
# usage:
#   qrflow decompose <graph> <mass> --flow-in FILE [--json]


def configure_decompose_parser(subparsers):
    decompose_parser = subparsers.add_parser(
        "decompose", help="Decompose a flow into paths and cycles."
    )
    _add_instance_arguments(decompose_parser)
    decompose_parser.add_argument("--flow-in", type=pathlib.Path, required=True)
    decompose_parser.add_argument("--json", action="store_true")
    decompose_parser.set_defaults(cmd=cmd_decompose)


def cmd_decompose(args):
    graph, mass = _load_instance(args)
    flow = _read(args.flow_in, formats.read_flow, graph)
    decomposition = decompose(graph, flow, mass)

    if args.json:
        print(json.dumps(to_document(decomposition), indent=2))
        return

    for path, amount in decomposition.paths:
        nodes = " -> ".join(str(v) for v in path.nodes)
        print(highlight(nodes) + faded(f" :: {amount!r}"))
    for cycle, amount in decomposition.cycles:
        nodes = " -> ".join(str(v) for v in cycle.nodes + cycle.nodes[:1])
        print(info(nodes) + faded(f" :: cycle :: {amount!r}"))

    if not decomposition.cycles:
        bounds = check_bounds(decomposition, mass)
        for violation in bounds.violations:
            print(bad(violation))


# qrflow gen-graph, gen-grid, gen-mass
# ------------------------------------
# usage:
#   qrflow gen-graph --nodes N --seed S [--uniform-costs] [--out FILE]
#   qrflow gen-grid --side N [--out FILE]
#   qrflow gen-mass <graph> --seed S [--out FILE]


def configure_gen_graph_parser(subparsers):
    gen_parser = subparsers.add_parser("gen-graph", help="Generate a random graph.")
    gen_parser.add_argument("--nodes", type=int, required=True)
    gen_parser.add_argument("--seed", type=int, default=settings.SEED)
    gen_parser.add_argument("--uniform-costs", action="store_true")
    gen_parser.add_argument("--out", type=pathlib.Path)
    gen_parser.set_defaults(cmd=cmd_gen_graph)


def cmd_gen_graph(args):
    costs = UNIFORM if args.uniform_costs else UNIT
    graph = gen_random_graph(args.nodes, args.seed, costs=costs)
    with _output(args.out) as fileobj:
        formats.write_graph(graph, fileobj)


def configure_gen_grid_parser(subparsers):
    grid_parser = subparsers.add_parser("gen-grid", help="Generate a square grid.")
    grid_parser.add_argument("--side", type=int, required=True)
    grid_parser.add_argument("--out", type=pathlib.Path)
    grid_parser.set_defaults(cmd=cmd_gen_grid)


def cmd_gen_grid(args):
    with _output(args.out) as fileobj:
        formats.write_graph(gen_grid(args.side), fileobj)


def configure_gen_mass_parser(subparsers):
    mass_parser = subparsers.add_parser("gen-mass", help="Generate a mass vector.")
    mass_parser.add_argument("graph", type=pathlib.Path)
    mass_parser.add_argument("--seed", type=int, default=settings.SEED)
    mass_parser.add_argument("--out", type=pathlib.Path)
    mass_parser.set_defaults(cmd=cmd_gen_mass)


def cmd_gen_mass(args):
    graph = _read(args.graph, formats.read_graph)
    with _output(args.out) as fileobj:
        formats.write_mass(gen_mass(graph, args.seed), fileobj)


# qrflow bench
# ------------
# usage:
#   qrflow bench --spec FILE [--out CSV] [--table-out CSV]


def configure_bench_parser(subparsers):
    bench_parser = subparsers.add_parser("bench", help="Run a benchmark grid.")
    bench_parser.add_argument("--spec", type=pathlib.Path, required=True)
    bench_parser.add_argument("--out", type=pathlib.Path)
    bench_parser.add_argument("--table-out", type=pathlib.Path)
    bench_parser.set_defaults(cmd=cmd_bench)


def cmd_bench(args):
    spec = _read(args.spec, dotfile.load_bench_spec)
    records, table = bench(spec)

    with _output(args.out) as fileobj:
        write_records_csv(records, fileobj)

    if args.table_out is not None:
        with _output(args.table_out) as fileobj:
            write_table_csv(table, fileobj)


# qrflow exp-sparsity
# -------------------
# usage:
#   qrflow exp-sparsity --sizes 50,100 --alphas 1e-5,1e-2 --seeds 0,1,2
#                       [--out CSV] [--table-out CSV]


def configure_exp_sparsity_parser(subparsers):
    sparsity_parser = subparsers.add_parser(
        "exp-sparsity", help="Compare regularized and exact transport costs."
    )
    sparsity_parser.add_argument("--sizes", type=_int_list, required=True)
    sparsity_parser.add_argument("--alphas", type=_float_list, required=True)
    sparsity_parser.add_argument("--seeds", type=_int_list, default=[0])
    sparsity_parser.add_argument("--out", type=pathlib.Path)
    sparsity_parser.add_argument("--table-out", type=pathlib.Path)
    sparsity_parser.set_defaults(cmd=cmd_exp_sparsity)


def cmd_exp_sparsity(args):
    rows = exp_sparsity(args.sizes, args.alphas, args.seeds, config=args.defaults)

    with _output(args.out) as fileobj:
        write_table_csv(rows, fileobj, columns=settings.SPARSITY_COLUMNS)

    if args.table_out is not None:
        with _output(args.table_out) as fileobj:
            write_table_csv(
                sparsity_table(rows), fileobj,
                columns=["size", "alpha", "runs", "max_rel_diff"],
            )


# qrflow exp-monotonicity
# -----------------------
# usage:
#   qrflow exp-monotonicity <graph> <mass> --alphas 1e-4,1,100 [--json]


def configure_exp_monotonicity_parser(subparsers):
    monotonicity_parser = subparsers.add_parser(
        "exp-monotonicity", help="Follow the solution along increasing alphas."
    )
    _add_instance_arguments(monotonicity_parser)
    monotonicity_parser.add_argument("--alphas", type=_float_list, required=True)
    monotonicity_parser.add_argument("--json", action="store_true")
    monotonicity_parser.set_defaults(cmd=cmd_exp_monotonicity)


def _split_document(split):
    return {
        "alpha_low": split.alpha_low,
        "alpha_high": split.alpha_high,
        "loops": [
            {"edges": support, "epsilon": epsilon}
            for support, epsilon in zip(split.supports, split.epsilons)
        ],
    }


def cmd_exp_monotonicity(args):
    graph, mass = _load_instance(args)
    try:
        report = exp_monotonicity(graph, mass, args.alphas, config=args.defaults)
    except ValueError as exc:
        raise exceptions.Error(str(exc))

    if args.json:
        document = {
            "alphas": report.alphas,
            "splits": [_split_document(split) for split in report.splits],
            "fits": [
                {
                    "alpha": fit.alpha,
                    "coefficients": fit.coefficients.tolist(),
                    "residual": fit.residual,
                    "in_span": fit.in_span,
                }
                for fit in report.fits
            ],
            "in_span": report.in_span,
            "monotone": report.monotone,
        }
        print(json.dumps(document, indent=2))
        return

    for split in report.splits:
        print(highlight(f"alpha {split.alpha_low:g} -> {split.alpha_high:g}"))
        if not split.epsilons:
            print(faded("    no change"))
        for support, epsilon in zip(split.supports, split.epsilons):
            print(f"    {info_heading('loop')}: edges {support} "
                  + faded(f":: epsilon = {epsilon!r}"))
    for fit in report.fits:
        coefficients = ", ".join(f"{value:.6g}" for value in fit.coefficients)
        status = good("in span") if fit.in_span else bad("outside span")
        print(f"{info_heading(f'alpha {fit.alpha:g}')}: [{coefficients}] " + status)
    _print_field("monotone", report.monotone)


# main
# =============================================================================


def _configure_logging(verbosity):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def main():
    try:
        defaults = dotfile.load_path(settings.CONFIG_PATH)
    except exceptions.Error as exc:
        fatal_error("Error: " + str(exc))

    description = """
        Solve quadratically-regularized optimal transport problems on graphs.
    """

    parser = argparse.ArgumentParser(description=description)
    parser.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="Log progress; repeat for more detail.",
    )
    parser.set_defaults(defaults=defaults)
    subparsers = parser.add_subparsers()

    configure_solve_parser(subparsers)
    configure_oracle_parser(subparsers)
    configure_decompose_parser(subparsers)
    configure_gen_graph_parser(subparsers)
    configure_gen_grid_parser(subparsers)
    configure_gen_mass_parser(subparsers)
    configure_bench_parser(subparsers)
    configure_exp_sparsity_parser(subparsers)
    configure_exp_monotonicity_parser(subparsers)

    args = parser.parse_args()
    _configure_logging(args.verbose)

    if "cmd" not in args:
        parser.print_usage()
        sys.exit(0)

    try:
        args.cmd(args)
    except exceptions.Error as exc:
        fatal_error("Error: " + str(exc))
