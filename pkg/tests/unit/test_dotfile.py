import io
import textwrap

import qrflow.dotfile
import qrflow.exceptions
import qrflow.solvers

import pytest


EXAMPLE = textwrap.dedent(
    """
    solver:
        alpha: 0.5
        grad_tol: 1e-10
        max_iter: 200
        refactor_period: 50
        seed: 7
    """
)

BENCH = textwrap.dedent(
    """
    sizes: [50, 100]
    alphas: [1e-5, 1e-4, 1e-3, 1e-2]
    seeds_per_cell: 10
    solvers: [hessupdate, graddescent, oracle]
    costs: uniform
    """
)


def test_load_returns_solver_config():
    # given
    fileobj = io.StringIO(EXAMPLE)

    # when
    config = qrflow.dotfile.load(fileobj)

    # then
    assert isinstance(config, qrflow.solvers.SolverConfig)
    assert config.alpha == 0.5
    assert config.grad_tol == 1e-10
    assert config.max_iter == 200
    assert config.refactor_period == 50
    assert config.seed == 7


def test_load_of_an_empty_file_gives_the_defaults():
    assert qrflow.dotfile.load(io.StringIO("")) == qrflow.solvers.SolverConfig()


def test_load_raises_on_unknown_key():
    # given - "tolerance" is not a solver setting
    bad_example = textwrap.dedent(
        """
        solver:
            alpha: 0.5
            tolerance: 1e-10
        """
    )

    # when then
    fileobj = io.StringIO(bad_example)

    with pytest.raises(qrflow.exceptions.ConfigError):
        qrflow.dotfile.load(fileobj)


def test_load_raises_on_unknown_section():
    fileobj = io.StringIO("stores:\n    home: {}\n")

    with pytest.raises(qrflow.exceptions.ConfigError):
        qrflow.dotfile.load(fileobj)


def test_load_raises_on_bad_value():
    fileobj = io.StringIO("solver:\n    max_iter: many\n")

    with pytest.raises(qrflow.exceptions.ConfigError):
        qrflow.dotfile.load(fileobj)


def test_load_raises_on_out_of_range_value():
    fileobj = io.StringIO("solver:\n    alpha: -1\n")

    with pytest.raises(qrflow.exceptions.ConfigError):
        qrflow.dotfile.load(fileobj)


def test_load_raises_on_invalid_yaml():
    fileobj = io.StringIO("solver: [alpha\n")

    with pytest.raises(qrflow.exceptions.ConfigError):
        qrflow.dotfile.load(fileobj)


def test_load_path_falls_back_to_defaults(tmp_path):
    config = qrflow.dotfile.load_path(tmp_path / "missing.yaml")

    assert config == qrflow.solvers.SolverConfig()


def test_load_path_reads_the_file(tmp_path):
    # given
    path = tmp_path / "qrflow.yaml"
    path.write_text(EXAMPLE)

    # when
    config = qrflow.dotfile.load_path(path)

    # then
    assert config.alpha == 0.5


def test_load_bench_spec():
    # given
    fileobj = io.StringIO(BENCH)

    # when
    spec = qrflow.dotfile.load_bench_spec(fileobj)

    # then
    assert spec.sizes == (50, 100)
    assert spec.alphas == (1e-5, 1e-4, 1e-3, 1e-2)
    assert spec.seeds_per_cell == 10
    assert spec.solvers == ("hessupdate", "graddescent", "oracle")
    assert spec.costs == "uniform"
    assert spec.jobs == 1


def test_load_bench_spec_accepts_a_single_size():
    spec = qrflow.dotfile.load_bench_spec(io.StringIO("sizes: 20\nalphas: 1.0\n"))

    assert spec.sizes == (20,)
    assert spec.alphas == (1.0,)


def test_load_bench_spec_raises_if_missing_sizes():
    # given - no "sizes"
    fileobj = io.StringIO("alphas: [1.0]\n")

    # when then
    with pytest.raises(qrflow.exceptions.ConfigError):
        qrflow.dotfile.load_bench_spec(fileobj)


def test_load_bench_spec_raises_on_unknown_solver():
    fileobj = io.StringIO("sizes: [20]\nalphas: [1.0]\nsolvers: [simplex]\n")

    with pytest.raises(qrflow.exceptions.ConfigError):
        qrflow.dotfile.load_bench_spec(fileobj)
