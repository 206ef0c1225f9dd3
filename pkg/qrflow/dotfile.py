"""Read solver defaults from a qrflow.yaml dotfile, and benchmark specs."""

import pathlib

import yaml

from .exceptions import ConfigError
from .experiments import BenchSpec
from .solvers import SolverConfig


SOLVER_KEYS = {
    "alpha": float,
    "grad_tol": float,
    "max_iter": int,
    "refactor_period": int,
    "seed": int,
    "hit_tie_rel_tol": float,
}

BENCH_KEYS = {
    "sizes": list,
    "alphas": list,
    "seeds_per_cell": int,
    "solvers": list,
    "max_iter": int,
    "grad_tol": float,
    "costs": str,
    "graph": str,
    "jobs": int,
    "seed_offset": int,
}


def _decode(fileobj, what):
    try:
        config = yaml.load(fileobj, Loader=yaml.SafeLoader)
    except Exception:
        raise ConfigError(f"Problem decoding the YAML {what}.")
    if config is None:
        return {}
    if not isinstance(config, dict):
        raise ConfigError(f"Invalid {what}. Expected a mapping at the top level.")
    return config


def _convert(section, keys, where):
    """Check a config section against the allowed keys and coerce its values.

    Raises
    ------
    ConfigError
        On an unknown key or a value of the wrong type.

    """
    if not isinstance(section, dict):
        raise ConfigError(f"Invalid {where}. Expected a mapping.")

    values = {}
    for key, value in section.items():
        if key not in keys:
            raise ConfigError(f'Invalid {where}. Unknown key "{key}".')
        convert = keys[key]
        if convert is list and not isinstance(value, list):
            value = [value]
        try:
            values[key] = convert(value)
        except (TypeError, ValueError):
            raise ConfigError(f'Invalid {where}. Bad value for "{key}": {value!r}.')
    return values


def load(fileobj):
    """Read a dotfile to create the default solver configuration.

    Arguments
    ---------
    fileobj
        A file-like object containing a YAML dotfile with an optional
        ``solver`` section.

    Returns
    -------
    SolverConfig

    Raises
    ------
    ConfigError
        If there was a problem reading the dotfile.

    """
    config = _decode(fileobj, "dotfile")
    unknown = set(config) - {"solver"}
    if unknown:
        raise ConfigError(f'Invalid dotfile. Unknown key "{sorted(unknown)[0]}".')

    values = _convert(config.get("solver", {}), SOLVER_KEYS, '"solver" section')
    return SolverConfig(**values)


def load_path(path):
    """Read the dotfile at ``path``; a missing file gives the defaults."""
    try:
        with pathlib.Path(path).open() as fileobj:
            return load(fileobj)
    except FileNotFoundError:
        return SolverConfig()


def load_bench_spec(fileobj):
    """Read a benchmark spec.

    Returns
    -------
    BenchSpec

    Raises
    ------
    ConfigError
        If a key is missing, unknown or invalid.

    """
    config = _decode(fileobj, "benchmark spec")
    values = _convert(config, BENCH_KEYS, "benchmark spec")
    for key in ("sizes", "alphas"):
        if key not in values:
            raise ConfigError(f'Invalid benchmark spec. Missing a "{key}" key.')
    try:
        values["sizes"] = [int(size) for size in values["sizes"]]
        values["alphas"] = [float(alpha) for alpha in values["alphas"]]
    except (TypeError, ValueError):
        raise ConfigError("Invalid benchmark spec. Sizes and alphas must be numbers.")
    return BenchSpec(**values)
