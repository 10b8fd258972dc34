import argparse
import json
import logging
import os
import traceback
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from bifi.config import settings
from bifi.errors import ConfigError, PhaseError, SolverDivergedError
from bifi.experiments import Experiment, write_report
from bifi.models.run_config import RunConfig
from bifi.quadrature import smolyak_grid
from bifi.utils.cache import SnapshotCache
from bifi.utils.csvio import ensure_dir, write_csv, write_text

COMMANDS = ["run-test", "sweep", "solve-hf", "solve-lf", "reference", "selftest"]


def _find_line(text: Optional[str], key: Optional[str]) -> Optional[int]:
    """1-based line of the first occurrence of "key" in the config text."""
    if text is None or key is None:
        return None
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def _split(value: Optional[str], cast, key: str) -> Optional[list]:
    if value is None:
        return None
    try:
        return [cast(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse '{value}' as a comma-separated list", key=key)


def parse_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """
    Build a validated RunConfig from an optional JSON file and flag overrides.

    Args:
        path: JSON config file, UTF-8
        overrides: Values from the command line; None entries are ignored and the rest win over the file

    Returns:
        Fully validated RunConfig
    """
    data, text = {}, None
    if path is not None:
        try:
            with open(path, encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON in {path}: {e.msg}", line=e.lineno)
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
    from_file = set(data)
    flags = {k: v for k, v in (overrides or {}).items() if v is not None}
    data.update(flags)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        loc = [str(p) for p in error["loc"]]
        key = ".".join(loc) if loc else None
        leaf = next((str(p) for p in reversed(error["loc"]) if isinstance(p, str)), None)
        line = _find_line(text, leaf) if loc and loc[0] in from_file and loc[0] not in flags else None
        raise ConfigError(error["msg"], key=key, line=line) from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bifi", description="Bi-fidelity stochastic collocation for the "
                                                              "multiscale linear transport equation")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", nargs="?", default=None, help="JSON run configuration")
    parser.add_argument("--preset", type=int, help="Test number 1-5")
    parser.add_argument("--epsilon", type=float, help="Constant Knudsen number override")
    parser.add_argument("--n", type=int, help="Number of high-fidelity samples")
    parser.add_argument("--n-list", help="Comma-separated sample counts for the convergence table")
    parser.add_argument("--candidates", type=int, help="Size of the candidate set")
    parser.add_argument("--seed", type=int, help="Candidate-set seed")
    parser.add_argument("--validation-seed", type=int, help="Validation-set seed")
    parser.add_argument("--out", help="Report directory")
    parser.add_argument("--workers", type=int, help="Worker processes (BIFI_WORKERS, then all cores)")
    parser.add_argument("--lf-sigma-scale", type=float, help="Scale of the low-fidelity scattering coefficient")
    parser.add_argument("--z", help="Comma-separated parameter vector for solve-hf/solve-lf")
    parser.add_argument("--cache", help="SQLite snapshot cache file")
    parser.add_argument("--print-config", action="store_true", help="Print the canonical config and exit")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "command": args.command,
        "preset": args.preset,
        "epsilon": args.epsilon,
        "n": args.n,
        "n_list": _split(args.n_list, int, "n_list"),
        "candidates": args.candidates,
        "seed": args.seed,
        "validation_seed": args.validation_seed,
        "out": args.out,
        "workers": args.workers,
        "lf_sigma_scale": args.lf_sigma_scale,
        "z": _split(args.z, float, "z"),
        "cache": args.cache,
    }
    return parse_config(args.config, overrides)


def _solve_one(config: RunConfig, fidelity: str) -> None:
    preset = config.resolve_preset()
    experiment = Experiment(preset, workers=1)
    z = np.asarray(config.z if config.z is not None else np.zeros(preset.dimension), dtype=float)
    solver = experiment.hf_solver if fidelity == "hf" else experiment.lf_solver
    values = solver.solve(z, preset.initial)
    column = "rbar" if fidelity == "hf" else "rho"
    ensure_dir(config.out)
    write_text(config.canonical_json(), os.path.join(config.out, "config.echo"))
    write_csv(pd.DataFrame({"x": solver.grid.centers, column: values}), os.path.join(config.out, f"{fidelity}.csv"))
    logging.info(f"{solver.describe()} -> {os.path.join(config.out, fidelity + '.csv')}")


def _reference(config: RunConfig, cache: Optional[SnapshotCache]) -> None:
    preset = config.resolve_preset()
    experiment = Experiment(preset, workers=config.workers, cache=cache)
    grid = smolyak_grid(preset.dimension, preset.sparse_level)
    with experiment.phase("reference"):
        mean, std = experiment.reference(grid)
    ensure_dir(config.out)
    write_text(config.canonical_json(), os.path.join(config.out, "config.echo"))
    write_csv(grid.to_frame(), os.path.join(config.out, "sparse_grid.csv"))
    write_csv(pd.DataFrame({"x": experiment.hf_solver.grid.centers, "mean_ref": mean, "std_ref": std}),
              os.path.join(config.out, "reference.csv"))


def run(config: RunConfig) -> int:
    """Dispatch a validated config; returns the exit code."""
    if config.command == "selftest":
        from bifi.selftest import run_selftest
        passed, total = run_selftest()
        print(f"{passed}/{total} checks passed")
        return 0 if passed == total else 1

    cache_path = config.cache or settings.CACHE_PATH
    cache = SnapshotCache(cache_path) if cache_path else None
    if config.command in ("solve-hf", "solve-lf"):
        _solve_one(config, config.command[-2:])
    elif config.command == "reference":
        _reference(config, cache)
    else:
        preset = config.resolve_preset()
        experiment = Experiment(preset, seed=config.seed, validation_seed=config.validation_seed,
                                workers=config.workers, cache=cache)
        if config.command == "sweep":
            report = experiment.run(n=max(config.n_list), n_list=config.n_list)
        else:
            report = experiment.run()
        write_report(report, config.out, config.canonical_json())
        logging.info(f"Test {report.preset}: e_mean={report.e_mean:.3e}, e_std={report.e_std:.3e} "
                     f"(LF baseline {report.lf_baseline.e_mean:.3e}, {report.lf_baseline.e_std:.3e})")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Command-line entry point: 0 on success, 1 when a solver diverges, 2 on usage errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        config = config_from_args(args)
        if args.print_config:
            print(config.canonical_json(), end="")
            return 0
        return run(config)
    except ConfigError as e:
        logging.error(f"Error in configuration: {e}")
        return 2
    except SolverDivergedError as e:
        logging.error(f"Error during {args.command}: {e}")
        return 1
    except PhaseError as e:
        logging.error(f"Error during {args.command}: {e}")
        if isinstance(e.cause, ConfigError):
            return 2
        return 1
    except ValueError as e:
        logging.error(f"Error in arguments: {e}")
        return 2
    except Exception as e:
        logging.error(f"Error during {args.command}: {e}")
        traceback.print_exc()
        return 1
