"""Command-line front end: ``bellchip run | accept | fit | list-experiments``.

Exit codes: 0 ok, 1 criterion or fit failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .config import EXPERIMENTS, ConfigError, default_config_paths, load_config
from .fitting import FitError, fit_fringe, fit_hom

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class CsvError(ValueError):
    pass


@dataclasses.dataclass
class CsvData:
    comments: list[str]
    columns: tuple[str, ...]
    data: np.ndarray

    @property
    def square_sweep(self) -> bool:
        return any("transform=square" in c for c in self.comments)


def read_csv(path) -> CsvData:
    """Parse the count CSV written by ``run``; errors carry the line number."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise CsvError(f"{path}: {exc}") from None
    comments, columns, rows = [], None, []
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            comments.append(line[1:].strip())
            continue
        fields = line.split(",")
        if columns is None:
            columns = tuple(f.strip() for f in fields)
            if len(columns) < 2 or any(not c for c in columns):
                raise CsvError(f"{path}:{n}: malformed column header")
            continue
        if len(fields) != len(columns):
            raise CsvError(f"{path}:{n}: expected {len(columns)} fields, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise CsvError(f"{path}:{n}: non-numeric field") from None
    if columns is None:
        raise CsvError(f"{path}: empty file")
    if not rows:
        raise CsvError(f"{path}: no data rows")
    return CsvData(comments, columns, np.array(rows))


def fit_external(csv_path, model: str):
    """Fit a count CSV with the fringe or HOM model; returns the fit object."""
    d = read_csv(csv_path)
    if "coincidences" not in d.columns:
        raise CsvError(f"{csv_path}: no 'coincidences' column")
    x = d.data[:, 0]
    y = d.data[:, d.columns.index("coincidences")]
    if model == "fringe":
        if d.square_sweep:
            x = x ** 2
        return fit_fringe(list(zip(x, y)))
    if model == "hom":
        return fit_hom(list(zip(x, y)))
    raise ValueError(f"unknown model {model!r}")


def _cmd_run(args) -> int:
    from .experiments import run_experiment

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.output = args.out
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(cfg)
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    try:
        path = result.write()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"experiment: {cfg.experiment}  seed: {cfg.seed}  output: {path}")
    print(result.summary_text())
    return EXIT_OK


def _cmd_fit(args) -> int:
    try:
        fit = fit_external(args.csv, args.model)
    except CsvError as exc:
        print(f"malformed csv: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    from .experiments import fringe_summary, hom_summary, fmt

    summary = fringe_summary(fit) if args.model == "fringe" else hom_summary(fit)
    for k, v in summary.items():
        print(f"{k}: {fmt(v) if isinstance(v, float) else v}")
    return EXIT_OK


def _cmd_accept(args) -> int:
    from .acceptance import run_acceptance_suite

    results = run_acceptance_suite(seed=args.seed if args.seed is not None else 1,
                                   tau_thermal_us=args.tau_thermal_us)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _cmd_list(args) -> int:
    configs = default_config_paths()
    for name in EXPERIMENTS:
        print(name)
        for stem, path in configs.items():
            try:
                cfg = load_config(path)
            except ConfigError:
                continue
            if cfg.experiment == name:
                print(f"  {path}  ({cfg.reproduces})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bellchip", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment config and write its CSV")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--out", help="override the output path")
    run.set_defaults(func=_cmd_run)

    acc = sub.add_parser("accept", help="run the acceptance suite")
    acc.add_argument("--seed", type=int, help="master seed of the statistical criteria")
    acc.add_argument("--tau-thermal-us", type=float, default=None,
                     help="override the heater time constant (fault injection)")
    acc.set_defaults(func=_cmd_accept)

    fit = sub.add_parser("fit", help="fit an existing count CSV")
    fit.add_argument("csv")
    fit.add_argument("--model", choices=("fringe", "hom"), required=True)
    fit.set_defaults(func=_cmd_fit)

    ls = sub.add_parser("list-experiments", help="list experiment kinds and bundled configs")
    ls.set_defaults(func=_cmd_list)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
