"""Command-line front end.

::

    ds3 estimate --data obs.csv [--config est.ini] [--predictions f.csv] --out report.json
    ds3 simulate --grid grid.ini --out results/ [--jobs 4]
    ds3 report results.csv [more.csv ...] --out summary.md

Exit codes: 0 success, 2 data error, 3 configuration error, 4 fewer than
95% of simulation rows completed.  Errors print one line on stderr.

Estimation config files hold one ``[estimation]`` section whose keys are the
fields of :class:`ds3.engine.EstimationConfig`; command-line flags override
them.  Prediction files have header ``f1,...,fd`` and known-propensity files
header ``pi``, one row per dataset row.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .data import load_csv
from .engine import EstimationConfig, run_estimation, run_ppi
from .errors import ConfigError, DataError, DomainError, SchemaError
from .simulation import (
    aggregate,
    aggregate_csv,
    load_grid,
    read_results,
    render_markdown,
    results_csv,
    run_grid,
)

EXIT_OK, EXIT_DATA, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3, 4
COMPLETION_THRESHOLD = 0.95


def _coerce(field: dataclasses.Field, raw: str):
    kind = field.type if isinstance(field.type, str) else getattr(field.type, "__name__", "")
    raw = raw.strip()
    try:
        if kind == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind.startswith("float"):  # optional float
            return None if raw.lower() in ("", "none") else float(raw)
    except ValueError:
        raise ConfigError(f"{field.name}: cannot parse {raw!r}") from None
    return raw


def load_estimation_config(path) -> dict:
    """Keyword overrides for :class:`EstimationConfig` from an INI file."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    extra = [s for s in parser.sections() if s != "estimation"]
    if extra or "estimation" not in parser:
        raise ConfigError("config needs exactly one [estimation] section")
    fields = {f.name: f for f in dataclasses.fields(EstimationConfig)}
    out = {}
    for key, raw in parser["estimation"].items():
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _coerce(fields[key], raw)
    return out


def _read_columns(path, expected_prefix: str) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if expected_prefix == "pi":
        ok = header == ["pi"]
    else:
        ok = header == [f"{expected_prefix}{j}" for j in range(1, len(header) + 1)]
    if not ok:
        raise SchemaError(f"{path}: unexpected header {','.join(header)}")
    try:
        return np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    except ValueError:
        raise DataError(f"{path}: non-numeric cell") from None


def cmd_estimate(args) -> int:
    settings = load_estimation_config(args.config) if args.config else {}
    for flag, key in (("target", "target"), ("estimator", "estimator"),
                      ("propensity", "propensity_model"), ("projection", "projection_model"),
                      ("folds", "j_folds"), ("seed", "seed"), ("alpha", "alpha"),
                      ("floor", "propensity_floor")):
        value = getattr(args, flag)
        if value is not None:
            settings[key] = value
    config = EstimationConfig(**settings)

    dataset = load_csv(args.data)
    known = None
    if config.propensity_model == "known":
        if not args.pi_file:
            raise ConfigError("--propensity known needs --pi-file")
        known = _read_columns(args.pi_file, "pi")[:, 0]
        if known.shape[0] != dataset.m:
            raise ConfigError(f"pi file has {known.shape[0]} rows, dataset has {dataset.m}")
    elif args.pi_file:
        raise ConfigError("--pi-file is only used with --propensity known")

    if args.predictions:
        report = run_ppi(dataset, _read_columns(args.predictions, "f"), config, known_pi=known)
    else:
        report = run_estimation(dataset, config, known_pi=known)

    payload = report.to_dict()
    payload["config"] = dataclasses.asdict(config)
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_simulate(args) -> int:
    grid = load_grid(args.grid)
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    rows = run_grid(grid, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cells = aggregate(rows)
    (out / "results.csv").write_text(results_csv(rows, grid.max_q), encoding="utf-8")
    (out / "aggregate.csv").write_text(aggregate_csv(cells), encoding="utf-8")
    (out / "summary.md").write_text(render_markdown(cells), encoding="utf-8")
    done = sum(r["status"] == "ok" for r in rows)
    if done < COMPLETION_THRESHOLD * len(rows):
        print(f"ds3: only {done} of {len(rows)} replication rows completed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    for path in args.results:
        rows.extend(read_results(path))
    text = render_markdown(aggregate(rows))
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ds3", description="Doubly robust semi-supervised estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate a target on one dataset")
    est.add_argument("--data", required=True, help="observed data CSV (x1..xp,r,y1..yk)")
    est.add_argument("--config", help="INI file with an [estimation] section")
    est.add_argument("--predictions", help="CSV of prediction columns f1..fd to append to x")
    est.add_argument("--out", required=True, help="output JSON path")
    est.add_argument("--target", choices=["mean", "ols_coef"])
    est.add_argument("--estimator", choices=["naive", "or_only", "ipw_only", "ds3"])
    est.add_argument("--propensity", choices=["constant", "offset_logistic", "known"])
    est.add_argument("--projection", choices=["ols", "zero"])
    est.add_argument("--pi-file", help="CSV with a single 'pi' column (for --propensity known)")
    est.add_argument("--folds", type=int)
    est.add_argument("--seed", type=int)
    est.add_argument("--alpha", type=float)
    est.add_argument("--floor", type=float, help="propensity floor (default 1/(2m))")
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="run a Monte Carlo grid")
    sim.add_argument("--grid", required=True, help="grid INI file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--jobs", type=int, default=1, help="worker processes")
    sim.set_defaults(func=cmd_simulate)

    rep = sub.add_parser("report", help="render Markdown tables from results.csv files")
    rep.add_argument("results", nargs="+")
    rep.add_argument("--out", required=True, help="output Markdown path, or - for stdout")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"ds3: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"ds3: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"ds3: {exc.strerror or exc}: {getattr(exc, 'filename', '') or ''}".rstrip(": "),
              file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
