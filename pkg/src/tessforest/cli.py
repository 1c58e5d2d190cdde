"""Command-line entry point.

    tessforest sample  --config run.json [--seed S] [--out DIR] [--svg]
    tessforest fit     --config run.json --data train.csv [--out DIR]
    tessforest predict --model model.json --data points.csv [--out DIR]
    tessforest verify  SUITE [--config suite.json] [--seed S] [--threads N] [--out DIR]
    tessforest rates   --config experiment.json [--seed S] [--threads N] [--out DIR]

Exit codes: 0 success, 1 failed verification checks, 2 invalid config or
input, 3 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .directions import DirectionalDistribution
from .forest import Dataset, load_model, read_csv, sample_forest, save_model, write_csv
from .geometry import Box, window_from_dict
from .render import partition_svg
from .rng import MAX_SEED, RngStream
from .stats import RateExperiment, run_rate_experiment
from .tessellation import DEFAULT_MAX_CELLS, FORMAT_VERSION, ResourceCapError, sample_partition
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    dimension: int = 2
    window: dict = field(default_factory=lambda: {"kind": "box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]})
    phi: dict = field(default_factory=lambda: {"kind": "axis"})
    sampler: str = "stit"
    lam: float = 1.0
    M: int = 1
    max_cells: int = DEFAULT_MAX_CELLS
    svg_scale: float = 400.0
    experiment: dict = field(default_factory=dict)
    suite: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if not 0 <= int(self.seed) <= MAX_SEED:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.sampler not in ("stit", "pht"):
            raise ConfigError(f"sampler must be 'stit' or 'pht', got {self.sampler!r}")
        if not float(self.lam) > 0:
            raise ConfigError("lambda must be positive")
        if int(self.M) < 1 or int(self.max_cells) < 1 or not float(self.svg_scale) > 0:
            raise ConfigError("M, max_cells and svg_scale must be positive")
        try:
            w = self.window_obj()
            p = self.phi_obj()
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid window or phi: {e}") from e
        if w.dimension != self.dimension or p.d != self.dimension:
            raise ConfigError("window, phi and dimension disagree")
        return self

    def window_obj(self):
        return window_from_dict(self.window)

    def phi_obj(self) -> DirectionalDistribution:
        return DirectionalDistribution.from_dict(self.phi, self.dimension)


def load_config(path: str | None, seed: int | None) -> RunConfig:
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    if "lambda" in raw:
        raw["lam"] = raw.pop("lambda")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if seed is not None:
        raw["seed"] = seed
    try:
        cfg = RunConfig(**raw)
    except TypeError as e:
        raise ConfigError(str(e)) from e
    return cfg.validate()


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("TESSFOREST_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as e:
            raise ConfigError(f"TESSFOREST_THREADS must be an integer, got {env!r}") from e
    return 1


def _dump(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _echo(cfg: RunConfig) -> dict:
    return {"format_version": FORMAT_VERSION, "config": asdict(cfg)}


# ----------------------------------------------------------------- commands


def cmd_sample(args) -> int:
    cfg = load_config(args.config, args.seed)
    window = cfg.window_obj()
    if args.svg and (cfg.dimension != 2 or not isinstance(window, Box)):
        raise ConfigError("--svg needs a 2-dimensional Box window")
    p = sample_partition(cfg.sampler, window, cfg.phi_obj(), cfg.lam, RngStream(cfg.seed), cfg.max_cells)
    out = Path(args.out)
    doc = p.to_dict()
    doc["run"] = _echo(cfg)
    _dump(doc, out / "partition.json")
    if args.svg:
        (out / "partition.svg").write_text(partition_svg(p, scale=cfg.svg_scale))
    print(f"wrote {out / 'partition.json'} ({p.cell_count() if isinstance(window, Box) else 'n/a'} cells)")
    return EXIT_OK


def _load_data(path, d, window) -> Dataset:
    try:
        X, y = read_csv(path, d=d, with_y=True)
        return Dataset(X, y, window)
    except (OSError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e


def cmd_fit(args) -> int:
    cfg = load_config(args.config, args.seed)
    window = cfg.window_obj()
    data = _load_data(args.data, cfg.dimension, window)
    model = sample_forest(data, cfg.sampler, cfg.phi_obj(), cfg.lam, cfg.M, RngStream(cfg.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    print(f"wrote {out / 'model.json'} (M={model.M}, n={data.n})")
    return EXIT_OK


def cmd_predict(args) -> int:
    try:
        model = load_model(args.model)
    except (OSError, ValueError, KeyError) as e:
        raise ConfigError(f"{args.model}: {e}") from e
    window = model.trees[0].partition.window
    d = window.dimension
    try:
        with open(args.data) as fh:
            header = fh.readline().strip().split(",")
        with_y = header[-1] == "y"
        X, y = read_csv(args.data, d=d, with_y=with_y)
    except (OSError, ValueError) as e:
        raise ConfigError(f"{args.data}: {e}") from e
    ok = window.contains(X)
    if not ok.all():
        raise ConfigError(f"{args.data}: row {int(np.flatnonzero(~ok)[0])} lies outside the window")
    yhat = model.predict(X) if len(X) else np.zeros(0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "predictions.csv", X, y, extra=("y_hat", yhat))
    print(f"wrote {out / 'predictions.csv'} ({len(X)} rows)")
    return EXIT_OK


def cmd_verify(args) -> int:
    overrides = {}
    seed = 0
    if args.config is not None:
        cfg = load_config(args.config, args.seed)
        overrides, seed = cfg.suite, cfg.seed
    elif args.seed is not None:
        seed = args.seed
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    try:
        report = run_suite(args.suite, overrides, seed=seed, threads=_threads(args.threads))
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    for c in report.checks:
        print(c.line())
    path = Path(args.out) / f"verify_{args.suite}.json"
    _dump(report.to_dict(), path)
    print(f"{'PASS' if report.passed else 'FAIL'} {args.suite}: "
          f"{sum(c.passed for c in report.checks)}/{len(report.checks)} checks; report {path}")
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_rates(args) -> int:
    cfg = load_config(args.config, args.seed)
    spec = dict(cfg.experiment)
    if "n_grid" in spec:
        spec["n_grid"] = tuple(spec["n_grid"])
    try:
        e = RateExperiment(**spec)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid experiment: {err}") from err
    fit = run_rate_experiment(e, RngStream(cfg.seed), _threads(args.threads))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "rates_rows.csv", "w") as fh:
        cols = ["n", "rep", "lambda", "M", "risk", "risk_se"]
        fh.write(",".join(cols) + "\n")
        for row in fit.rows:
            fh.write(",".join(repr(row[c]) for c in cols) + "\n")
    summary = {k: v for k, v in fit.to_dict().items() if k != "rows"}
    _dump({**_echo(cfg), "experiment": asdict(e), "fit": summary}, out / "rates_summary.json")
    print(f"slope {fit.slope:.4f} over n={list(fit.n_grid)}; wrote {out / 'rates_rows.csv'}")
    return EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tessforest", description=__doc__.splitlines()[0] if __doc__ else None)
    ap.add_argument("--format-version", nargs="?", const=-1, type=int, default=None,
                    help="print the document format version, or require a specific one")
    sub = ap.add_subparsers(dest="command")

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--threads", type=int, help="worker processes (env TESSFOREST_THREADS)")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("sample", help="sample a partition")
    common(p)
    p.add_argument("--svg", action="store_true", help="also render partition.svg (d=2)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit a forest to a CSV dataset")
    common(p)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("verify", help="run a statistical verification suite")
    p.add_argument("suite", choices=SUITES)
    common(p, config_required=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rates", help="run a convergence-rate experiment")
    common(p)
    p.set_defaults(func=cmd_rates)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    if args.format_version is not None:
        if args.format_version == -1:
            print(FORMAT_VERSION)
            return EXIT_OK
        if args.format_version != FORMAT_VERSION:
            print(f"error: format version {args.format_version} unsupported (this build writes "
                  f"{FORMAT_VERSION})", file=sys.stderr)
            return EXIT_CONFIG
    if args.command is None:
        ap.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as e:
        print(f"error: resource cap: {e}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
