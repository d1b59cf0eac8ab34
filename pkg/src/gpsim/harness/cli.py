"""Command-line entry point: ``gpsim run <config> [options]``."""

import argparse
import logging
import sys
from pathlib import Path

from . import config as config_mod
from .experiments import run_experiment
from .report import render_csv, render_meta, render_trace

log = logging.getLogger("gpsim")


def build_parser():
    parser = argparse.ArgumentParser(prog="gpsim", description="Seeded Monte Carlo experiments for adaptive GP regression.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiments described by a TOML config file")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=None, help="output directory (default: config 'output' or ./gpsim-out)")
    run.add_argument("--seed", type=int, default=None, help="override the base seed")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.add_argument("--experiment", default=None, help="run only this named experiment")
    run.add_argument("--trace", action="store_true", help="write per-replication CSVs under trace/")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def run_command(args):
    configs = config_mod.load(args.config, args.experiment)
    if args.seed is not None:
        configs = {name: config_mod.resolve({**cfg, "seed": args.seed}, name) for name, cfg in configs.items()}
    first = next(iter(configs.values()))
    out = args.out or Path(first.get("output", "gpsim-out"))
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    for name, cfg in configs.items():
        log.info("running %s (%s)", name, cfg["experiment"])
        results[name] = (cfg, run_experiment(cfg, jobs=args.jobs, trace=args.trace))
    (out / "report.csv").write_text(render_csv(results))
    (out / "meta.json").write_text(render_meta(results))
    if args.trace:
        tdir = out / "trace"
        tdir.mkdir(exist_ok=True)
        for name, (_, cells) in results.items():
            for cell in cells:
                if cell.trace:
                    (tdir / f"{name}_n{cell.n}_{cell.method}.csv").write_text(render_trace(cell))
    log.info("wrote %s", out / "report.csv")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return run_command(args)
    except config_mod.ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
