"""Command-line entry point: ``dvlgp <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .errors import ConfigError, DvlgpError, InputError, NumericalError
from .mogpr import load_model
from .pipeline import (
    eval_velocity,
    fuse_mission,
    run_sweep,
    simulate,
    train_model,
    with_output,
    with_seed,
)
from .report import build_report

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("dvlgp")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI experiment configuration")
    common.add_argument("--seed", type=_seed, help="override the experiment seed")
    common.add_argument("--out", help="output directory (default: [output] dir)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dvlgp", description="DVL velocity regression and INS/DVL fusion benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="write truth, IMU and beam CSVs for one mission")

    p = sub.add_parser("train", parents=[common], help="train a MOGPR model on beam CSVs")
    p.add_argument("beams", nargs="+", type=Path, help="training beam CSVs")

    p = sub.add_parser("eval-velocity", parents=[common], help="velocity RMSE of LS and MOGPR per bias level")
    p.add_argument("missions", nargs="+", type=Path, help="mission directories with beams_bias<b>.csv")
    p.add_argument("--model", type=Path, required=True)

    p = sub.add_parser("fuse", parents=[common], help="run the INS/DVL filter on a mission directory")
    p.add_argument("mission", type=Path, help="directory with truth.csv, imu.csv and beam CSVs")
    p.add_argument("--frontend", choices=("ls", "mogpr", "external"), default="ls")
    p.add_argument("--adaptive-r", action="store_true", help="use the front end covariance as R")
    p.add_argument("--model", type=Path)
    p.add_argument("--external-csv", type=Path)

    p = sub.add_parser("report", parents=[common], help="RMSE tables and plot data from navigation logs")
    p.add_argument("missions", nargs="+", type=Path, help="mission directories with truth.csv and nav_*.csv")
    p.add_argument("--skip-seconds", type=float, help="exclude an initial settling window")

    sub.add_parser("sweep", parents=[common], help="full protocol: simulate, train, evaluate, fuse, report")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return with_output(with_seed(cfg, args.seed), args.out)


def _run(args) -> list[Path]:
    cfg = _config(args)
    out = Path(cfg.output.dir)
    if args.command == "simulate":
        return simulate(cfg, out)
    if args.command == "train":
        train_model(cfg, args.beams, out)
        return [out / "model.json", out / "nll_trace.csv"]
    if args.command == "eval-velocity":
        return [eval_velocity(cfg, load_model(args.model), args.missions, out)]
    if args.command == "fuse":
        model = load_model(args.model) if args.model else None
        adaptive = True if args.adaptive_r else None
        return fuse_mission(cfg, args.mission, args.frontend, adaptive, model, args.external_csv)
    if args.command == "report":
        skip = cfg.output.skip_seconds if args.skip_seconds is None else args.skip_seconds
        if skip < 0:
            raise ConfigError("--skip-seconds must be non-negative")
        return build_report(args.missions, out, skip)
    if args.command == "sweep":
        return run_sweep(cfg, out)
    raise ConfigError(f"unknown command {args.command}")  # unreachable with argparse


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        paths = _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DvlgpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
