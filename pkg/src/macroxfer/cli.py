"""Command-line entry point: ``macroxfer {run,tune,transfer,disagg,synth,eval}``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 training
failure. Errors print a single ``macroxfer: error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiment
from .dataset import load_csv
from .errors import ConfigError, DataError, TrainingError
from .metrics import format_json

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_TRAINING = 0, 1, 2, 3


def _with_out(cfg, out):
    if out is not None:
        cfg.output_dir = str(Path(out).resolve())
    return cfg


def cmd_run(args) -> dict:
    return experiment.run_experiment(_with_out(experiment.load_config(args.config), args.out))


def cmd_tune(args) -> dict:
    return experiment.run_tune(_with_out(experiment.load_config(args.config), args.out))


def cmd_transfer(args) -> dict:
    return experiment.run_transfer(_with_out(experiment.load_config(args.config), args.out))


def cmd_disagg(args) -> dict:
    target = load_csv(args.target, args.date_column, "quarterly")
    indicators = load_csv(args.indicators, args.date_column, "monthly")
    rho = args.rho if args.rho == "estimate" else _float(args.rho, "--rho")
    dates, estimate, info = experiment.disaggregate(
        target,
        indicators,
        args.method,
        mode=args.mode,
        rho=rho,
        add_constant=args.constant,
        transform=args.transform,
        seed=args.seed,
        epochs=args.epochs,
        target_column=args.target_column,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    experiment.write_disagg_csv(out, dates, estimate, args.method)
    return info


def cmd_synth(args) -> dict:
    if args.n < 1:
        raise ConfigError("--n must be positive")
    paths = experiment.write_synthetic(args.kind, args.seed, args.n, args.out, args.extra)
    return {"kind": args.kind, "seed": args.seed, "n": args.n, "files": [str(p) for p in paths]}


def cmd_eval(args) -> dict:
    return experiment.evaluate_saved(args.run, args.data, args.out, args.refit_scaler, args.date_column)


def _float(text, flag):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{flag} must be a number or 'estimate', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="macroxfer", description="Macroeconomic deep learning and transfer experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    for name, helptext in (
        ("run", "run an experiment config end to end"),
        ("tune", "Hyperband search only (writes trials.csv, best_config.json)"),
        ("transfer", "run a config that has a transfer block"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config", help="experiment JSON config")
        sp.add_argument("--out", help="override the config's output_dir")

    d = sub.add_parser("disagg", help="quarterly-to-monthly disaggregation")
    d.add_argument("--target", required=True, help="quarterly target CSV")
    d.add_argument("--indicators", required=True, help="monthly indicators CSV")
    d.add_argument("--method", choices=("chowlin", "ride"), default="chowlin")
    d.add_argument("--mode", choices=("flow", "stock", "average"), default="flow")
    d.add_argument("--rho", default="estimate", help="AR(1) coefficient or 'estimate'")
    d.add_argument("--constant", action="store_true", help="add an intercept column (Chow-Lin)")
    d.add_argument("--transform", choices=("level", "yoy"), default="level")
    d.add_argument("--target-column", default=None)
    d.add_argument("--date-column", default="date")
    d.add_argument("--epochs", type=int, default=50, help="RIDE training epochs")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default="monthly.csv")

    s = sub.add_parser("synth", help="write a seeded synthetic dataset")
    s.add_argument("--kind", choices=experiment.SYNTH_KINDS, default="regime")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int, default=400, help="rows (quarters)")
    s.add_argument("--extra", type=int, default=0, help="extra monthly rows past the sample (disagg kind)")
    s.add_argument("--out", required=True)

    e = sub.add_parser("eval", help="score a saved run on a CSV")
    e.add_argument("--run", required=True, help="output directory of a previous run")
    e.add_argument("--data", required=True)
    e.add_argument("--out", default=None, help="directory for metrics.json and predictions.csv")
    e.add_argument("--refit-scaler", action="store_true", help="standardize with the new data's own statistics")
    e.add_argument("--date-column", default="date")
    return p


COMMANDS = {
    "run": cmd_run,
    "tune": cmd_tune,
    "transfer": cmd_transfer,
    "disagg": cmd_disagg,
    "synth": cmd_synth,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        result = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"macroxfer: error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"macroxfer: error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"macroxfer: error: training: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    print(format_json(result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
