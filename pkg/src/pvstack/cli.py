"""Command-line driver: ``pvstack {train,predict,evaluate,oracle,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import RunConfig, load_config
from .errors import ConfigError, PvStackError

EXIT_OK = 0
EXIT_ORACLE_FAILURE = 1


def _config(args) -> RunConfig:
    cfg = load_config(args.config, args.set or ())
    if getattr(args, "out", None):
        cfg = cfg.with_overrides([f'run.output_dir="{Path(args.out).as_posix()}"']).validate()
    return cfg


def _train(args) -> int:
    from .pipeline import cmd_train

    cfg = _config(args)
    for p in cmd_train(cfg):
        print(p)
    return EXIT_OK


def _evaluate(args) -> int:
    from .pipeline import cmd_evaluate

    cfg = _config(args)
    report = cmd_evaluate(cfg, args.artifacts, args.out)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def _predict(args) -> int:
    from .pipeline import cmd_predict

    cfg = _config(args)
    print(cmd_predict(cfg, args.weather, args.output, args.artifacts))
    return EXIT_OK


def _report(args) -> int:
    from .pipeline import report_from_predictions

    cfg = load_config(args.config, args.set or ())
    report = report_from_predictions(args.predictions, cfg.data.capacity)
    text = report.to_csv() if args.format == "csv" else report.to_text()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _oracle(args) -> int:
    from .oracles import run_suite

    if args.instances < 1:
        raise ConfigError(f"--instances must be >= 1, got {args.instances}")
    results = run_suite(args.seed, args.instances, corrupt=args.corrupt_tolerance)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_ORACLE_FAILURE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pvstack", description="PV power forecasting with a stacked ensemble.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug output")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("-c", "--config", help="TOML run configuration (defaults apply when omitted)")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config value")
        return p

    p = with_config(sub.add_parser("train", help="fit all models and the ensemble weights"))
    p.add_argument("--out", help="artifact directory (overrides run.output_dir)")
    p.set_defaults(func=_train)

    p = with_config(sub.add_parser("evaluate", help="score saved models on the test days"))
    p.add_argument("--artifacts", help="artifact directory (default run.output_dir)")
    p.add_argument("--out", help="where predictions.csv and nmae.* go (default: artifact directory)")
    p.set_defaults(func=_evaluate)

    p = with_config(sub.add_parser("predict", help="forecast power for a weather file"))
    p.add_argument("weather", help="weather CSV in the GEFCom layout")
    p.add_argument("-o", "--output", required=True, help="CSV to write")
    p.add_argument("--artifacts", help="artifact directory (default run.output_dir)")
    p.set_defaults(func=_predict)

    p = with_config(sub.add_parser("report", help="daily/weekly nMAE table from a predictions CSV"))
    p.add_argument("predictions", help="predictions.csv written by evaluate")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("-o", "--output", help="write to a file instead of stdout")
    p.set_defaults(func=_report)

    p = sub.add_parser("oracle", help="check the solvers against brute-force oracles")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--instances", type=int, default=100, help="random instances per check")
    p.add_argument("--corrupt-tolerance", action="store_true",
                   help="debug: make every numeric tolerance negative so the checks must fail")
    p.set_defaults(func=_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PvStackError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
