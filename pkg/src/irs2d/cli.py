"""Command-line entry point: ``irs2d {rmse,nmse,se,complexity,all} [flags]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from .harness.experiment import ConfigError, ExperimentConfig, run_experiment, with_overrides

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
SUBCOMMANDS = ("rmse", "nmse", "se", "complexity", "all")


def _float_list(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from exc


def _int_list(text):
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from exc


def _str_list(text):
    return [v for v in text.replace(",", " ").split() if v]


def load_config(path) -> dict:
    """Read a YAML mapping of :class:`ExperimentConfig` fields."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return data


def build_parser():
    p = argparse.ArgumentParser(prog="irs2d", description="IRS channel-estimation experiments")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name, help=f"run the {name} experiment" if name != "all"
                           else "run every experiment")
        s.add_argument("--config", type=Path, help="YAML file with ExperimentConfig fields")
        s.add_argument("--seed", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--snr", type=_float_list, help="SNR grid in dB, e.g. '-10,0,10'")
        s.add_argument("--irs-sizes", type=_int_list, help="IRS sizes N, e.g. '16,64,256'")
        s.add_argument("--methods", type=_str_list, help="e.g. 'HKMR,TSHDR,LS,KRF'")
        s.add_argument("--out", help="output directory for CSV files")
        s.add_argument("--plot-script", action="store_true", default=None,
                       help="also write a matplotlib script per metric")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> ExperimentConfig:
    base = load_config(args.config) if args.config else {}
    cfg = ExperimentConfig.from_dict(base)
    metrics = ("rmse", "nmse", "se", "complexity") if args.command == "all" else (args.command,)
    return with_overrides(
        cfg,
        metrics=list(metrics),
        seed=args.seed,
        trials=args.trials,
        snr_db=args.snr,
        irs_sizes=args.irs_sizes,
        methods=args.methods,
        out_dir=args.out,
        plot_script=args.plot_script,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; that is a configuration error here
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with np.errstate(all="ignore"):
            results = run_experiment(cfg)
    except (OSError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for metric, recs in results.items():
        print(f"{metric}: {len(recs)} records -> {Path(cfg.out_dir) / (metric + '.csv')}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
