"""
Command-line entry point.

Usage:
    helios synth --out raw/ [--preset sunny-dry] [--shift 1.0] [--days 365]
    helios prepare --config exp.json [--role source|target] --out data/ca
    helios select-features --data data/ca --out data/ca_top6 [--no-feature-selection]
    helios train --data data/ca --out runs/ca
    helios adapt --checkpoint runs/ca/model.hsckpt --data data/fl --scope partial --out runs/ca_fl
    helios eval --checkpoint runs/ca_fl/model.hsckpt --data data/fl --out runs/ca_fl/eval
    helios baseline --data data/ca --kind gbm --out runs/ca_gbm
    helios bench --config exp.json --out runs/bench

Exit codes: 0 success, 1 computation failure, 2 usage or configuration error.
Failures are reported on stderr as ``stage: message``.
"""

import argparse
import os
import sys
from dataclasses import replace
from typing import Callable, Dict, List, Optional

import pandas as pd

from .config import DomainPaths, ExperimentConfig
from .pipeline import (
    prepare_from_files, run_baselines, run_bench, select_domain_features, write_json,
    write_manifest,
)
from ..adaptation import SCOPES, adapt, evaluate_checkpoint, evaluate_transfer
from ..baselines import KINDS
from ..data import load_dataset, load_splits, save_splits
from ..exceptions import ConfigurationError, HeliosError
from ..features import save_report
from ..logging import get_logger
from ..model import load_checkpoint, save_checkpoint
from ..synth import CLIMATE_PRESETS, generate_domain, preset, shifted_params, write_domain_csv
from ..training import train_scratch
from ..utils import configure_cli_logging, configure_experiment_logging

logger = get_logger("helios.cli.main")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

CHECKPOINT_NAME = "model"
SPLITS = ("train", "val", "test")


def _require_file(path: str, what: str) -> str:
    if not path or not os.path.isfile(path):
        raise ConfigurationError(f"{what} not found: {path}")
    return path


def _require_splits(path: str) -> str:
    if not path or not all(os.path.isdir(os.path.join(path, s)) for s in SPLITS):
        raise ConfigurationError(f"prepared dataset directory not found: {path}")
    return path


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (or defaults) with command-line overrides applied."""
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "scope", None):
        cfg = replace(cfg, adapt=replace(cfg.adapt, scope=args.scope))
    if getattr(args, "no_feature_selection", False):
        cfg = replace(cfg, prepare=replace(cfg.prepare, feature_selection=False))
    return cfg


def _out_dir(args: argparse.Namespace, cfg: ExperimentConfig) -> str:
    out = args.out or os.path.join(cfg.out_dir, args.command)
    configure_experiment_logging(out, verbose=args.verbose)
    return out


def cmd_synth(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    out = _out_dir(args, cfg)
    names = args.preset or list(CLIMATE_PRESETS)
    written = {}
    for name in names:
        params = preset(name)
        params = replace(params, seed=params.seed + cfg.seed)
        variants = [params]
        if args.shift is not None:
            variants.append(shifted_params(params, args.shift))
        for p in variants:
            frame = generate_domain(p, n_days=args.days)
            written[p.name] = write_domain_csv(frame, out, p.name)
    write_manifest(out, "synth", cfg, {"domains": sorted(written), "n_days": args.days,
                                       "shift": args.shift})
    for name in sorted(written):
        print(f"{name}: {written[name]['weather']} {written[name]['solar']}")
    return EXIT_OK


def _domain_paths(args: argparse.Namespace, cfg: ExperimentConfig) -> DomainPaths:
    base = cfg.source if args.role == "source" else cfg.target
    fields = base.to_dict() if base else {}
    for key in ("domain_id", "weather", "solar", "weather_schema", "solar_schema"):
        value = getattr(args, key)
        if value:
            fields[key] = value
    missing = [k for k in ("domain_id", "weather", "solar", "weather_schema", "solar_schema")
               if not fields.get(k)]
    if missing:
        raise ConfigurationError(f"{args.role} domain lacks {missing}; set them in the config "
                                 f"or on the command line")
    return DomainPaths.from_dict(fields)


def cmd_prepare(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    paths = _domain_paths(args, cfg)
    _require_file(paths.weather_schema, "weather schema file")
    _require_file(paths.solar_schema, "solar schema file")
    _require_file(paths.weather, "weather CSV")
    _require_file(paths.solar, "solar CSV")
    out = _out_dir(args, cfg)
    prepared = prepare_from_files(paths, cfg.prepare)
    save_splits(prepared, out)
    write_manifest(out, "prepare", cfg, {"domain_id": paths.domain_id})
    print(f"{paths.domain_id}: {sum(prepared.summary['rows'].values())} rows -> {out}")
    return EXIT_OK


def cmd_select_features(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    prepared = load_splits(_require_splits(args.data))
    out = _out_dir(args, cfg)
    k = args.k if args.k is not None else cfg.prepare.feature_k
    if cfg.prepare.feature_selection:
        prepared, report = select_domain_features(prepared, k, cfg.prepare.importance_trees,
                                                  cfg.seed)
        save_report(report, os.path.join(out, "importance.json"))
    save_splits(prepared, out)
    write_manifest(out, "select-features", cfg,
                   {"feature_names": list(prepared.train.feature_names)})
    print(" ".join(prepared.train.feature_names))
    return EXIT_OK


def cmd_train(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    prepared = load_splits(_require_splits(args.data))
    out = _out_dir(args, cfg)
    checkpoint, trace = train_scratch(prepared.train, prepared.val, cfg.train)
    path = save_checkpoint(checkpoint, os.path.join(out, CHECKPOINT_NAME))
    trace.to_csv(os.path.join(out, "trace.csv"))
    metrics = evaluate_checkpoint(checkpoint, prepared.test)
    metrics.to_json(os.path.join(out, "metrics.json"))
    write_json(os.path.join(out, "summary.json"), {
        "domain_id": prepared.train.domain_id,
        "checkpoint": os.path.basename(path),
        "epochs": len(trace),
        "best_epoch": trace.best_epoch,
        "test_accuracy": metrics.accuracy,
        "test_weighted_f1": metrics.weighted_f1,
    })
    write_manifest(out, "train", cfg)
    print(f"test accuracy {metrics.accuracy:.4f} -> {path}")
    return EXIT_OK


def cmd_adapt(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    checkpoint = load_checkpoint(_require_file(args.checkpoint, "checkpoint"))
    prepared = load_splits(_require_splits(args.data))
    out = _out_dir(args, cfg)
    unadapted = evaluate_transfer(checkpoint, prepared.test)
    unadapted.to_json(os.path.join(out, "transfer_metrics.json"))
    adapted, trace = adapt(checkpoint, prepared.train, prepared.val, cfg.adapt)
    path = save_checkpoint(adapted, os.path.join(out, CHECKPOINT_NAME))
    trace.to_csv(os.path.join(out, "trace.csv"))
    metrics = evaluate_checkpoint(adapted, prepared.test, metadata={
        "source": checkpoint.domain_id, "target": prepared.test.domain_id,
        "arm": "with-adaptation", "scope": cfg.adapt.scope,
    })
    metrics.to_json(os.path.join(out, "metrics.json"))
    write_manifest(out, "adapt", cfg, {"source": checkpoint.domain_id,
                                       "target": prepared.test.domain_id})
    print(f"accuracy {unadapted.accuracy:.4f} -> {metrics.accuracy:.4f} "
          f"({cfg.adapt.scope}) -> {path}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    checkpoint = load_checkpoint(_require_file(args.checkpoint, "checkpoint"))
    if os.path.isfile(os.path.join(args.data or "", "meta.json")):
        dataset = load_dataset(args.data)
    else:
        dataset = load_dataset(os.path.join(_require_splits(args.data), args.split))
    out = _out_dir(args, cfg)
    metrics = evaluate_checkpoint(checkpoint, dataset)
    metrics.to_json(os.path.join(out, "metrics.json"))
    pd.DataFrame([metrics.to_csv_row()]).to_csv(os.path.join(out, "metrics.csv"), index=False,
                                                float_format="%.6f")
    print(f"accuracy {metrics.accuracy:.4f} weighted F1 {metrics.weighted_f1:.4f}")
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    prepared = load_splits(_require_splits(args.data))
    out = _out_dir(args, cfg)
    kinds = [args.kind] if args.kind else list(cfg.baselines.kinds)
    table = run_baselines(prepared, kinds, cfg, out)
    write_manifest(out, "baseline", cfg, {"kinds": kinds})
    for row in table.itertuples():
        print(f"{row.arm}: accuracy {row.accuracy:.4f}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    bench = cfg.bench
    if args.preset:
        bench = replace(bench, domains=tuple(args.preset))
    if args.shift is not None:
        bench = replace(bench, shift=args.shift)
    if args.days is not None:
        bench = replace(bench, n_days=args.days)
    bench.validate()
    cfg = replace(cfg, bench=bench)
    out = _out_dir(args, cfg)
    table = run_bench(cfg, out, n_jobs=args.jobs)
    write_manifest(out, "bench", cfg, {"cells": int(len(table.groupby(["source", "target"])))})
    print(f"{len(table)} rows -> {os.path.join(out, 'bench.csv')}")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, ExperimentConfig], int]] = {
    "synth": cmd_synth,
    "prepare": cmd_prepare,
    "select-features": cmd_select_features,
    "train": cmd_train,
    "adapt": cmd_adapt,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON")
    common.add_argument("--seed", type=int, help="overrides every seed in the config")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="helios",
                                     description="Source-free domain-adaptive solar-power classification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write synthetic weather/solar CSVs")
    p.add_argument("--preset", action="append", choices=sorted(CLIMATE_PRESETS))
    p.add_argument("--shift", type=float, help="also write each preset's shifted climate")
    p.add_argument("--days", type=int, default=365)

    p = sub.add_parser("prepare", parents=[common], help="raw CSVs -> labeled splits")
    p.add_argument("--role", choices=("source", "target"), default="source")
    p.add_argument("--domain-id")
    p.add_argument("--weather")
    p.add_argument("--solar")
    p.add_argument("--weather-schema")
    p.add_argument("--solar-schema")

    p = sub.add_parser("select-features", parents=[common], help="rank and keep the top features")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--no-feature-selection", action="store_true")

    p = sub.add_parser("train", parents=[common], help="train on a source domain")
    p.add_argument("--data", required=True)

    p = sub.add_parser("adapt", parents=[common], help="adapt a checkpoint to a target domain")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--scope", choices=SCOPES)

    p = sub.add_parser("eval", parents=[common], help="score a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=SPLITS, default="test")

    p = sub.add_parser("baseline", parents=[common], help="fit tree-ensemble baselines")
    p.add_argument("--data", required=True)
    p.add_argument("--kind", choices=KINDS)

    p = sub.add_parser("bench", parents=[common], help="scratch vs adapt matrix on synthetic domains")
    p.add_argument("--preset", action="append", choices=sorted(CLIMATE_PRESETS))
    p.add_argument("--shift", type=float)
    p.add_argument("--days", type=int)
    p.add_argument("--jobs", type=int, help="cells run in parallel (default HELIOS_THREADS or 1)")
    p.add_argument("--no-feature-selection", action="store_true")
    return parser


def _report(command: str, error: HeliosError) -> None:
    stage = getattr(error, "stage", None) or command
    print(f"{stage}: {error}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_cli_logging(args.verbose)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigurationError as e:
        _report(args.command, e)
        return EXIT_USAGE
    except HeliosError as e:
        logger.debug("Command failed", extra={"command": args.command, "error": repr(e)})
        _report(args.command, e)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
