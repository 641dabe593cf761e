"""
Experiment steps shared by the command-line entry point.

Each function performs one command's work on already-validated inputs and
writes its artifacts into an output directory.
"""

import json
import os
import platform
import sys
from contextlib import contextmanager
from dataclasses import replace
from datetime import datetime, timezone
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .config import BenchConfig, DomainPaths, ExperimentConfig, PrepareConfig
from .. import __version__
from ..adaptation import adapt, evaluate_checkpoint, evaluate_transfer
from ..baselines import (
    EnsembleModel, fit_adaboost, fit_gradient_boosting, fit_random_forest, save_ensemble
)
from ..data import (
    LabeledDataset, PreparedDomain, align_join, ingest_csv, load_schema, prepare_domain,
    resample_mean,
)
from ..evaluation import Metrics, compute_metrics, epochs_to_saturation, trace_throughput
from ..exceptions import ConfigurationError, HeliosError
from ..features import fit_importance, reduce_dataset, select_features
from ..logging import get_logger
from ..model import ModelCheckpoint, save_checkpoint
from ..synth import generate_domain, preset, shifted_params
from ..training import RunTrace, train_scratch
from ..utils import max_threads, thread_limit

logger = get_logger("helios.cli.pipeline")

BENCH_COLUMNS = ["source", "target", "arm", "scope", "accuracy", "weighted_f1",
                 "its_per_sec", "saturation_epoch"]


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag helios errors raised inside the block with the pipeline stage."""
    try:
        yield
    except HeliosError as e:
        if not getattr(e, "stage", None):
            e.stage = name
        raise


def write_json(path: str, payload: Dict[str, Any]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2))
        fh.write("\n")
    return path


def write_manifest(out_dir: str, command: str, cfg: ExperimentConfig,
                   extra: Optional[Dict[str, Any]] = None) -> str:
    """Record what produced an output directory."""
    payload = {
        "command": command,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "helios_version": __version__,
        "numpy_version": np.__version__,
        "pandas_version": pd.__version__,
        "python_version": platform.python_version(),
        "argv": sys.argv[1:],
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    payload.update(extra or {})
    return write_json(os.path.join(out_dir, "manifest.json"), payload)


def prepare_from_files(paths: DomainPaths, cfg: PrepareConfig) -> PreparedDomain:
    """
    Raw weather and solar files -> labeled, standardized splits.

    Raises:
        HeliosError: tagged with the failing stage (schema, ingest, resample,
            join, label)
    """
    with stage("schema"):
        weather_schema = load_schema(paths.weather_schema)
        solar_schema = load_schema(paths.solar_schema)
    with stage("ingest"):
        weather = ingest_csv(paths.weather, weather_schema)
        solar = ingest_csv(paths.solar, solar_schema)
    with stage("resample"):
        raw_rows = {"weather": len(weather), "solar": len(solar)}
        weather = resample_mean(weather, cfg.step)
        solar = resample_mean(solar, cfg.step)
    with stage("join"):
        joined, report = align_join(weather, solar)
    with stage("label"):
        prepared = prepare_domain(joined, paths.domain_id, n_classes=cfg.n_classes,
                                  ratios=cfg.ratios, standardize=cfg.standardize)
    prepared.summary.update({
        "raw_rows": raw_rows,
        "resampled_rows": {"weather": len(weather), "solar": len(solar)},
        "join": report.to_dict(),
        "step": cfg.step,
    })
    return prepared


def select_domain_features(prepared: PreparedDomain, k: int, n_trees: int,
                           seed: int) -> Tuple[PreparedDomain, Any]:
    """Rank features on the training split and reduce all three splits to the top ``k``."""
    with stage("select-features"):
        report = fit_importance(prepared.train, n_trees=n_trees, seed=seed)
        names = select_features(report, min(k, len(report.feature_names)))
    return reduce_splits(prepared, names), report


def reduce_splits(prepared: PreparedDomain, names: Sequence[str]) -> PreparedDomain:
    return PreparedDomain(*(reduce_dataset(ds, names) for ds in prepared.splits),
                          summary=dict(prepared.summary, feature_names=list(names)))


def fit_baseline(kind: str, train: LabeledDataset, cfg: ExperimentConfig) -> EnsembleModel:
    """
    Raises:
        ConfigurationError: Unknown kind
    """
    options = cfg.baselines
    with stage(f"baseline-{kind}"):
        if kind == "rf":
            return fit_random_forest(train.features, train.labels, n_trees=options.n_rounds,
                                     seed=cfg.seed, n_classes=train.n_classes)
        if kind == "adaboost":
            return fit_adaboost(train.features, train.labels, n_rounds=options.n_rounds,
                                seed=cfg.seed, n_classes=train.n_classes)
        if kind == "gbm":
            return fit_gradient_boosting(train.features, train.labels, n_rounds=options.n_rounds,
                                         learning_rate=options.learning_rate,
                                         max_depth=options.max_depth, seed=cfg.seed,
                                         n_classes=train.n_classes)
    raise ConfigurationError(f"unknown baseline kind {kind!r}")


def run_baselines(prepared: PreparedDomain, kinds: Sequence[str], cfg: ExperimentConfig,
                  out_dir: str) -> pd.DataFrame:
    """Fit each ensemble on the train split, score it on the test split, persist both."""
    rows = []
    for kind in kinds:
        model = fit_baseline(kind, prepared.train, cfg)
        save_ensemble(model, os.path.join(out_dir, kind))
        predictions = model.predict(prepared.test.features)
        metrics = compute_metrics(prepared.test.labels, predictions, prepared.test.n_classes,
                                  metadata={"domain_id": prepared.test.domain_id, "arm": kind,
                                            "split": "test"})
        metrics.to_json(os.path.join(out_dir, f"{kind}_metrics.json"))
        rows.append(metrics.to_csv_row())
        logger.info("Scored baseline", extra={"kind": kind, "accuracy": metrics.accuracy,
                                              "weighted_f1": metrics.weighted_f1})
    table = pd.DataFrame(rows)
    table.to_csv(os.path.join(out_dir, "baselines.csv"), index=False, float_format="%.6f")
    return table


def _bench_row(source: str, target: str, arm: str, scope: str, metrics: Metrics,
               trace: Optional[RunTrace]) -> Dict[str, Any]:
    row = {"source": source, "target": target, "arm": arm, "scope": scope,
           "accuracy": metrics.accuracy, "weighted_f1": metrics.weighted_f1,
           "its_per_sec": np.nan, "saturation_epoch": np.nan}
    if trace is not None and len(trace):
        row["its_per_sec"] = trace_throughput(trace)
        row["saturation_epoch"] = epochs_to_saturation(trace).epoch
    return row


def bench_cell(checkpoint: ModelCheckpoint, target: PreparedDomain, cfg: ExperimentConfig,
               trace_dir: str) -> List[Dict[str, Any]]:
    """
    One source -> target cell: the unadapted checkpoint, scratch training on the
    target, and partial and full adaptation, all single-threaded.
    """
    source_id, target_id = checkpoint.domain_id, target.test.domain_id
    prefix = os.path.join(trace_dir, f"{source_id}__{target_id}")
    rows = []
    with thread_limit(1), stage(f"bench {source_id}->{target_id}"):
        rows.append(_bench_row(source_id, target_id, "without-adaptation", "none",
                               evaluate_transfer(checkpoint, target.test), None))

        scratch, trace = train_scratch(target.train, target.val, cfg.train)
        trace.to_csv(f"{prefix}__scratch.csv")
        metrics = evaluate_checkpoint(scratch, target.test)
        rows.append(_bench_row(source_id, target_id, "scratch", "full", metrics, trace))

        for scope in ("partial", "full"):
            adapted, trace = adapt(checkpoint, target.train, target.val,
                                   replace(cfg.adapt, scope=scope))
            trace.to_csv(f"{prefix}__adapt-{scope}.csv")
            metrics = evaluate_checkpoint(adapted, target.test)
            rows.append(_bench_row(source_id, target_id, "adapt", scope, metrics, trace))
    logger.info("Finished bench cell", extra={"source": source_id, "target": target_id})
    return rows


def _synthetic_domain(name: str, bench: BenchConfig, prep: PrepareConfig, seed: int,
                      shifted: bool = False) -> PreparedDomain:
    params = preset(name)
    params = replace(params, seed=params.seed + seed)
    if shifted:
        params = shifted_params(params, bench.shift)
    with stage(f"synth {params.name}"):
        frame = generate_domain(params, n_days=bench.n_days, step=prep.step)
        return prepare_domain(frame, params.name, n_classes=prep.n_classes, ratios=prep.ratios,
                              standardize=prep.standardize)


def run_bench(cfg: ExperimentConfig, out_dir: str, n_jobs: Optional[int] = None) -> pd.DataFrame:
    """
    Source training per domain, then every source -> target cell.

    Writes ``bench.csv`` (one row per cell and arm), ``table_transfer.csv``
    (accuracy without vs with partial adaptation, sources as rows),
    ``table_scope.csv`` (partial vs full accuracy and its/sec) and a trace CSV
    per training run under ``traces/``.
    """
    bench, prep = cfg.bench, cfg.prepare
    trace_dir = os.path.join(out_dir, "traces")
    domains = {name: _synthetic_domain(name, bench, prep, cfg.seed) for name in bench.domains}

    cells = []
    for source_name, target_name in bench.pairs():
        source = domains[source_name]
        target = (domains[target_name] if target_name is not None
                  else _synthetic_domain(source_name, bench, prep, cfg.seed, shifted=True))
        cells.append((source, target))

    checkpoints: Dict[str, ModelCheckpoint] = {}
    selected: Dict[str, List[str]] = {}
    jobs = []
    for source, target in cells:
        source_id = source.train.domain_id
        if source_id not in checkpoints:
            if prep.feature_selection:
                source, _ = select_domain_features(source, prep.feature_k, prep.importance_trees,
                                                   cfg.seed)
                selected[source_id] = list(source.train.feature_names)
            with thread_limit(1), stage(f"train {source_id}"):
                checkpoint, trace = train_scratch(source.train, source.val, cfg.train)
            trace.to_csv(os.path.join(trace_dir, f"{source_id}__source.csv"))
            save_checkpoint(checkpoint, os.path.join(out_dir, "checkpoints", source_id))
            checkpoints[source_id] = checkpoint
        if source_id in selected:
            target = reduce_splits(target, selected[source_id])
        jobs.append((checkpoints[source_id], target))

    n_jobs = n_jobs or max_threads(1)
    results = Parallel(n_jobs=n_jobs)(
        delayed(bench_cell)(checkpoint, target, cfg, trace_dir) for checkpoint, target in jobs
    )
    table = pd.DataFrame([row for rows in results for row in rows], columns=BENCH_COLUMNS)
    table.to_csv(os.path.join(out_dir, "bench.csv"), index=False, float_format="%.6f")

    labeled = table.assign(column=table["target"] + ":" + table["arm"] + "-" + table["scope"])
    transfer = labeled[labeled["arm"].isin(["without-adaptation"]) | (labeled["scope"] == "partial")]
    transfer.pivot(index="source", columns="column", values="accuracy").to_csv(
        os.path.join(out_dir, "table_transfer.csv"), float_format="%.6f")
    scope = table[table["arm"] == "adapt"].pivot(index=["source", "target"], columns="scope",
                                                 values=["accuracy", "its_per_sec"])
    scope.columns = [f"{value}_{s}" for value, s in scope.columns]
    scope.to_csv(os.path.join(out_dir, "table_scope.csv"), float_format="%.6f")
    logger.info("Bench finished", extra={"cells": len(jobs), "rows": len(table)})
    return table
