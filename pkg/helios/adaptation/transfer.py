"""
Source-free adaptation of a pretrained checkpoint to a target domain.

Nothing in this module accepts source-domain samples: the checkpoint is the
only object carried over from the source side.
"""

from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..data import LabeledDataset, Standardizer, fit_standardizer
from ..evaluation import Metrics, compute_metrics
from ..exceptions import AdaptationError
from ..logging import get_logger
from ..model import ModelCheckpoint, SolarNet
from ..training import RunTrace, fit
from .config import AdaptConfig, SCOPES

logger = get_logger("helios.adaptation.transfer")


def apply_freeze(model: SolarNet, scope: str) -> SolarNet:
    """
    Set the trainable mask for adaptation.

    ``partial`` leaves only the weights and biases of the last two dense
    layers trainable, ``full`` leaves everything trainable. Batch-norm running
    statistics are frozen in both scopes.

    Raises:
        AdaptationError: Unknown scope, or fewer than two dense layers
    """
    if scope not in SCOPES:
        raise AdaptationError(f"scope must be one of {SCOPES}, got {scope!r}")
    fc_layers = model.fc_layer_names()
    if len(fc_layers) < 2:
        raise AdaptationError(f"partial adaptation needs two dense layers, model has {fc_layers}")
    tail = set(fc_layers[-2:])
    for name, param in model.named_parameters():
        param.trainable = scope == "full" or name.split(".")[0] in tail
    model.bn_frozen = True
    logger.debug("Applied freeze", extra={"scope": scope,
                                          "trainable": model.count_parameters(trainable_only=True)})
    return model


def _same_stats(a: Optional[Standardizer], b: Optional[Standardizer]) -> bool:
    if a is b:
        return True
    if a is None or b is None:
        return False
    return (a.feature_names == b.feature_names and np.array_equal(a.mean, b.mean)
            and np.array_equal(a.std, b.std))


def standardize_for(stats: Optional[Standardizer], data: LabeledDataset) -> LabeledDataset:
    """``data`` standardized with ``stats``; unchanged when already so (or ``stats`` is None)."""
    if stats is None or _same_stats(stats, data.standardizer):
        return data
    return data.restandardize(stats)


def _check_target(checkpoint: ModelCheckpoint, data: LabeledDataset, role: str) -> None:
    if data.feature_names != checkpoint.feature_names:
        raise AdaptationError(f"{role} features {list(data.feature_names)} do not match the "
                              f"checkpoint's {list(checkpoint.feature_names)}")
    if data.n_classes != checkpoint.n_classes:
        raise AdaptationError(f"{role} has {data.n_classes} classes, checkpoint has "
                              f"{checkpoint.n_classes}")


def adapt(checkpoint: ModelCheckpoint, target_train: LabeledDataset, target_val: LabeledDataset,
          cfg: AdaptConfig) -> Tuple[ModelCheckpoint, RunTrace]:
    """
    Fine-tune a pretrained checkpoint on labeled target data.

    Args:
        checkpoint: the pretrained source model
        target_train: labeled target training split
        target_val: labeled target validation split (drives best-epoch selection)
        cfg: scope and optimizer settings

    Returns:
        (adapted checkpoint, run trace tagged ``adapt-partial`` or ``adapt-full``)

    Raises:
        AdaptationError: Feature list or class count differ from the checkpoint
    """
    _check_target(checkpoint, target_train, "target train")
    _check_target(checkpoint, target_val, "target validation")

    if cfg.refit_standardizer:
        stats = target_train.standardizer or fit_standardizer(target_train.raw_features(),
                                                              target_train.feature_names)
    else:
        stats = checkpoint.standardizer
    train = standardize_for(stats, target_train)
    val = standardize_for(stats, target_val)

    model = apply_freeze(checkpoint.to_model(), cfg.scope)
    trace = fit(model, train, val, cfg.to_train_config(), mode=f"adapt-{cfg.scope}")

    adapted = ModelCheckpoint.from_model(
        model,
        feature_names=checkpoint.feature_names,
        binning=target_train.binning,
        standardizer=stats,
        provenance={
            "domain_id": target_train.domain_id,
            "source_domain_id": checkpoint.domain_id,
            "target_domain_id": target_train.domain_id,
            "scope": cfg.scope,
            "seed": int(cfg.seed),
            "epochs": len(trace),
            "best_epoch": trace.best_epoch,
            "mode": trace.mode,
        },
    )
    logger.info("Adapted checkpoint", extra={"source": checkpoint.domain_id,
                                             "target": target_train.domain_id,
                                             "scope": cfg.scope, "epochs": len(trace),
                                             "refit_standardizer": cfg.refit_standardizer})
    return adapted, trace


def evaluate_checkpoint(checkpoint: ModelCheckpoint, data: LabeledDataset,
                        metadata: Optional[Dict[str, Any]] = None) -> Metrics:
    """
    Eval-mode metrics of a checkpoint on a labeled split, inputs standardized
    with the checkpoint's stored statistics.

    Raises:
        AdaptationError: Feature list or class count differ from the checkpoint
    """
    _check_target(checkpoint, data, "evaluation data")
    prepared = standardize_for(checkpoint.standardizer, data)
    predictions = checkpoint.to_model().predict(prepared.features)
    meta = {"domain_id": data.domain_id, "split": data.split_tag}
    meta.update(metadata or {})
    return compute_metrics(data.labels, predictions, checkpoint.n_classes, metadata=meta)


def evaluate_transfer(checkpoint: ModelCheckpoint, target_test: LabeledDataset) -> Metrics:
    """
    Score an unadapted source checkpoint on target data (the "without adaptation" arm).

    No parameter is updated and no statistic is fitted on the target.
    """
    return evaluate_checkpoint(checkpoint, target_test, metadata={
        "source": checkpoint.domain_id,
        "target": target_test.domain_id,
        "arm": "without-adaptation",
        "standardizer": "source" if checkpoint.standardizer is not None else "none",
    })
