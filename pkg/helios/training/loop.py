"""
Supervised training of the power-class network.

The same loop drives source training, training from scratch on a target
domain and target adaptation; callers decide which parameters are trainable
before handing the model over.
"""

import time
from typing import Iterator, Optional, Tuple

import numpy as np

from ..data import LabeledDataset
from ..exceptions import TrainingError, ValidationError
from ..logging import get_logger
from ..model import ArchitectureSpec, ModelCheckpoint, SolarNet, build
from ..numerics import Adam, backward, softmax_cross_entropy
from .config import TrainConfig
from .trace import EpochRecord, RunTrace

logger = get_logger("helios.training.loop")

EVAL_CHUNK = 4096


def iterate_batches(n_rows: int, batch_size: int, rng: Optional[np.random.Generator] = None,
                    shuffle: bool = True) -> Iterator[np.ndarray]:
    """
    Yield row-index batches covering ``range(n_rows)`` once.

    The final partial batch is kept unless it would hold a single row, in
    which case it is merged into the batch before it (batch norm cannot
    normalize a batch of one). The number of batches is therefore
    ``ceil(n_rows / batch_size)``, minus one when ``n_rows % batch_size == 1``
    and there is more than one batch.

    Raises:
        TrainingError: If fewer than two rows are available
    """
    if n_rows < 2:
        raise TrainingError(f"need at least 2 training rows, got {n_rows}")
    if batch_size < 2:
        raise TrainingError(f"batch_size must be >= 2, got {batch_size}")
    if shuffle:
        order = (rng or np.random.default_rng()).permutation(n_rows)
    else:
        order = np.arange(n_rows)
    bounds = list(range(0, n_rows, batch_size)) + [n_rows]
    if len(bounds) > 2 and bounds[-1] - bounds[-2] == 1:
        del bounds[-2]
    for start, stop in zip(bounds, bounds[1:]):
        yield order[start:stop]


def batches_per_epoch(n_rows: int, batch_size: int) -> int:
    full = -(-n_rows // batch_size)
    return full - 1 if full > 1 and n_rows % batch_size == 1 else full


def evaluate_epoch(model: SolarNet, data: LabeledDataset) -> Tuple[float, float]:
    """
    Eval-mode mean cross-entropy and accuracy over a dataset.

    Returns:
        (loss, accuracy) where accuracy is the fraction of argmax-correct rows

    Raises:
        ValidationError: If the dataset is empty or its width does not match
    """
    if len(data) == 0:
        raise ValidationError("cannot evaluate on an empty dataset")
    total_loss, correct = 0.0, 0
    for start in range(0, len(data), EVAL_CHUNK):
        x = data.features[start:start + EVAL_CHUNK]
        y = data.labels[start:start + EVAL_CHUNK]
        logits = model.forward(x, mode="eval").detach()
        total_loss += softmax_cross_entropy(logits, y).item() * len(y)
        correct += int((np.argmax(logits.data, axis=1) == y).sum())
    return total_loss / len(data), correct / len(data)


def check_compatible(model: SolarNet, train: LabeledDataset, val: LabeledDataset) -> None:
    """
    Raises:
        TrainingError: If the datasets disagree with each other or with the model
    """
    if train.feature_names != val.feature_names:
        raise TrainingError(f"train features {list(train.feature_names)} differ from "
                            f"validation features {list(val.feature_names)}")
    if train.n_features != model.spec.n_features:
        raise TrainingError(f"dataset has {train.n_features} features, model expects "
                            f"{model.spec.n_features}")
    if train.n_classes != model.spec.n_classes or val.n_classes != model.spec.n_classes:
        raise TrainingError(f"dataset has {train.n_classes} classes, model has "
                            f"{model.spec.n_classes}")
    if len(val) == 0:
        raise TrainingError("validation split is empty")


def fit(model: SolarNet, train: LabeledDataset, val: LabeledDataset, cfg: TrainConfig,
        mode: str = "scratch") -> RunTrace:
    """
    Optimize the model's trainable parameters with Adam on softmax cross-entropy.

    The parameters of the epoch with the best validation accuracy are
    restored before returning. Training stops after ``cfg.max_epochs`` or
    after ``cfg.patience`` epochs without improvement.

    Returns:
        The run trace; ``seconds`` covers optimizer work only, not validation
    """
    check_compatible(model, train, val)
    params = model.trainable_parameters()
    if not params:
        raise TrainingError("model has no trainable parameters")
    model.zero_grad()
    optimizer = Adam(params, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    trace = RunTrace(mode)
    x, y, n = train.features, train.labels, len(train)

    best_acc, best_state, stale = -1.0, model.state_dict(), 0
    for epoch in range(1, cfg.max_epochs + 1):
        started = time.perf_counter()
        loss_sum, correct, iterations = 0.0, 0, 0
        for idx in iterate_batches(n, cfg.batch_size, rng, cfg.shuffle):
            logits = model.forward(x[idx], mode="train")
            predicted = np.argmax(logits.data, axis=1)
            loss = softmax_cross_entropy(logits, y[idx])
            backward(loss)
            optimizer.step()
            loss_sum += loss.item() * len(idx)
            correct += int((predicted == y[idx]).sum())
            iterations += 1
        seconds = time.perf_counter() - started

        _, val_acc = evaluate_epoch(model, val)
        record = EpochRecord(epoch, loss_sum / n, correct / n, val_acc, seconds, iterations)
        trace.append(record)
        logger.debug("Epoch finished", extra={"mode": mode, "epoch": epoch,
                                              "train_loss": record.train_loss,
                                              "val_acc": val_acc, "seconds": seconds})
        if val_acc > best_acc:
            best_acc, best_state, stale = val_acc, model.state_dict(), 0
        else:
            stale += 1
            if stale >= cfg.patience:
                logger.info("Early stop", extra={"mode": mode, "epoch": epoch,
                                                 "best_val_acc": best_acc})
                break

    model.load_state_dict(best_state)
    logger.info("Training finished", extra={"mode": mode, "epochs": len(trace),
                                            "best_epoch": trace.best_epoch,
                                            "best_val_acc": best_acc,
                                            "iterations": trace.total_iterations})
    return trace


def train_source(model: SolarNet, train: LabeledDataset, val: LabeledDataset,
                 cfg: TrainConfig) -> Tuple[ModelCheckpoint, RunTrace]:
    """
    Train every parameter on a labeled source domain.

    Returns:
        (checkpoint of the best-validation epoch, run trace)

    Raises:
        TrainingError: If the datasets do not match the model
    """
    for p in model.parameters():
        p.trainable = True
    model.bn_frozen = False
    trace = fit(model, train, val, cfg, mode="scratch")
    checkpoint = ModelCheckpoint.from_model(
        model,
        feature_names=train.feature_names,
        binning=train.binning,
        standardizer=train.standardizer,
        provenance={
            "domain_id": train.domain_id,
            "seed": int(cfg.seed),
            "epochs": len(trace),
            "best_epoch": trace.best_epoch,
            "mode": trace.mode,
            "init": "he-uniform",
        },
    )
    return checkpoint, trace


def train_scratch(train: LabeledDataset, val: LabeledDataset, cfg: TrainConfig,
                  spec: Optional[ArchitectureSpec] = None) -> Tuple[ModelCheckpoint, RunTrace]:
    """Build a fresh model seeded from ``cfg.seed`` and train it on ``train``."""
    spec = spec or ArchitectureSpec(n_features=train.n_features, n_classes=train.n_classes)
    return train_source(build(spec, seed=cfg.seed), train, val, cfg)
