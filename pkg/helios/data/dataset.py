"""
Labeled Datasets
================

Feature matrices with class labels, the standardizer that produced them, and
the binning that produced the labels. Also holds the chronological splitter,
the per-domain preparation pipeline and the on-disk dataset format::

    <dir>/features.csv   one column per feature, header row
    <dir>/labels.csv     single ``label`` column
    <dir>/meta.json      edges, standardizer stats, feature names, domain, split
"""

import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .binning import BinningScheme, fit_bins, assign_labels
from .frame import TimeSeriesFrame, drop_missing
from .schema import CANONICAL_CHANNELS, POWER_CHANNEL
from ..exceptions import ValidationError, StandardizationError, DataFormatError
from ..logging import get_logger

logger = get_logger("helios.data.dataset")

DATASET_FORMAT_VERSION = "1"
STD_FLOOR = 1e-8
SPLIT_TAGS = ("train", "val", "test")
DEFAULT_RATIOS = (0.7, 0.15, 0.15)


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-feature mean and standard deviation fitted on one training split."""

    feature_names: Tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        std = np.array(self.std, dtype=np.float64).reshape(-1)
        if not (len(mean) == len(std) == len(self.feature_names)):
            raise StandardizationError("mean, std and feature_names must have equal length")
        if (std <= 0).any():
            raise StandardizationError("standard deviations must be positive")
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    def transform(self, data: np.ndarray) -> np.ndarray:
        return apply_standardizer(data, self)

    def inverse_transform(self, data: np.ndarray) -> np.ndarray:
        data = np.asarray(data, dtype=np.float64)
        self._check_width(data)
        return data * self.std + self.mean

    def select(self, names: Sequence[str]) -> 'Standardizer':
        idx = [self.feature_names.index(n) for n in names]
        return Standardizer(tuple(names), self.mean[idx], self.std[idx])

    def _check_width(self, data: np.ndarray) -> None:
        if data.ndim != 2 or data.shape[1] != len(self.feature_names):
            raise StandardizationError(
                f"expected a matrix with {len(self.feature_names)} columns, got shape {data.shape}"
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "feature_names": list(self.feature_names),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> 'Standardizer':
        return cls(tuple(payload["feature_names"]), payload["mean"], payload["std"])


def fit_standardizer(train: np.ndarray, feature_names: Optional[Sequence[str]] = None) -> Standardizer:
    """
    Fit per-feature mean and population standard deviation on a training matrix.

    Standard deviations below 1e-8 (constant columns) are floored with a warning.

    Raises:
        StandardizationError: On an empty matrix or non-finite values
    """
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] == 0:
        raise StandardizationError(f"need a non-empty 2-D matrix, got shape {train.shape}")
    if not np.isfinite(train).all():
        raise StandardizationError("training matrix contains NaN or Inf")
    if feature_names is None:
        feature_names = [f"x{i}" for i in range(train.shape[1])]

    mean = train.mean(axis=0)
    std = train.std(axis=0)
    floored = std < STD_FLOOR
    if floored.any():
        names = [n for n, f in zip(feature_names, floored) if f]
        logger.warning("Constant feature columns; stddev floored",
                       extra={"count": int(floored.sum()), "features": names})
        std = np.where(floored, STD_FLOOR, std)
    return Standardizer(tuple(feature_names), mean, std)


def apply_standardizer(data: np.ndarray, stats: Standardizer) -> np.ndarray:
    """Standardize ``data`` with fitted statistics."""
    data = np.asarray(data, dtype=np.float64)
    stats._check_width(data)
    return (data - stats.mean) / stats.std


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Standardized features with class labels for one split of one domain."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: Tuple[str, ...]
    binning: BinningScheme
    standardizer: Optional[Standardizer] = None
    split_tag: str = "train"
    domain_id: str = ""

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if features.ndim != 2:
            raise ValidationError(f"features must be 2-D, got shape {features.shape}")
        if features.shape[0] != labels.shape[0]:
            raise ValidationError(f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
        if features.shape[1] != len(self.feature_names):
            raise ValidationError(
                f"{features.shape[1]} feature columns but {len(self.feature_names)} names"
            )
        if not np.isfinite(features).all():
            raise ValidationError("features contain NaN or Inf")
        if labels.size and (labels.min() < 0 or labels.max() >= self.binning.n_classes):
            raise ValidationError(f"labels must lie in [0, {self.binning.n_classes})")
        if self.split_tag not in SPLIT_TAGS:
            raise ValidationError(f"split_tag must be one of {SPLIT_TAGS}, got {self.split_tag!r}")
        if self.standardizer is not None and self.standardizer.feature_names != self.feature_names:
            raise ValidationError("standardizer feature names do not match the dataset")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return self.binning.n_classes

    def label_histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def raw_features(self) -> np.ndarray:
        """Features in physical units (undoing the stored standardizer)."""
        if self.standardizer is None:
            return self.features.copy()
        return self.standardizer.inverse_transform(self.features)

    def restandardize(self, stats: Optional[Standardizer]) -> 'LabeledDataset':
        """The same rows standardized with ``stats`` instead (None = raw units)."""
        raw = self.raw_features()
        if stats is None:
            return replace(self, features=raw, standardizer=None)
        if stats.feature_names != self.feature_names:
            raise ValidationError(
                f"standardizer features {list(stats.feature_names)} do not match {list(self.feature_names)}"
            )
        return replace(self, features=stats.transform(raw), standardizer=stats)

    def select(self, names: Sequence[str]) -> 'LabeledDataset':
        """Project onto a subset of feature columns, in the given order."""
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise ValidationError(f"dataset has no feature(s) {missing}")
        idx = [self.feature_names.index(n) for n in names]
        return replace(
            self,
            features=self.features[:, idx],
            feature_names=tuple(names),
            standardizer=self.standardizer.select(names) if self.standardizer else None,
        )

    def slice_rows(self, start: int, stop: int) -> 'LabeledDataset':
        return replace(self, features=self.features[start:stop], labels=self.labels[start:stop])


def split_sizes(n: int, ratios: Sequence[float]) -> List[int]:
    """Part sizes for ``n`` rows: floors of n * ratio, remainders to the largest fractions."""
    exact = [n * r for r in ratios]
    sizes = [int(math.floor(e)) for e in exact]
    remainder = n - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:remainder]:
        sizes[i] += 1
    return sizes


def _take(data, start: int, stop: int):
    if hasattr(data, "slice_rows"):
        return data.slice_rows(start, stop)
    if isinstance(data, (pd.DataFrame, pd.Series)):
        return data.iloc[start:stop]
    return data[start:stop]


def split_chronological(data, ratios: Sequence[float] = DEFAULT_RATIOS) -> tuple:
    """
    Split into contiguous train / val / test parts, in time order.

    Works on frames, datasets, DataFrames and arrays. Labeled datasets come back
    tagged train / val / test.

    Raises:
        ValidationError: If ratios are not positive and summing to 1, or a part is empty
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValidationError(f"need three positive ratios, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1, got {sum(ratios)}")

    n = len(data)
    sizes = split_sizes(n, ratios)
    if min(sizes) == 0:
        raise ValidationError(f"{n} rows cannot be split {ratios}: part sizes {sizes}")

    bounds = np.cumsum([0] + sizes)
    parts = [_take(data, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    if isinstance(data, LabeledDataset):
        parts = [replace(p, split_tag=tag) for p, tag in zip(parts, SPLIT_TAGS)]
    return tuple(parts)


@dataclass
class PreparedDomain:
    """Train / val / test datasets of one domain plus the preparation summary."""

    train: LabeledDataset
    val: LabeledDataset
    test: LabeledDataset
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def splits(self) -> Tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
        return self.train, self.val, self.test


def default_feature_names(frame: TimeSeriesFrame, power_channel: str = POWER_CHANNEL) -> List[str]:
    """All non-power channels, canonical ones first."""
    names = [n for n in frame.channel_names if n != power_channel]
    return [c for c in CANONICAL_CHANNELS if c in names] + [n for n in names if n not in CANONICAL_CHANNELS]


def prepare_domain(
    frame: TimeSeriesFrame,
    domain_id: str,
    feature_names: Optional[Sequence[str]] = None,
    n_classes: int = 5,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    standardize: bool = True,
    power_channel: str = POWER_CHANNEL,
) -> PreparedDomain:
    """
    Turn a joined frame into standardized, labeled train / val / test datasets.

    Rows with missing values are dropped, the frame is split chronologically,
    bins and standardizer are fitted on the training part only and applied to
    all three parts.
    """
    if feature_names is None:
        feature_names = default_feature_names(frame, power_channel)
    feature_names = tuple(feature_names)
    if not feature_names:
        raise ValidationError("no feature channels to build a dataset from")

    frame = frame.select(list(feature_names) + [power_channel])
    frame, n_missing = drop_missing(frame)
    parts = split_chronological(frame, ratios)

    binning = fit_bins(parts[0].column(power_channel), n_classes, domain_id=domain_id)
    stats = fit_standardizer(parts[0].matrix(feature_names), feature_names) if standardize else None

    datasets = []
    n_clamped = {}
    for part, tag in zip(parts, SPLIT_TAGS):
        labels, clamped = assign_labels(part.column(power_channel), binning)
        n_clamped[tag] = clamped
        features = part.matrix(feature_names)
        if stats is not None:
            features = stats.transform(features)
        datasets.append(LabeledDataset(
            features=features, labels=labels, feature_names=feature_names,
            binning=binning, standardizer=stats, split_tag=tag, domain_id=domain_id,
        ))

    summary = {
        "domain_id": domain_id,
        "rows": {tag: len(ds) for tag, ds in zip(SPLIT_TAGS, datasets)},
        "dropped_missing": n_missing,
        "clamped": n_clamped,
        "label_histogram": {tag: ds.label_histogram().tolist() for tag, ds in zip(SPLIT_TAGS, datasets)},
        "bin_edges": list(binning.edges),
        "feature_names": list(feature_names),
    }
    logger.info("Prepared domain", extra=summary)
    return PreparedDomain(*datasets, summary=summary)


def _write_json(path: str, payload: Dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2))
        fh.write("\n")


def save_dataset(dataset: LabeledDataset, directory: str) -> None:
    """Persist a dataset as features.csv, labels.csv and meta.json."""
    os.makedirs(directory, exist_ok=True)
    pd.DataFrame(dataset.features, columns=list(dataset.feature_names)).to_csv(
        os.path.join(directory, "features.csv"), index=False, float_format="%.17g"
    )
    pd.DataFrame({"label": dataset.labels}).to_csv(os.path.join(directory, "labels.csv"), index=False)
    _write_json(os.path.join(directory, "meta.json"), {
        "format_version": DATASET_FORMAT_VERSION,
        "domain_id": dataset.domain_id,
        "split_tag": dataset.split_tag,
        "feature_names": list(dataset.feature_names),
        "n_samples": len(dataset),
        "binning": dataset.binning.to_dict(),
        "standardizer": dataset.standardizer.to_dict() if dataset.standardizer else None,
    })


def load_dataset(directory: str) -> LabeledDataset:
    """
    Read a dataset written by :func:`save_dataset`.

    Raises:
        DataFormatError: On missing files, an unknown format version, or
            inconsistent contents
    """
    paths = {name: os.path.join(directory, name) for name in ("features.csv", "labels.csv", "meta.json")}
    missing = [name for name, p in paths.items() if not os.path.isfile(p)]
    if missing:
        raise DataFormatError(f"dataset directory {directory} lacks {missing}")

    with open(paths["meta.json"], "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("format_version") != DATASET_FORMAT_VERSION:
        raise DataFormatError(
            f"dataset format version {meta.get('format_version')!r} is not {DATASET_FORMAT_VERSION!r}"
        )

    features = pd.read_csv(paths["features.csv"], float_precision="round_trip")
    labels = pd.read_csv(paths["labels.csv"])
    if list(features.columns) != meta["feature_names"]:
        raise DataFormatError("features.csv header does not match meta.json feature_names")
    try:
        return LabeledDataset(
            features=features.to_numpy(dtype=np.float64),
            labels=labels["label"].to_numpy(dtype=np.int64),
            feature_names=tuple(meta["feature_names"]),
            binning=BinningScheme.from_dict(meta["binning"]),
            standardizer=Standardizer.from_dict(meta["standardizer"]) if meta.get("standardizer") else None,
            split_tag=meta["split_tag"],
            domain_id=meta["domain_id"],
        )
    except (KeyError, ValidationError) as e:
        raise DataFormatError(f"dataset in {directory} is inconsistent: {e}")


def save_splits(prepared: PreparedDomain, directory: str) -> None:
    """Write ``<dir>/train``, ``<dir>/val``, ``<dir>/test`` and ``<dir>/summary.json``."""
    for ds in prepared.splits:
        save_dataset(ds, os.path.join(directory, ds.split_tag))
    _write_json(os.path.join(directory, "summary.json"), prepared.summary)


def load_splits(directory: str) -> PreparedDomain:
    """Read the three splits written by :func:`save_splits`."""
    datasets = [load_dataset(os.path.join(directory, tag)) for tag in SPLIT_TAGS]
    summary = {}
    summary_path = os.path.join(directory, "summary.json")
    if os.path.isfile(summary_path):
        with open(summary_path, "r", encoding="utf-8") as fh:
            summary = json.load(fh)
    return PreparedDomain(*datasets, summary=summary)
