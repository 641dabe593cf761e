"""
Random-forest feature ranking and selection.

Importances are the forest's mean decrease in Gini impurity, fitted on the
binned power classes of a training split.

Example:
    >>> report = fit_importance(train, n_trees=100, seed=0)
    >>> names = select_features(report, k=6)
    >>> reduced = reduce_dataset(train, names)
"""

import json
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..baselines import fit_random_forest
from ..data import LabeledDataset
from ..exceptions import DataFormatError, FeatureSelectionError, ValidationError
from ..logging import get_logger

logger = get_logger("helios.features.importance")

SUM_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class ImportanceReport:
    """Normalized importance per input column."""

    feature_names: Tuple[str, ...]
    importances: np.ndarray
    n_trees: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        importances = np.array(self.importances, dtype=np.float64).reshape(-1)
        if importances.shape[0] != len(self.feature_names):
            raise FeatureSelectionError(f"{importances.shape[0]} importances for "
                                        f"{len(self.feature_names)} features")
        if (importances < 0).any():
            raise FeatureSelectionError("importances must be non-negative")
        if abs(importances.sum() - 1.0) > SUM_TOLERANCE:
            raise FeatureSelectionError(f"importances must sum to 1, got {importances.sum():.12f}")
        importances.setflags(write=False)
        object.__setattr__(self, "importances", importances)

    def ranking(self) -> List[str]:
        """All features, most important first; equal importances keep column order."""
        order = sorted(range(len(self.feature_names)), key=lambda i: (-self.importances[i], i))
        return [self.feature_names[i] for i in order]

    def as_dict(self) -> Dict[str, float]:
        return {name: float(v) for name, v in zip(self.feature_names, self.importances)}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "features": list(self.feature_names),
            "importances": self.importances.tolist(),
            "n_trees": self.n_trees,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> 'ImportanceReport':
        return cls(tuple(payload["features"]), payload["importances"],
                   int(payload["n_trees"]), int(payload["seed"]))


def fit_importance(train: LabeledDataset, n_trees: int = 100, seed: int = 0,
                   n_jobs: Optional[int] = None) -> ImportanceReport:
    """
    Rank the dataset's features by random-forest impurity decrease.

    The forest uses unlimited depth, sqrt(n_features) candidates per split and
    bootstrap resampling; per-tree seeds derive from ``seed``, so the report is
    reproducible regardless of ``n_jobs``.

    Raises:
        FeatureSelectionError: Empty data, n_trees < 1, a single label class,
            or no informative split at all
    """
    if len(train) == 0:
        raise FeatureSelectionError("cannot rank features of an empty dataset")
    if n_trees < 1:
        raise FeatureSelectionError(f"n_trees must be >= 1, got {n_trees}")
    if np.unique(train.labels).size < 2:
        raise FeatureSelectionError("training labels contain a single class")

    forest = fit_random_forest(train.features, train.labels, n_trees=n_trees, seed=seed,
                               n_classes=train.n_classes, n_jobs=n_jobs)
    importances = forest.feature_importances_
    if not importances.sum() > 0:
        raise FeatureSelectionError("no tree found an informative split")
    report = ImportanceReport(train.feature_names, importances, n_trees, seed)
    logger.info("Ranked features", extra={"ranking": report.ranking(), "n_trees": n_trees,
                                          "seed": seed})
    return report


def select_features(report: ImportanceReport, k: int) -> List[str]:
    """
    The ``k`` most important features, in ranking order.

    Raises:
        ValidationError: If k is outside [1, n_features]
    """
    n = len(report.feature_names)
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in [1, {n}], got {k}")
    return report.ranking()[:k]


def reduce_dataset(dataset: LabeledDataset, feature_names: Sequence[str]) -> LabeledDataset:
    """Project a dataset (and its standardizer) onto the selected features."""
    return dataset.select(list(feature_names))


def save_report(report: ImportanceReport, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def load_report(path: str) -> ImportanceReport:
    """
    Raises:
        DataFormatError: Missing or malformed report file
    """
    try:
        with open(path) as fh:
            return ImportanceReport.from_dict(json.load(fh))
    except OSError as e:
        raise DataFormatError(f"cannot read importance report {path}: {e}")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise DataFormatError(f"malformed importance report {path}: {e}")
