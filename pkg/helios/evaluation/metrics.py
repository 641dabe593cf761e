"""
Classification metrics for power-class predictions.

Per-class precision and recall use scikit-learn's kernels with undefined
ratios reported as 0; the count of undefined values is logged.
"""

import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from ..exceptions import EvaluationError, ValidationError
from ..logging import get_logger

logger = get_logger("helios.evaluation.metrics")


@dataclass(eq=False)
class Metrics:
    """Scores of one prediction run.

    Attributes:
        confusion: [n_classes, n_classes] counts, rows true and columns predicted
        accuracy: trace / total of ``confusion``
        precision, recall, f1: per-class arrays
        macro_f1: unweighted class mean of ``f1``
        weighted_f1: support-weighted class mean of ``f1``
        n_samples: number of scored rows
        metadata: free-form labels (source, target, arm, scope)
    """
    confusion: np.ndarray
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_f1: float
    weighted_f1: float
    n_samples: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return int(self.confusion.shape[0])

    @property
    def support(self) -> np.ndarray:
        return self.confusion.sum(axis=1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accuracy": float(self.accuracy),
            "macro_f1": float(self.macro_f1),
            "weighted_f1": float(self.weighted_f1),
            "n_samples": int(self.n_samples),
            "confusion": self.confusion.astype(int).tolist(),
            "precision": [float(v) for v in self.precision],
            "recall": [float(v) for v in self.recall],
            "f1": [float(v) for v in self.f1],
            "metadata": dict(self.metadata),
        }

    def to_json(self, path: Optional[str] = None) -> str:
        """Serialize (keys sorted); also written to ``path`` when given."""
        text = json.dumps(self.to_dict(), sort_keys=True, indent=2)
        if path is not None:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_csv_row(self) -> Dict[str, Any]:
        """Flat record for table assembly: metadata first, then headline scores."""
        row: Dict[str, Any] = dict(self.metadata)
        row.update({
            "n_samples": int(self.n_samples),
            "accuracy": float(self.accuracy),
            "macro_f1": float(self.macro_f1),
            "weighted_f1": float(self.weighted_f1),
        })
        for c, value in enumerate(self.f1):
            row[f"f1_class{c}"] = float(value)
        return row

    @classmethod
    def from_dict(cls, payload: dict) -> 'Metrics':
        return cls(
            confusion=np.asarray(payload["confusion"], dtype=np.int64),
            accuracy=float(payload["accuracy"]),
            precision=np.asarray(payload["precision"], dtype=np.float64),
            recall=np.asarray(payload["recall"], dtype=np.float64),
            f1=np.asarray(payload["f1"], dtype=np.float64),
            macro_f1=float(payload["macro_f1"]),
            weighted_f1=float(payload["weighted_f1"]),
            n_samples=int(payload["n_samples"]),
            metadata=dict(payload.get("metadata", {})),
        )


def compute_metrics(y_true: Sequence[int], y_pred: Sequence[int], n_classes: int,
                    metadata: Optional[Dict[str, Any]] = None) -> Metrics:
    """
    Score predicted classes against true classes.

    Args:
        y_true: true class indices
        y_pred: predicted class indices
        n_classes: number of classes; the confusion matrix is always square of this size
        metadata: labels copied onto the result

    Returns:
        Metrics

    Raises:
        EvaluationError: On length mismatch or empty input
        ValidationError: On labels outside [0, n_classes)
    """
    y_true = np.asarray(y_true, dtype=np.int64).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=np.int64).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise EvaluationError(f"{len(y_true)} true labels but {len(y_pred)} predictions")
    if y_true.size == 0:
        raise EvaluationError("cannot score an empty prediction set")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.min() < 0 or arr.max() >= n_classes:
            raise ValidationError(f"{name} labels must lie in [0, {n_classes})")

    labels = np.arange(n_classes)
    confusion = confusion_matrix(y_true, y_pred, labels=labels)
    precision, recall, f1, support = precision_recall_fscore_support(
        y_true, y_pred, labels=labels, average=None, zero_division=0
    )
    predicted = confusion.sum(axis=0)
    undefined = int((predicted == 0).sum() + (support == 0).sum())
    if undefined:
        logger.warning("Undefined precision/recall reported as 0",
                       extra={"count": undefined, "n_classes": n_classes})

    n = int(confusion.sum())
    f1 = np.asarray(f1, dtype=np.float64)
    return Metrics(
        confusion=confusion.astype(np.int64),
        accuracy=float(np.trace(confusion)) / n,
        precision=np.asarray(precision, dtype=np.float64),
        recall=np.asarray(recall, dtype=np.float64),
        f1=f1,
        macro_f1=float(f1.mean()),
        weighted_f1=float(np.dot(support, f1)) / n,
        n_samples=n,
        metadata=dict(metadata or {}),
    )


def micro_f1(confusion: np.ndarray) -> float:
    """Micro-averaged F1 from a confusion matrix: 2TP / (2TP + FP + FN) over all classes."""
    confusion = np.asarray(confusion)
    tp = float(np.trace(confusion))
    fp = float(confusion.sum(axis=0).sum()) - tp
    fn = float(confusion.sum(axis=1).sum()) - tp
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0
