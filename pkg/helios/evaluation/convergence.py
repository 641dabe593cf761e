"""Epochs-to-saturation of a validation-accuracy curve."""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..exceptions import EvaluationError
from ..training import RunTrace

DEFAULT_WINDOW = 10
DEFAULT_EPSILON = 0.005


@dataclass(frozen=True)
class SaturationPoint:
    """Where a curve saturates.

    Attributes:
        index: 0-based position in the curve
        epoch: epoch number at that position (1-based for run traces)
        reached: False when no position qualified and the last one is reported
    """
    index: int
    epoch: int
    reached: bool


def epochs_to_saturation(trace: Union[RunTrace, Sequence[float]], window: int = DEFAULT_WINDOW,
                         epsilon: float = DEFAULT_EPSILON) -> SaturationPoint:
    """
    First position whose look-ahead window gains at most ``epsilon``.

    Position ``e`` qualifies when ``max(acc[e+1 : e+window+1]) - acc[e] <= epsilon``
    and the full window of ``window`` later values exists.

    Args:
        trace: a RunTrace or a plain sequence of validation accuracies
        window: look-ahead length, at least 1
        epsilon: tolerated improvement

    Raises:
        EvaluationError: On an empty curve or window < 1
    """
    if window < 1:
        raise EvaluationError(f"window must be >= 1, got {window}")
    if isinstance(trace, RunTrace):
        acc, epochs = trace.val_accuracy, trace.epochs
    else:
        acc = np.asarray(trace, dtype=np.float64)
        epochs = np.arange(len(acc))
    if acc.size == 0:
        raise EvaluationError("cannot find saturation of an empty curve")

    for e in range(len(acc) - window):
        if acc[e + 1:e + window + 1].max() - acc[e] <= epsilon:
            return SaturationPoint(e, int(epochs[e]), True)
    last = len(acc) - 1
    return SaturationPoint(last, int(epochs[last]), False)
