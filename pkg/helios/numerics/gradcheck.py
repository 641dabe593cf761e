"""Central finite-difference gradient checking."""

from typing import Callable, Dict, Sequence

import numpy as np

from ..exceptions import GradientError
from .tensor import Tensor, backward


def numerical_gradient(fn: Callable[[], Tensor], tensor: Tensor, h: float = 1e-5) -> np.ndarray:
    """Estimate d fn() / d tensor by perturbing ``tensor.data`` in place."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = fn().item()
        flat[i] = original - h
        minus = fn().item()
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def gradcheck(fn: Callable[[], Tensor], inputs: Sequence[Tensor], h: float = 1e-5) -> Dict[int, float]:
    """
    Compare backward gradients with central differences.

    ``fn`` must rebuild the graph from ``inputs`` on every call and return a
    scalar tensor. Inputs should be float64.

    Returns:
        Maximum relative error per input index

    Raises:
        GradientError: If backward leaves an input without a gradient
    """
    for t in inputs:
        t.grad = None
    backward(fn())
    errors = {}
    for i, t in enumerate(inputs):
        if t.grad is None:
            raise GradientError(f"input {i} received no gradient")
        analytic = t.grad.copy()
        errors[i] = relative_error(analytic, numerical_gradient(fn, t, h))
    return errors
