"""
Differentiable layer kernels.

Every op validates its input shapes, computes the forward value with numpy
and records a backward closure through :func:`make_result`.

Layouts:
    dense      x [B, in],  W [out, in], b [out]
    conv1d     x [B, C_in, L], K [C_out, C_in, k], b [C_out]
    batchnorm  x [B, C] or [B, C, L]; statistics per channel
    softmax    logits [B, N_c]
"""

from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import NumericsError, ShapeError, ValidationError
from ..logging import get_logger
from .tensor import Tensor, as_tensor, make_result

logger = get_logger("helios.numerics.functional")

PROB_FLOOR = 1e-15
BN_MOMENTUM = 0.1
BN_EPS = 1e-5


def _check_labels(labels, batch: int, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (batch,):
        raise ShapeError(f"labels must have shape ({batch},), got {labels.shape}")
    if labels.dtype.kind not in "iu":
        if not np.all(np.equal(np.mod(labels, 1), 0)):
            raise ValidationError("labels must be integers")
        labels = labels.astype(np.int64)
    if batch and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValidationError(f"labels must lie in [0, {n_classes}), got range "
                              f"[{labels.min()}, {labels.max()}]")
    return labels


def dense(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Affine map ``x @ W.T + b``."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 2 or weight.ndim != 2:
        raise ShapeError(f"dense expects 2-D input and weight, got {x.shape} and {weight.shape}")
    if x.shape[1] != weight.shape[1]:
        raise ShapeError(f"dense input width {x.shape[1]} does not match weight {weight.shape}")
    out = x.data @ weight.data.T
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (weight.shape[0],):
            raise ShapeError(f"dense bias must have shape ({weight.shape[0]},), got {bias.shape}")
        out = out + bias.data
        parents.append(bias)

    def _backward(g):
        grads = [g @ weight.data, g.T @ x.data]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return tuple(grads)

    return make_result(out, parents, _backward, "dense")


def conv1d_output_length(length: int, kernel: int, stride: int = 1, padding: int = 0) -> int:
    return (length + 2 * padding - kernel) // stride + 1


def conv1d(x: Tensor, kernel: Tensor, bias: Optional[Tensor] = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """
    1-D cross-correlation with zero padding.

    Implemented as im2col plus one matrix product. The backward pass
    scatter-adds the column gradients back onto the padded input.

    Raises:
        ShapeError: On rank or channel mismatch, or when the output would be empty
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if x.ndim != 3 or kernel.ndim != 3:
        raise ShapeError(f"conv1d expects 3-D input and kernel, got {x.shape} and {kernel.shape}")
    batch, c_in, length = x.shape
    c_out, k_in, k = kernel.shape
    if k_in != c_in:
        raise ShapeError(f"conv1d kernel expects {k_in} input channels, input has {c_in}")
    if stride < 1 or padding < 0:
        raise ShapeError(f"invalid conv1d stride={stride} padding={padding}")
    l_out = conv1d_output_length(length, k, stride, padding)
    if l_out < 1:
        raise ShapeError(f"conv1d output length would be {l_out} for input length {length}, "
                         f"kernel {k}, stride {stride}, padding {padding}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
    windows = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :][:, :, :l_out, :]
    cols = windows.transpose(0, 2, 1, 3).reshape(batch * l_out, c_in * k)
    kmat = kernel.data.reshape(c_out, c_in * k)
    out = (cols @ kmat.T).reshape(batch, l_out, c_out).transpose(0, 2, 1)
    parents = [x, kernel]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (c_out,):
            raise ShapeError(f"conv1d bias must have shape ({c_out},), got {bias.shape}")
        out = out + bias.data[None, :, None]
        parents.append(bias)
    out = np.ascontiguousarray(out)

    def _backward(g):
        g2 = g.transpose(0, 2, 1).reshape(batch * l_out, c_out)
        g_kernel = (g2.T @ cols).reshape(kernel.shape)
        g_cols = (g2 @ kmat).reshape(batch, l_out, c_in, k).transpose(0, 2, 1, 3)
        g_xp = np.zeros_like(xp)
        span = stride * (l_out - 1) + 1
        for j in range(k):
            g_xp[:, :, j:j + span:stride] += g_cols[..., j]
        g_x = g_xp[:, :, padding:padding + length] if padding else g_xp
        grads = [g_x, g_kernel]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2)))
        return tuple(grads)

    return make_result(out, parents, _backward, "conv1d")


def batchnorm1d(x: Tensor, gamma: Tensor, beta: Tensor,
                running_mean: Optional[np.ndarray] = None,
                running_var: Optional[np.ndarray] = None,
                training: bool = True, momentum: float = BN_MOMENTUM,
                eps: float = BN_EPS) -> Tensor:
    """
    Per-channel batch normalization.

    In training mode the batch statistics normalize the input and the running
    buffers (if given) are updated in place: biased variance for the forward
    pass, unbiased variance for the running estimate. In inference mode the
    running buffers normalize the input and are left untouched.

    Raises:
        ShapeError: On rank or channel mismatch
        NumericsError: Training mode with fewer than two values per channel,
            or inference mode without running statistics
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if x.ndim not in (2, 3):
        raise ShapeError(f"batchnorm1d expects [B, C] or [B, C, L], got {x.shape}")
    channels = x.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ShapeError(f"batchnorm1d affine parameters must have shape ({channels},)")
    axes = (0,) if x.ndim == 2 else (0, 2)
    view = (1, channels) if x.ndim == 2 else (1, channels, 1)
    count = x.size // channels

    if training:
        if x.shape[0] < 2:
            raise NumericsError("batchnorm1d in training mode needs a batch of at least 2")
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        if running_mean is not None and running_var is not None:
            running_mean *= 1.0 - momentum
            running_mean += momentum * mean
            running_var *= 1.0 - momentum
            running_var += momentum * var * count / (count - 1)
    else:
        if running_mean is None or running_var is None:
            raise NumericsError("batchnorm1d in inference mode needs running statistics")
        mean, var = np.asarray(running_mean), np.asarray(running_var)

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean.reshape(view)) * inv_std.reshape(view)
    out = gamma.data.reshape(view) * xhat + beta.data.reshape(view)

    def _backward(g):
        g_gamma = (g * xhat).sum(axis=axes)
        g_beta = g.sum(axis=axes)
        g_xhat = g * gamma.data.reshape(view)
        if training:
            g_x = (inv_std.reshape(view) / count) * (
                count * g_xhat
                - g_xhat.sum(axis=axes).reshape(view)
                - xhat * (g_xhat * xhat).sum(axis=axes).reshape(view)
            )
        else:
            g_x = g_xhat * inv_std.reshape(view)
        return g_x, g_gamma, g_beta

    return make_result(out, (x, gamma, beta), _backward, "batchnorm1d")


def relu(x: Tensor) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return make_result(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,), "relu")


def flatten(x: Tensor) -> Tensor:
    """Collapse every axis after the batch axis."""
    x = as_tensor(x)
    if x.ndim < 2:
        raise ShapeError(f"flatten needs a batch axis, got shape {x.shape}")
    shape = x.shape
    return make_result(x.data.reshape(shape[0], -1), (x,), lambda g: (g.reshape(shape),), "flatten")


def _stable_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax(logits: Tensor) -> Tensor:
    """
    Row-wise softmax with max-subtraction.

    Raises:
        ShapeError: Input is not 2-D
        NumericsError: Input contains NaN
    """
    logits = as_tensor(logits)
    if logits.ndim != 2:
        raise ShapeError(f"softmax expects [B, N_c], got {logits.shape}")
    if np.isnan(logits.data).any():
        raise NumericsError("softmax input contains NaN")
    p = _stable_softmax(logits.data)

    def _backward(g):
        return (p * (g - (g * p).sum(axis=1, keepdims=True)),)

    return make_result(p, (logits,), _backward, "softmax")


def cross_entropy(probs: Tensor, labels) -> Tensor:
    """
    Mean negative log-likelihood of the labeled class.

    Probabilities below ``PROB_FLOOR`` are clamped before the log (with a
    warning); the clamped entries receive zero gradient.

    Raises:
        ShapeError: Shape mismatch between probabilities and labels
        ValidationError: Labels out of range
        NumericsError: A row does not sum to 1 within 1e-6
    """
    probs = as_tensor(probs)
    if probs.ndim != 2:
        raise ShapeError(f"cross_entropy expects [B, N_c] probabilities, got {probs.shape}")
    batch, n_classes = probs.shape
    if batch == 0:
        raise ShapeError("cross_entropy needs a non-empty batch")
    labels = _check_labels(labels, batch, n_classes)
    row_sums = probs.data.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-6):
        raise NumericsError(f"probability rows must sum to 1 (worst row sums to "
                            f"{row_sums[np.argmax(np.abs(row_sums - 1.0))]:.8f})")

    rows = np.arange(batch)
    picked = probs.data[rows, labels]
    clamped = picked < PROB_FLOOR
    if clamped.any():
        logger.warning("Clamped label probabilities before log",
                       extra={"count": int(clamped.sum()), "floor": PROB_FLOOR})
    safe = np.where(clamped, PROB_FLOOR, picked)
    loss = np.asarray(-np.log(safe).mean())

    def _backward(g):
        grad = np.zeros_like(probs.data)
        grad[rows, labels] = np.where(clamped, 0.0, -1.0 / (safe * batch)) * g
        return (grad,)

    return make_result(loss, (probs,), _backward, "cross_entropy")


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Fused softmax followed by cross-entropy; gradient is ``(p - onehot) / B``."""
    logits = as_tensor(logits)
    if logits.ndim != 2:
        raise ShapeError(f"softmax_cross_entropy expects [B, N_c], got {logits.shape}")
    batch, n_classes = logits.shape
    if batch == 0:
        raise ShapeError("softmax_cross_entropy needs a non-empty batch")
    if np.isnan(logits.data).any():
        raise NumericsError("softmax input contains NaN")
    labels = _check_labels(labels, batch, n_classes)

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_norm
    rows = np.arange(batch)
    loss = np.asarray(-log_p[rows, labels].mean())

    def _backward(g):
        grad = np.exp(log_p)
        grad[rows, labels] -= 1.0
        return (grad * (g / batch),)

    return make_result(loss, (logits,), _backward, "softmax_cross_entropy")
