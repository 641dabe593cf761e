"""
Tensors with Reverse-Mode Autodiff
==================================

A `Tensor` wraps a numpy buffer, an optional gradient slot and, when it was
produced by a recorded op, its parents and a backward closure. The graph is
rebuilt on every forward pass and released by :func:`backward`.

Backward closures take the upstream gradient and return one gradient per
parent (``None`` where the parent needs none).

Example:
    >>> x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
    >>> loss = (x * x).sum()
    >>> loss.backward()
    >>> x.grad
    array([2., 4., 6.])
"""

from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import GradientError, ShapeError

DEFAULT_DTYPE = np.float64

ArrayLike = Union[np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """n-dimensional array with a gradient slot.

    Attributes:
        data: the value buffer (float64 unless created otherwise)
        grad: accumulated gradient, same shape as ``data``, or None
        requires_grad: whether backward should populate ``grad``
    """

    def __init__(self, data: ArrayLike, requires_grad: bool = False, dtype=None,
                 _parents: Tuple['Tensor', ...] = (), _backward: Optional[BackwardFn] = None,
                 _op: str = ""):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            dtype = data.dtype if isinstance(data, np.ndarray) and data.dtype.kind == "f" else DEFAULT_DTYPE
        self.data = np.asarray(data, dtype=dtype)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self._parents = _parents
        self._backward = _backward
        self._op = _op
        self._released = False

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return not self._parents and not self._released

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> 'Tensor':
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag}, op={self._op or 'leaf'})"

    # arithmetic, enough to build small graphs by hand
    def __add__(self, other) -> 'Tensor':
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other) -> 'Tensor':
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> 'Tensor':
        return mul(self, -1.0)

    def __sub__(self, other) -> 'Tensor':
        return add(self, mul(as_tensor(other), -1.0))

    def __matmul__(self, other) -> 'Tensor':
        return matmul(self, other)

    def sum(self) -> 'Tensor':
        return tensor_sum(self)

    def mean(self) -> 'Tensor':
        return tensor_mean(self)

    def reshape(self, *shape) -> 'Tensor':
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def make_result(data: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn, op: str) -> Tensor:
    """Wrap an op output, recording the graph edge only when a parent needs grad."""
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, dtype=data.dtype,
                      _parents=tuple(parents), _backward=backward_fn, _op=op)
    return Tensor(data, dtype=data.dtype, _op=op)


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError(f"cannot add shapes {a.shape} and {b.shape}")
    return make_result(out, (a, b),
                       lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)), "add")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return make_result(out, (a, b),
                       lambda g: (unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)), "mul")


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot matmul shapes {a.shape} and {b.shape}")
    return make_result(a.data @ b.data, (a, b),
                       lambda g: (g @ b.data.T, a.data.T @ g), "matmul")


def tensor_sum(x: Tensor) -> Tensor:
    return make_result(np.asarray(x.data.sum()), (x,),
                       lambda g: (np.broadcast_to(g, x.shape).copy(),), "sum")


def tensor_mean(x: Tensor) -> Tensor:
    n = x.size
    return make_result(np.asarray(x.data.mean()), (x,),
                       lambda g: (np.broadcast_to(g / n, x.shape).copy(),), "mean")


def reshape(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"cannot reshape {x.shape} to {shape}")
    return make_result(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def _topological_order(root: Tensor) -> list:
    order, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """
    Populate ``grad`` on every leaf that requires it.

    Gradients accumulate into existing ``grad`` buffers. The recorded graph is
    released as it is traversed, so a second backward through the same graph
    is an error.

    Raises:
        GradientError: If ``loss`` is not a scalar, or does not depend on any
            tensor that requires grad
    """
    if loss.size != 1:
        raise GradientError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise GradientError("loss does not depend on any tensor that requires grad")
    if loss._released:
        raise GradientError("graph was already released by an earlier backward")

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad = np.array(g, dtype=node.dtype) if node.grad is None else node.grad + g
            continue
        if node._backward is None:
            raise GradientError("graph was already released by an earlier backward")
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg
        node._parents = ()
        node._backward = None
        node._released = True
