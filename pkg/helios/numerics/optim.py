"""
Named parameters and the Adam optimizer.

Adam keeps first and second moment estimates per parameter name:

    m_t = b1 * m_{t-1} + (1 - b1) * g
    v_t = b2 * v_{t-1} + (1 - b2) * g**2
    theta -= lr * m_hat / (sqrt(v_hat) + eps)

with ``m_hat = m_t / (1 - b1**t)`` and ``v_hat = v_t / (1 - b2**t)``.
Frozen parameters are skipped entirely.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List

import numpy as np

from ..exceptions import ConfigurationError, GradientError
from ..logging import get_logger
from .tensor import Tensor

logger = get_logger("helios.numerics.optim")


class Parameter:
    """A named tensor the optimizer may update.

    ``trainable`` mirrors the tensor's ``requires_grad`` flag, so freezing a
    parameter also stops backward from writing its gradient slot.
    """

    def __init__(self, name: str, data, trainable: bool = True):
        self.name = name
        self.tensor = Tensor(np.array(data, dtype=np.float64), requires_grad=trainable)

    @property
    def trainable(self) -> bool:
        return self.tensor.requires_grad

    @trainable.setter
    def trainable(self, value: bool) -> None:
        self.tensor.requires_grad = bool(value)

    @property
    def data(self) -> np.ndarray:
        return self.tensor.data

    @property
    def grad(self):
        return self.tensor.grad

    @property
    def shape(self):
        return self.tensor.shape

    @property
    def size(self) -> int:
        return self.tensor.size

    def zero_grad(self) -> None:
        self.tensor.grad = None

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, trainable={self.trainable})"


@dataclass
class AdamState:
    """Optimizer hyperparameters and moment buffers, keyed by parameter name."""
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.lr > 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.lr}")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1), got {value}")
        if not self.eps > 0:
            raise ConfigurationError(f"eps must be positive, got {self.eps}")


def adam_step(params: Iterable[Parameter], state: AdamState) -> int:
    """
    Apply one Adam update to every trainable parameter, then clear its gradient.

    Args:
        params: Parameters to consider; frozen ones are ignored
        state: Moment buffers and hyperparameters, updated in place

    Returns:
        Number of parameters updated

    Raises:
        GradientError: If a trainable parameter has no gradient
    """
    trainable = [p for p in params if p.trainable]
    missing = [p.name for p in trainable if p.grad is None]
    if missing:
        raise GradientError(f"trainable parameters without gradient: {', '.join(missing)}")

    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for p in trainable:
        g = p.grad
        if g.shape != p.shape:
            raise GradientError(f"gradient shape {g.shape} does not match parameter "
                                f"{p.name} {p.shape}")
        m = state.m.setdefault(p.name, np.zeros_like(p.data))
        v = state.v.setdefault(p.name, np.zeros_like(p.data))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data[...] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.zero_grad()
    return len(trainable)


class Adam:
    """Optimizer object bundling a parameter list with its :class:`AdamState`."""

    def __init__(self, params: Iterable[Parameter], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params: List[Parameter] = list(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def step(self) -> int:
        return adam_step(self.params, self.state)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
