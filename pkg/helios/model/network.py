"""
The power-class network.

Example:
    >>> model = build(ArchitectureSpec(), seed=0)
    >>> logits = model.forward(np.zeros((4, 6)), mode="eval")
    >>> logits.shape
    (4, 5)
"""

from typing import Dict, Iterator, List, Optional, Union

import numpy as np

from ..exceptions import ConfigurationError, ShapeError, ValidationError
from ..logging import get_logger
from ..numerics import Parameter, Tensor, batchnorm1d, conv1d, dense, flatten, relu, softmax
from .architecture import ArchitectureSpec

logger = get_logger("helios.model.network")

MODES = ("train", "eval")


class SolarNet:
    """Conv/BN/FC classifier over a standardized feature row.

    Attributes:
        spec: the architecture this instance was built from
        bn_frozen: when set, BN layers normalize with their running statistics
            and never update them, even in train mode
    """

    def __init__(self, spec: ArchitectureSpec, params: Dict[str, Parameter],
                 buffers: Dict[str, np.ndarray]):
        expected = spec.parameter_shapes()
        if list(params) != list(expected):
            raise ConfigurationError(f"parameter names {list(params)} do not match spec {list(expected)}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ShapeError(f"{name} has shape {params[name].shape}, spec expects {shape}")
        for name, shape in spec.buffer_shapes().items():
            if name not in buffers or buffers[name].shape != shape:
                raise ShapeError(f"buffer {name} missing or not of shape {shape}")
        self.spec = spec
        self._params = params
        self.buffers = buffers
        self.bn_frozen = False

    # parameter access
    def parameters(self) -> List[Parameter]:
        return list(self._params.values())

    def named_parameters(self) -> Iterator:
        return iter(self._params.items())

    def parameter(self, name: str) -> Parameter:
        try:
            return self._params[name]
        except KeyError:
            raise ValidationError(f"unknown parameter {name!r}")

    def trainable_parameters(self) -> List[Parameter]:
        return [p for p in self._params.values() if p.trainable]

    def fc_layer_names(self) -> List[str]:
        return sorted({n.split(".")[0] for n in self._params if n.startswith("fc")})

    def count_parameters(self, trainable_only: bool = False) -> int:
        return int(sum(p.size for p in self._params.values() if p.trainable or not trainable_only))

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def forward(self, x: Union[np.ndarray, Tensor], mode: str = "eval") -> Tensor:
        """
        Compute logits for a batch of feature rows.

        Args:
            x: [batch, n_features] standardized features
            mode: "train" uses batch statistics in BN (unless ``bn_frozen``)
                and updates the running buffers; "eval" uses the buffers

        Returns:
            Logits tensor [batch, n_classes]

        Raises:
            ShapeError: If the feature width does not match the spec
        """
        if mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
        data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != self.spec.n_features:
            raise ShapeError(f"model expects input [batch, {self.spec.n_features}], got {data.shape}")
        training = mode == "train" and not self.bn_frozen
        p = self._params

        h = Tensor(data.reshape(data.shape[0], 1, data.shape[1]))
        for i, block in enumerate(self.spec.conv_blocks, start=1):
            h = conv1d(h, p[f"conv{i}.weight"].tensor, p[f"conv{i}.bias"].tensor,
                       stride=block.stride, padding=block.padding)
            h = batchnorm1d(h, p[f"bn{i}.weight"].tensor, p[f"bn{i}.bias"].tensor,
                            running_mean=self.buffers[f"bn{i}.running_mean"],
                            running_var=self.buffers[f"bn{i}.running_var"],
                            training=training)
            h = relu(h)
        h = flatten(h)
        h = relu(dense(h, p["fc1.weight"].tensor, p["fc1.bias"].tensor))
        return dense(h, p["fc2.weight"].tensor, p["fc2.bias"].tensor)

    def predict_proba(self, x: np.ndarray, batch_size: int = 4096) -> np.ndarray:
        """Eval-mode class probabilities; no graph is recorded beyond each chunk."""
        x = np.asarray(x, dtype=np.float64)
        chunks = [softmax(self.forward(x[i:i + batch_size], mode="eval").detach()).data
                  for i in range(0, len(x), batch_size)]
        if not chunks:
            return np.zeros((0, self.spec.n_classes))
        return np.concatenate(chunks, axis=0)

    def predict(self, x: np.ndarray, batch_size: int = 4096) -> np.ndarray:
        return np.argmax(self.predict_proba(x, batch_size), axis=1)

    # snapshots
    def state_dict(self) -> Dict[str, np.ndarray]:
        """Copies of every parameter and BN buffer, keyed by name."""
        state = {name: p.data.copy() for name, p in self._params.items()}
        state.update({name: buf.copy() for name, buf in self.buffers.items()})
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """
        Overwrite parameters and buffers in place.

        Raises:
            ShapeError: On a missing name or a shape mismatch
        """
        for name, target in list(self._params.items()) + list(self.buffers.items()):
            arr = target.data if isinstance(target, Parameter) else target
            if name not in state:
                raise ShapeError(f"state is missing {name!r}")
            value = np.asarray(state[name])
            if value.shape != arr.shape:
                raise ShapeError(f"{name}: state shape {value.shape} does not match {arr.shape}")
            arr[...] = value

    def __repr__(self) -> str:
        return (f"SolarNet(n_features={self.spec.n_features}, n_classes={self.spec.n_classes}, "
                f"parameters={self.count_parameters()})")


def _he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def build(spec: Optional[ArchitectureSpec] = None, seed: int = 0) -> SolarNet:
    """
    Create a freshly initialized network.

    Conv and dense weights are He-uniform, biases zero, BN gamma one and beta
    zero; running mean zero and running variance one. Weights are drawn in
    model order from a single generator seeded with ``seed``.
    """
    spec = spec or ArchitectureSpec()
    rng = np.random.default_rng(seed)
    params: Dict[str, Parameter] = {}
    for name, shape in spec.parameter_shapes().items():
        layer, kind = name.split(".")
        if kind == "weight" and not layer.startswith("bn"):
            fan_in = int(np.prod(shape[1:]))
            data = _he_uniform(rng, shape, fan_in)
        elif kind == "weight":
            data = np.ones(shape)
        else:
            data = np.zeros(shape)
        params[name] = Parameter(name, data)
    buffers = {name: (np.zeros(shape) if name.endswith("mean") else np.ones(shape))
               for name, shape in spec.buffer_shapes().items()}
    model = SolarNet(spec, params, buffers)
    logger.debug("Built model", extra={"seed": seed, "parameters": model.count_parameters()})
    return model


def count_parameters(model: SolarNet, trainable_only: bool = False) -> int:
    return model.count_parameters(trainable_only)
