"""
Architecture description for the Conv/BN/FC power-class network.

The input row of ``n_features`` standardized values is read as a single
channel sequence of length ``n_features``. Each conv block is
Conv1D -> BatchNorm -> activation; the head is always exactly two dense
layers, ``fc1`` (hidden) and ``fc2`` (one logit per power class).
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Tuple

from ..exceptions import ConfigurationError
from ..numerics import conv1d_output_length

ACTIVATIONS = ("relu",)


class ConvBlock(NamedTuple):
    channels: int
    kernel: int
    stride: int = 1
    padding: int = 0


DEFAULT_CONV_BLOCKS: Tuple[ConvBlock, ...] = (ConvBlock(16, 3, 1, 1), ConvBlock(32, 3, 1, 1))


@dataclass
class ArchitectureSpec:
    """Layer sizes of the classifier.

    Attributes:
        n_features: width of the input row
        conv_blocks: (channels, kernel, stride, padding) per conv block
        fc_hidden: width of the first dense layer
        n_classes: number of power classes, the width of the last dense layer
        activation: nonlinearity after every BN and after fc1
    """
    n_features: int = 6
    conv_blocks: Tuple[ConvBlock, ...] = field(default=DEFAULT_CONV_BLOCKS)
    fc_hidden: int = 64
    n_classes: int = 5
    activation: str = "relu"

    def __post_init__(self):
        self.conv_blocks = tuple(ConvBlock(*[int(v) for v in b]) for b in self.conv_blocks)
        self.validate()

    def validate(self) -> None:
        """
        Raises:
            ConfigurationError: If a size is non-positive, the activation is
                unknown, or the conv stack collapses the sequence to nothing
        """
        if self.n_features < 1:
            raise ConfigurationError(f"n_features must be >= 1, got {self.n_features}")
        if self.n_classes < 2:
            raise ConfigurationError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.fc_hidden < 1:
            raise ConfigurationError(f"fc_hidden must be >= 1, got {self.fc_hidden}")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if not self.conv_blocks:
            raise ConfigurationError("at least one conv block is required")
        length = self.n_features
        for i, block in enumerate(self.conv_blocks, start=1):
            if block.channels < 1 or block.kernel < 1 or block.stride < 1 or block.padding < 0:
                raise ConfigurationError(f"conv block {i} has invalid sizes {tuple(block)}")
            length = conv1d_output_length(length, block.kernel, block.stride, block.padding)
            if length < 1:
                raise ConfigurationError(f"conv block {i} reduces the sequence to length {length}")

    @property
    def sequence_lengths(self) -> List[int]:
        """Sequence length after each conv block."""
        lengths, length = [], self.n_features
        for block in self.conv_blocks:
            length = conv1d_output_length(length, block.kernel, block.stride, block.padding)
            lengths.append(length)
        return lengths

    @property
    def flat_width(self) -> int:
        return self.conv_blocks[-1].channels * self.sequence_lengths[-1]

    def parameter_shapes(self) -> Dict[str, Tuple[int, ...]]:
        """Name -> shape of every learnable tensor, in model order."""
        shapes: Dict[str, Tuple[int, ...]] = {}
        c_in = 1
        for i, block in enumerate(self.conv_blocks, start=1):
            shapes[f"conv{i}.weight"] = (block.channels, c_in, block.kernel)
            shapes[f"conv{i}.bias"] = (block.channels,)
            shapes[f"bn{i}.weight"] = (block.channels,)
            shapes[f"bn{i}.bias"] = (block.channels,)
            c_in = block.channels
        shapes["fc1.weight"] = (self.fc_hidden, self.flat_width)
        shapes["fc1.bias"] = (self.fc_hidden,)
        shapes["fc2.weight"] = (self.n_classes, self.fc_hidden)
        shapes["fc2.bias"] = (self.n_classes,)
        return shapes

    def buffer_shapes(self) -> Dict[str, Tuple[int, ...]]:
        """Name -> shape of the BN running statistics."""
        shapes: Dict[str, Tuple[int, ...]] = {}
        for i, block in enumerate(self.conv_blocks, start=1):
            shapes[f"bn{i}.running_mean"] = (block.channels,)
            shapes[f"bn{i}.running_var"] = (block.channels,)
        return shapes

    def count_parameters(self) -> int:
        total = 0
        for shape in self.parameter_shapes().values():
            size = 1
            for dim in shape:
                size *= dim
            total += size
        return total

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_features": self.n_features,
            "conv_blocks": [list(b) for b in self.conv_blocks],
            "fc_hidden": self.fc_hidden,
            "n_classes": self.n_classes,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, config: dict) -> 'ArchitectureSpec':
        """
        Raises:
            ConfigurationError: If a value is missing or malformed
        """
        try:
            blocks = config.get("conv_blocks", DEFAULT_CONV_BLOCKS)
            return cls(
                n_features=int(config.get("n_features", 6)),
                conv_blocks=tuple(ConvBlock(*[int(v) for v in b]) for b in blocks),
                fc_hidden=int(config.get("fc_hidden", 64)),
                n_classes=int(config.get("n_classes", 5)),
                activation=str(config.get("activation", "relu")),
            )
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid architecture value: {e}")
