"""Training hyperparameters."""

from dataclasses import asdict, dataclass
from typing import Any, Dict

from ..exceptions import ConfigurationError


@dataclass
class TrainConfig:
    """Mini-batch Adam training settings.

    Attributes:
        lr: Adam learning rate
        batch_size: rows per optimizer step; at least 2 because of batch norm
        max_epochs: hard epoch budget
        patience: epochs without validation improvement before stopping
        seed: seeds the epoch shuffling
        shuffle: reshuffle row order every epoch
    """
    lr: float = 1e-4
    batch_size: int = 1000
    max_epochs: int = 300
    patience: int = 20
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Raises:
            ConfigurationError: If any value is out of range
        """
        if not self.lr > 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 2:
            raise ConfigurationError(f"batch_size must be >= 2 (batch norm), got {self.batch_size}")
        if self.max_epochs < 1:
            raise ConfigurationError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise ConfigurationError(f"patience must be >= 1, got {self.patience}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, config: dict) -> 'TrainConfig':
        """
        Raises:
            ConfigurationError: If a value cannot be converted
        """
        try:
            return cls(
                lr=float(config.get("lr", 1e-4)),
                batch_size=int(config.get("batch_size", 1000)),
                max_epochs=int(config.get("max_epochs", 300)),
                patience=int(config.get("patience", 20)),
                seed=int(config.get("seed", 0)),
                shuffle=bool(config.get("shuffle", True)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid training configuration value: {e}")
