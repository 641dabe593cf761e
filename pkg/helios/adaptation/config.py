"""Adaptation settings."""

from dataclasses import asdict, dataclass
from typing import Any, Dict

from ..exceptions import ConfigurationError
from ..training import TrainConfig

SCOPES = ("partial", "full")


@dataclass
class AdaptConfig:
    """Target fine-tuning settings.

    ``scope="partial"`` trains only the last two dense layers; ``"full"``
    trains every parameter. Batch-norm statistics stay frozen in both.
    ``refit_standardizer`` selects whether target inputs are standardized with
    target-train statistics (True) or the checkpoint's stored ones.
    """
    scope: str = "partial"
    lr: float = 1e-4
    batch_size: int = 1000
    max_epochs: int = 300
    patience: int = 20
    seed: int = 0
    shuffle: bool = True
    refit_standardizer: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Raises:
            ConfigurationError: On an unknown scope or invalid training values
        """
        if self.scope not in SCOPES:
            raise ConfigurationError(f"scope must be one of {SCOPES}, got {self.scope!r}")
        self.to_train_config()

    def to_train_config(self) -> TrainConfig:
        return TrainConfig(lr=self.lr, batch_size=self.batch_size, max_epochs=self.max_epochs,
                           patience=self.patience, seed=self.seed, shuffle=self.shuffle)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, config: dict) -> 'AdaptConfig':
        """
        Raises:
            ConfigurationError: If a value cannot be converted
        """
        try:
            base = TrainConfig.from_dict(config)
            return cls(
                scope=str(config.get("scope", "partial")),
                lr=base.lr,
                batch_size=base.batch_size,
                max_epochs=base.max_epochs,
                patience=base.patience,
                seed=base.seed,
                shuffle=base.shuffle,
                refit_standardizer=bool(config.get("refit_standardizer", True)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid adaptation configuration value: {e}")
