"""
Experiment Configuration
========================

One JSON file describes an experiment: where each domain's raw files live,
how they are prepared, and the settings of every training, adaptation,
baseline and benchmark step. Every section is optional; command-line flags
override file values.

Example config::

    {
        "seed": 7,
        "out_dir": "runs/ca_to_fl",
        "source": {"domain_id": "ca", "weather": "raw/ca_weather.csv",
                   "solar": "raw/ca_solar.csv",
                   "weather_schema": "raw/weather_schema.json",
                   "solar_schema": "raw/solar_schema.json"},
        "prepare": {"n_classes": 5, "ratios": [0.7, 0.15, 0.15], "feature_k": 6},
        "train": {"lr": 0.001, "batch_size": 256, "max_epochs": 100},
        "adapt": {"scope": "partial"},
        "baselines": {"kinds": ["rf", "gbm"], "n_rounds": 50}
    }
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import pandas as pd

from ..adaptation import AdaptConfig
from ..baselines import KINDS
from ..exceptions import ConfigurationError
from ..synth import CLIMATE_PRESETS
from ..training import TrainConfig


def _check_keys(section: str, config: dict, known) -> None:
    if not isinstance(config, dict):
        raise ConfigurationError(f"{section} section must be an object")
    unknown = sorted(set(config) - set(known))
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {section}: {unknown}")


@dataclass
class DomainPaths:
    """Raw input files of one location."""

    domain_id: str
    weather: str
    solar: str
    weather_schema: str
    solar_schema: str

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.domain_id:
            raise ConfigurationError("domain_id must not be empty")

    def missing(self) -> list:
        """Referenced files that do not exist right now."""
        return [p for p in (self.weather, self.solar, self.weather_schema, self.solar_schema)
                if not os.path.isfile(p)]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, config: dict) -> 'DomainPaths':
        _check_keys("domain paths", config, cls.__dataclass_fields__)
        try:
            return cls(**{k: str(config[k]) for k in cls.__dataclass_fields__})
        except KeyError as e:
            raise ConfigurationError(f"Missing required domain path: {str(e)}")


@dataclass
class PrepareConfig:
    """Raw files -> labeled splits.

    Attributes:
        n_classes: power bins
        ratios: chronological train/val/test fractions
        step: common grid both frames are resampled onto
        standardize: standardize features with train-split statistics
        feature_selection: keep only the ``feature_k`` most important features
        feature_k: number of features kept by selection
        importance_trees: forest size used for the ranking
    """
    n_classes: int = 5
    ratios: Tuple[float, float, float] = (0.7, 0.15, 0.15)
    step: str = "30min"
    standardize: bool = True
    feature_selection: bool = True
    feature_k: int = 6
    importance_trees: int = 100

    def __post_init__(self):
        self.ratios = tuple(float(r) for r in self.ratios)
        self.validate()

    def validate(self) -> None:
        if self.n_classes < 2:
            raise ConfigurationError(f"n_classes must be >= 2, got {self.n_classes}")
        if len(self.ratios) != 3 or min(self.ratios) <= 0 or abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigurationError(f"ratios must be three positive values summing to 1, got {self.ratios}")
        try:
            step = pd.Timedelta(self.step)
        except ValueError as e:
            raise ConfigurationError(f"invalid step {self.step!r}: {e}")
        if step.value <= 0:
            raise ConfigurationError(f"step must be positive, got {self.step!r}")
        if self.feature_k < 1:
            raise ConfigurationError(f"feature_k must be >= 1, got {self.feature_k}")
        if self.importance_trees < 1:
            raise ConfigurationError(f"importance_trees must be >= 1, got {self.importance_trees}")

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["ratios"] = list(self.ratios)
        return payload

    @classmethod
    def from_dict(cls, config: dict) -> 'PrepareConfig':
        _check_keys("prepare", config, cls.__dataclass_fields__)
        try:
            return cls(
                n_classes=int(config.get("n_classes", 5)),
                ratios=tuple(config.get("ratios", (0.7, 0.15, 0.15))),
                step=str(config.get("step", "30min")),
                standardize=bool(config.get("standardize", True)),
                feature_selection=bool(config.get("feature_selection", True)),
                feature_k=int(config.get("feature_k", 6)),
                importance_trees=int(config.get("importance_trees", 100)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid prepare configuration value: {e}")


@dataclass
class BaselineConfig:
    """Which tree ensembles to fit and how large."""

    kinds: Tuple[str, ...] = KINDS
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3

    def __post_init__(self):
        self.kinds = tuple(self.kinds)
        self.validate()

    def validate(self) -> None:
        unknown = [k for k in self.kinds if k not in KINDS]
        if unknown:
            raise ConfigurationError(f"unknown baseline kind(s) {unknown}; choose from {KINDS}")
        if self.n_rounds < 1:
            raise ConfigurationError(f"n_rounds must be >= 1, got {self.n_rounds}")
        if self.learning_rate < 0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.max_depth < 1:
            raise ConfigurationError(f"max_depth must be >= 1, got {self.max_depth}")

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["kinds"] = list(self.kinds)
        return payload

    @classmethod
    def from_dict(cls, config: dict) -> 'BaselineConfig':
        _check_keys("baselines", config, cls.__dataclass_fields__)
        try:
            return cls(
                kinds=tuple(config.get("kinds", KINDS)),
                n_rounds=int(config.get("n_rounds", 100)),
                learning_rate=float(config.get("learning_rate", 0.1)),
                max_depth=int(config.get("max_depth", 3)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid baseline configuration value: {e}")


@dataclass
class BenchConfig:
    """Synthetic source -> target matrix.

    Without ``shift`` every ordered pair of distinct ``domains`` is a cell.
    With ``shift`` each domain is paired with its own shifted climate instead.
    """
    domains: Tuple[str, ...] = tuple(CLIMATE_PRESETS)
    shift: Optional[float] = None
    n_days: int = 365

    def __post_init__(self):
        self.domains = tuple(self.domains)
        self.validate()

    def validate(self) -> None:
        unknown = [d for d in self.domains if d not in CLIMATE_PRESETS]
        if unknown:
            raise ConfigurationError(f"unknown climate preset(s) {unknown}; "
                                     f"choose from {sorted(CLIMATE_PRESETS)}")
        if len(set(self.domains)) != len(self.domains):
            raise ConfigurationError("bench domains must be distinct")
        if self.shift is None and len(self.domains) < 2:
            raise ConfigurationError("a bench without shift needs at least two domains")
        if not self.domains:
            raise ConfigurationError("bench needs at least one domain")
        if self.shift is not None and self.shift < 0:
            raise ConfigurationError(f"shift must be >= 0, got {self.shift}")
        if self.n_days < 1:
            raise ConfigurationError(f"n_days must be >= 1, got {self.n_days}")

    def pairs(self) -> list:
        """(source preset, target preset or None for the shifted twin) per cell."""
        if self.shift is not None:
            return [(d, None) for d in self.domains]
        return [(s, t) for s in self.domains for t in self.domains if s != t]

    def to_dict(self) -> Dict[str, Any]:
        return {"domains": list(self.domains), "shift": self.shift, "n_days": self.n_days}

    @classmethod
    def from_dict(cls, config: dict) -> 'BenchConfig':
        _check_keys("bench", config, cls.__dataclass_fields__)
        try:
            shift = config.get("shift")
            return cls(
                domains=tuple(config.get("domains", tuple(CLIMATE_PRESETS))),
                shift=float(shift) if shift is not None else None,
                n_days=int(config.get("n_days", 365)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid bench configuration value: {e}")


SECTIONS = ("seed", "out_dir", "source", "target", "prepare", "train", "adapt", "baselines", "bench")


@dataclass
class ExperimentConfig:
    """Everything one experiment run needs."""

    seed: int = 0
    out_dir: str = "runs/experiment"
    source: Optional[DomainPaths] = None
    target: Optional[DomainPaths] = None
    prepare: PrepareConfig = field(default_factory=PrepareConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    adapt: AdaptConfig = field(default_factory=AdaptConfig)
    baselines: BaselineConfig = field(default_factory=BaselineConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.out_dir:
            raise ConfigurationError("out_dir must not be empty")

    def with_seed(self, seed: int) -> 'ExperimentConfig':
        """Copy with ``seed`` pushed into every seeded section."""
        return replace(self, seed=int(seed), train=replace(self.train, seed=int(seed)),
                       adapt=replace(self.adapt, seed=int(seed)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "out_dir": self.out_dir,
            "source": self.source.to_dict() if self.source else None,
            "target": self.target.to_dict() if self.target else None,
            "prepare": self.prepare.to_dict(),
            "train": self.train.to_dict(),
            "adapt": self.adapt.to_dict(),
            "baselines": self.baselines.to_dict(),
            "bench": self.bench.to_dict(),
        }

    def config_hash(self) -> str:
        """SHA-256 over the canonical JSON form, output directory excluded."""
        payload = self.to_dict()
        payload.pop("out_dir")
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, config: dict) -> 'ExperimentConfig':
        """
        Raises:
            ConfigurationError: On unknown sections or invalid values
        """
        _check_keys("experiment config", config, SECTIONS)
        seed = config.get("seed", 0)
        try:
            seed = int(seed)
        except (TypeError, ValueError):
            raise ConfigurationError(f"seed must be an integer, got {seed!r}")
        train = dict(config.get("train") or {})
        adapt = dict(config.get("adapt") or {})
        # the experiment seed is the default for every section
        train.setdefault("seed", seed)
        adapt.setdefault("seed", seed)
        source = config.get("source")
        target = config.get("target")
        return cls(
            seed=seed,
            out_dir=str(config.get("out_dir", "runs/experiment")),
            source=DomainPaths.from_dict(source) if source else None,
            target=DomainPaths.from_dict(target) if target else None,
            prepare=PrepareConfig.from_dict(config.get("prepare") or {}),
            train=TrainConfig.from_dict(train),
            adapt=AdaptConfig.from_dict(adapt),
            baselines=BaselineConfig.from_dict(config.get("baselines") or {}),
            bench=BenchConfig.from_dict(config.get("bench") or {}),
        )

    @classmethod
    def from_file(cls, path: str) -> 'ExperimentConfig':
        """
        Raises:
            ConfigurationError: If the file is missing or not a valid config
        """
        if not os.path.isfile(path):
            raise ConfigurationError(f"Config file not found: {path}")
        try:
            with open(path, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Config file {path} is not valid JSON: {e}")
        return cls.from_dict(payload)
