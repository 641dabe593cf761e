"""
Per-epoch training records.

A trace is written as ``trace.csv`` with a leading ``# mode=<tag>`` comment
line followed by the columns epoch, train_loss, train_acc, val_acc, seconds,
iterations.
"""

import os
from dataclasses import asdict, dataclass, field
from typing import List

import numpy as np
import pandas as pd

from ..exceptions import DataFormatError, ValidationError

TRACE_MODES = ("scratch", "adapt-partial", "adapt-full")
TRACE_COLUMNS = ["epoch", "train_loss", "train_acc", "val_acc", "seconds", "iterations"]


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_acc: float
    seconds: float
    iterations: int


@dataclass
class RunTrace:
    """Epoch-by-epoch history of one training or adaptation run."""
    mode: str
    records: List[EpochRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in TRACE_MODES:
            raise ValidationError(f"trace mode must be one of {TRACE_MODES}, got {self.mode!r}")
        records, self.records = list(self.records), []
        for record in records:
            self.append(record)

    def append(self, record: EpochRecord) -> None:
        if self.records and record.epoch <= self.records[-1].epoch:
            raise ValidationError(f"epoch {record.epoch} does not follow {self.records[-1].epoch}")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def epochs(self) -> np.ndarray:
        return np.array([r.epoch for r in self.records], dtype=np.int64)

    @property
    def val_accuracy(self) -> np.ndarray:
        return np.array([r.val_acc for r in self.records], dtype=np.float64)

    @property
    def train_loss(self) -> np.ndarray:
        return np.array([r.train_loss for r in self.records], dtype=np.float64)

    @property
    def total_iterations(self) -> int:
        return int(sum(r.iterations for r in self.records))

    @property
    def total_seconds(self) -> float:
        return float(sum(r.seconds for r in self.records))

    @property
    def best_epoch(self) -> int:
        """First epoch reaching the highest validation accuracy (0 when empty)."""
        if not self.records:
            return 0
        return int(self.epochs[int(np.argmax(self.val_accuracy))])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.records], columns=TRACE_COLUMNS)

    def to_csv(self, path: str) -> str:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(f"# mode={self.mode}\n")
            self.to_frame().to_csv(fh, index=False, float_format="%.17g")
        return path

    @classmethod
    def from_csv(cls, path: str) -> 'RunTrace':
        """
        Raises:
            DataFormatError: Missing file, missing mode line or columns
        """
        try:
            with open(path) as fh:
                first = fh.readline().strip()
            frame = pd.read_csv(path, comment="#", float_precision="round_trip")
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise DataFormatError(f"cannot read trace {path}: {e}")
        if not first.startswith("# mode="):
            raise DataFormatError(f"{path} lacks the '# mode=' header line")
        missing = [c for c in TRACE_COLUMNS if c not in frame.columns]
        if missing:
            raise DataFormatError(f"{path} is missing columns {missing}")
        records = [
            EpochRecord(int(row.epoch), float(row.train_loss), float(row.train_acc),
                        float(row.val_acc), float(row.seconds), int(row.iterations))
            for row in frame.itertuples(index=False)
        ]
        return cls(first[len("# mode="):], records)
