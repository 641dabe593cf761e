# helios - Source-domain training loop
# MIT License

from helios.training.config import TrainConfig
from helios.training.trace import EpochRecord, RunTrace, TRACE_MODES, TRACE_COLUMNS
from helios.training.loop import (
    iterate_batches, batches_per_epoch, evaluate_epoch, check_compatible,
    fit, train_source, train_scratch,
)

__all__ = [
    'TrainConfig', 'EpochRecord', 'RunTrace', 'TRACE_MODES', 'TRACE_COLUMNS',
    'iterate_batches', 'batches_per_epoch', 'evaluate_epoch', 'check_compatible',
    'fit', 'train_source', 'train_scratch',
]
