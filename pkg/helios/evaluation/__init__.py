# helios - Metrics, convergence and throughput
# MIT License

from helios.evaluation.metrics import Metrics, compute_metrics, micro_f1
from helios.evaluation.convergence import (
    SaturationPoint, epochs_to_saturation, DEFAULT_WINDOW, DEFAULT_EPSILON
)
from helios.evaluation.throughput import measure_throughput, trace_throughput

__all__ = [
    'Metrics', 'compute_metrics', 'micro_f1',
    'SaturationPoint', 'epochs_to_saturation', 'DEFAULT_WINDOW', 'DEFAULT_EPSILON',
    'measure_throughput', 'trace_throughput',
]
