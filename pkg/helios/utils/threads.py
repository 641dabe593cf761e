"""Thread caps for reproducible and comparable runs."""

import os
from contextlib import contextmanager
from typing import Iterator, Optional

from threadpoolctl import threadpool_limits

from helios.exceptions import ConfigurationError

THREADS_ENV = "HELIOS_THREADS"


def max_threads(default: Optional[int] = None) -> int:
    """Worker cap from ``HELIOS_THREADS``, or ``default`` (1 when unset)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default if default is not None else 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if value < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


@contextmanager
def thread_limit(n_threads: Optional[int] = None) -> Iterator[int]:
    """Cap BLAS/OpenMP pools for the duration of the block.

    Throughput measurements run under ``thread_limit(1)``.
    """
    n = max_threads() if n_threads is None else n_threads
    with threadpool_limits(limits=n):
        yield n
