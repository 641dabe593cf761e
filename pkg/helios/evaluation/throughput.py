"""
Optimizer steps per wall-clock second.

Throughput is only comparable between runs executed under the same thread
cap; callers wrap runs in :func:`helios.utils.thread_limit`.
"""

import time
from typing import Callable, Optional

from ..exceptions import EvaluationError
from ..logging import get_logger
from ..training import RunTrace

logger = get_logger("helios.evaluation.throughput")


def measure_throughput(run: Callable[[], int], warmup: Optional[Callable[[], int]] = None,
                       clock: Callable[[], float] = time.perf_counter) -> float:
    """
    Time ``run`` and divide the iterations it reports by the elapsed time.

    Args:
        run: performs the work and returns the number of optimizer steps taken
        warmup: executed once before timing starts, excluded from the result
        clock: monotonic seconds source

    Returns:
        Iterations per second

    Raises:
        EvaluationError: If the run reports no iterations or takes no measurable time
    """
    if warmup is not None:
        warmup()
    started = clock()
    iterations = run()
    elapsed = clock() - started
    if iterations <= 0:
        raise EvaluationError(f"run reported {iterations} iterations")
    if elapsed <= 0:
        raise EvaluationError("run finished in zero measurable time")
    rate = iterations / elapsed
    logger.debug("Measured throughput", extra={"iterations": iterations, "seconds": elapsed,
                                               "its_per_sec": rate})
    return rate


def trace_throughput(trace: RunTrace, skip_warmup: bool = True) -> float:
    """
    Iterations per second recorded in a trace.

    The first epoch is treated as warm-up and excluded when the trace has
    more than one epoch and ``skip_warmup`` is set.

    Raises:
        EvaluationError: Empty trace or zero recorded time
    """
    records = trace.records
    if not records:
        raise EvaluationError("cannot compute throughput of an empty trace")
    if skip_warmup and len(records) > 1:
        records = records[1:]
    seconds = sum(r.seconds for r in records)
    iterations = sum(r.iterations for r in records)
    if seconds <= 0:
        raise EvaluationError("trace records zero training time")
    return iterations / seconds
