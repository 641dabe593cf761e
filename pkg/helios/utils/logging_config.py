# helios - Logging configuration utilities
# MIT License

"""
Logging Configuration Utilities
===============================

Ready-made logging setups for the places helios runs: the command line, the
test-suite, and experiment output directories.

Example:
    >>> from helios.utils.logging_config import configure_experiment_logging
    >>> configure_experiment_logging("runs/ca_to_fl")
"""

import os
import logging

from helios.logging import (
    configure_logger,
    LogLevel,
    LogFormat,
    LogHandler,
    get_logger
)
from helios.logging.logger import CompactFormatter


def configure_cli_logging(verbose: bool = False) -> None:
    """
    Configure console logging for interactive CLI use.

    Args:
        verbose: DEBUG level with full text format instead of compact INFO
    """
    configure_logger(
        level=LogLevel.DEBUG if verbose else LogLevel.INFO,
        format=LogFormat.TEXT if verbose else LogFormat.COMPACT,
        handlers=[LogHandler.CONSOLE]
    )


def configure_testing_logging() -> None:
    """
    Configure logging for the test-suite.

    Warnings and above only, propagated to the root logger so pytest can
    capture them.
    """
    configure_logger(
        level=LogLevel.WARNING,
        format=LogFormat.COMPACT,
        handlers=[LogHandler.CONSOLE],
        include_timestamp=False,
        propagate=True
    )


def configure_experiment_logging(out_dir: str, verbose: bool = False) -> None:
    """
    Configure logging for one experiment output directory.

    JSON lines go to ``<out_dir>/helios.log`` for later analysis; the console
    keeps a compact view. Per-tree baseline chatter is held at WARNING.

    Args:
        out_dir: Experiment output directory (created if missing)
        verbose: Log DEBUG records as well
    """
    os.makedirs(out_dir, exist_ok=True)
    log_file = os.path.join(out_dir, "helios.log")

    configure_logger(
        level=LogLevel.DEBUG if verbose else LogLevel.INFO,
        format=LogFormat.JSON,
        handlers=[LogHandler.FILE],
        log_file=log_file,
        module_levels={"helios.baselines.tree": LogLevel.WARNING}
    )
    # Second, human-facing console handler in compact format
    base = get_logger("helios")
    handler = logging.StreamHandler()
    handler.setFormatter(CompactFormatter())
    handler.setLevel(logging.INFO)
    base.addHandler(handler)

    get_logger("helios").info("Experiment logging configured", extra={"log_file": log_file})
