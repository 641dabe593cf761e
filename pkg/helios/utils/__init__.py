# helios - Utilities package
# MIT License

from helios.utils.logging_config import (
    configure_cli_logging,
    configure_testing_logging,
    configure_experiment_logging
)
from helios.utils.threads import max_threads, thread_limit

__all__ = [
    'configure_cli_logging',
    'configure_testing_logging',
    'configure_experiment_logging',
    'max_threads',
    'thread_limit'
]
