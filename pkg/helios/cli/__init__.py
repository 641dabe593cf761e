# helios - Command-line interface
# MIT License

from helios.cli.config import (
    ExperimentConfig, PrepareConfig, DomainPaths, BaselineConfig, BenchConfig
)
from helios.cli.main import main, build_parser, EXIT_OK, EXIT_FAILURE, EXIT_USAGE

__all__ = [
    'ExperimentConfig', 'PrepareConfig', 'DomainPaths', 'BaselineConfig', 'BenchConfig',
    'main', 'build_parser', 'EXIT_OK', 'EXIT_FAILURE', 'EXIT_USAGE',
]
