# helios - Conv/BN/FC classifier and its checkpoint format
# MIT License

from helios.model.architecture import ArchitectureSpec, ConvBlock, DEFAULT_CONV_BLOCKS
from helios.model.network import SolarNet, build, count_parameters
from helios.model.checkpoint import (
    ModelCheckpoint, save_checkpoint, load_checkpoint, validate_checkpoint_schema,
    FORMAT_VERSION, EXTENSION,
)

__all__ = [
    'ArchitectureSpec', 'ConvBlock', 'DEFAULT_CONV_BLOCKS',
    'SolarNet', 'build', 'count_parameters',
    'ModelCheckpoint', 'save_checkpoint', 'load_checkpoint', 'validate_checkpoint_schema',
    'FORMAT_VERSION', 'EXTENSION',
]
