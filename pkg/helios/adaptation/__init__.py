# helios - Source-free target adaptation
# MIT License

from helios.adaptation.config import AdaptConfig, SCOPES
from helios.adaptation.transfer import (
    apply_freeze, adapt, evaluate_checkpoint, evaluate_transfer, standardize_for
)

__all__ = [
    'AdaptConfig', 'SCOPES',
    'apply_freeze', 'adapt', 'evaluate_checkpoint', 'evaluate_transfer', 'standardize_for',
]
