# helios - Feature ranking and selection
# MIT License

from helios.features.importance import (
    ImportanceReport, fit_importance, select_features, reduce_dataset,
    save_report, load_report,
)

__all__ = [
    'ImportanceReport', 'fit_importance', 'select_features', 'reduce_dataset',
    'save_report', 'load_report',
]
