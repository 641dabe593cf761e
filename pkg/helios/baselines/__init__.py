# helios - Decision-tree ensemble baselines
# MIT License

from helios.baselines.tree import (
    DecisionTree, TreeParams, fit_tree, fit_regression_tree,
    gini_split_scores, mse_split_scores, TIE_TOLERANCE,
)
from helios.baselines.ensemble import (
    EnsembleModel, fit_random_forest, fit_adaboost, fit_gradient_boosting,
    save_ensemble, load_ensemble, KINDS, ENSEMBLE_EXTENSION,
)

__all__ = [
    'DecisionTree', 'TreeParams', 'fit_tree', 'fit_regression_tree',
    'gini_split_scores', 'mse_split_scores', 'TIE_TOLERANCE',
    'EnsembleModel', 'fit_random_forest', 'fit_adaboost', 'fit_gradient_boosting',
    'save_ensemble', 'load_ensemble', 'KINDS', 'ENSEMBLE_EXTENSION',
]
