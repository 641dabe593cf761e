"""
Tree ensembles: random forest, SAMME AdaBoost and multinomial gradient boosting.

All three return an :class:`EnsembleModel` exposing ``predict``,
``predict_proba`` and ``score`` with scikit-learn semantics, so the
baselines can be scored and compared like any fitted classifier.
"""

import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional

import numpy as np
from joblib import Parallel, delayed
from sklearn.metrics import accuracy_score
from sklearn.utils.validation import check_array, check_X_y

from ..exceptions import BaselineError, ConfigurationError, DataFormatError
from ..logging import get_logger
from ..utils import max_threads
from .tree import DecisionTree, TreeParams, fit_regression_tree, fit_tree

logger = get_logger("helios.baselines.ensemble")

KINDS = ("rf", "adaboost", "gbm")
ENSEMBLE_FORMAT_VERSION = "1"
ENSEMBLE_EXTENSION = ".hsens"
PRIOR_FLOOR = 1e-12


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass(eq=False)
class EnsembleModel:
    """A fitted tree ensemble.

    Attributes:
        kind: "rf", "adaboost" or "gbm"
        n_classes: number of classes
        n_features: input width
        trees: rf/adaboost: one tree per member; gbm: ``n_classes`` trees per round,
            stored round-major
        weights: AdaBoost round weights (alpha); empty otherwise
        learning_rate: GBM shrinkage (nu); 1.0 otherwise
        prior: training class frequencies, the fallback of an empty ensemble
        seed: master seed
        hyperparameters: settings the ensemble was fitted with
    """
    kind: str
    n_classes: int
    n_features: int
    trees: List[DecisionTree] = field(default_factory=list)
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    learning_rate: float = 1.0
    prior: np.ndarray = field(default_factory=lambda: np.zeros(0))
    seed: int = 0
    hyperparameters: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BaselineError(f"ensemble kind must be one of {KINDS}, got {self.kind!r}")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.prior = np.asarray(self.prior, dtype=np.float64)
        if self.kind == "adaboost" and not np.isfinite(self.weights).all():
            raise BaselineError("AdaBoost round weights must be finite")
        if self.kind == "gbm" and len(self.trees) % self.n_classes:
            raise BaselineError("gradient boosting needs one tree per class per round")

    @property
    def classes_(self) -> np.ndarray:
        return np.arange(self.n_classes)

    @property
    def n_members(self) -> int:
        """Trees (rf, adaboost) or boosting rounds (gbm)."""
        return len(self.trees) // self.n_classes if self.kind == "gbm" else len(self.trees)

    @property
    def feature_importances_(self) -> np.ndarray:
        """Mean decrease in impurity, per-tree normalized then averaged and renormalized."""
        per_tree = []
        for tree in self.trees:
            total = tree.importances.sum()
            if total > 0:
                per_tree.append(tree.importances / total)
        if not per_tree:
            return np.zeros(self.n_features)
        mean = np.mean(per_tree, axis=0)
        return mean / mean.sum()

    def _check(self, X) -> np.ndarray:
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features:
            raise BaselineError(f"ensemble expects {self.n_features} features, got {X.shape[1]}")
        return X

    def _log_prior(self) -> np.ndarray:
        return np.log(np.maximum(self.prior, PRIOR_FLOOR))

    def staged_scores(self, X) -> Iterator[np.ndarray]:
        """Raw ensemble scores after each member (rf: averaged probabilities)."""
        X = self._check(X)
        n, k = X.shape[0], self.n_classes
        if self.kind == "rf":
            total = np.zeros((n, k))
            for m, tree in enumerate(self.trees, start=1):
                total += tree.predict_value(X)
                yield total / m
        elif self.kind == "adaboost":
            scores = np.zeros((n, k))
            for alpha, tree in zip(self.weights, self.trees):
                scores[np.arange(n), tree.predict(X)] += alpha
                yield scores.copy()
        else:
            scores = np.tile(self._log_prior(), (n, 1))
            for r in range(self.n_members):
                for c in range(k):
                    scores[:, c] += self.learning_rate * self.trees[r * k + c].predict_value(X)[:, 0]
                yield scores.copy()

    def _to_proba(self, scores: np.ndarray) -> np.ndarray:
        if self.kind == "rf":
            return scores
        if self.kind == "adaboost":
            return _softmax(scores / max(self.n_classes - 1, 1))
        return _softmax(scores)

    def predict_proba(self, X) -> np.ndarray:
        """Class probabilities; an empty ensemble returns the training prior for every row."""
        X = self._check(X)
        last = None
        for last in self.staged_scores(X):
            pass
        if last is None:
            return np.tile(self.prior, (X.shape[0], 1))
        return self._to_proba(last)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def score(self, X, y) -> float:
        return float(accuracy_score(y, self.predict(X)))

    def staged_error(self, X, y) -> np.ndarray:
        """Misclassification rate after each member."""
        y = np.asarray(y)
        return np.array([np.mean(np.argmax(s, axis=1) != y) for s in self.staged_scores(X)])

    def staged_deviance(self, X, y) -> np.ndarray:
        """Mean multinomial deviance (negative log-likelihood) after each member."""
        y = np.asarray(y, dtype=np.int64)
        rows = np.arange(y.shape[0])
        return np.array([
            -np.mean(np.log(np.maximum(self._to_proba(s)[rows, y], PRIOR_FLOOR)))
            for s in self.staged_scores(X)
        ])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": ENSEMBLE_FORMAT_VERSION,
            "kind": self.kind,
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "weights": self.weights.tolist(),
            "learning_rate": self.learning_rate,
            "prior": self.prior.tolist(),
            "seed": self.seed,
            "hyperparameters": self.hyperparameters,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> 'EnsembleModel':
        if payload.get("format_version") != ENSEMBLE_FORMAT_VERSION:
            raise DataFormatError(f"unsupported ensemble format version "
                                  f"{payload.get('format_version')!r}")
        return cls(
            kind=payload["kind"],
            n_classes=int(payload["n_classes"]),
            n_features=int(payload["n_features"]),
            trees=[DecisionTree.from_dict(t) for t in payload["trees"]],
            weights=np.asarray(payload["weights"], dtype=np.float64),
            learning_rate=float(payload["learning_rate"]),
            prior=np.asarray(payload["prior"], dtype=np.float64),
            seed=int(payload["seed"]),
            hyperparameters=dict(payload.get("hyperparameters", {})),
        )


def save_ensemble(model: EnsembleModel, path: str) -> str:
    if not path.endswith(ENSEMBLE_EXTENSION):
        path += ENSEMBLE_EXTENSION
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True)
    return path


def load_ensemble(path: str) -> EnsembleModel:
    """
    Raises:
        DataFormatError: Missing or malformed file, or wrong format version
    """
    try:
        with open(path) as fh:
            payload = json.load(fh)
        return EnsembleModel.from_dict(payload)
    except OSError as e:
        raise DataFormatError(f"cannot read ensemble {path}: {e}")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise DataFormatError(f"malformed ensemble file {path}: {e}")


def _prepare(X, y, n_classes: Optional[int]):
    try:
        X, y = check_X_y(X, y, dtype=np.float64)
    except ValueError as e:
        raise BaselineError(str(e))
    y = y.astype(np.int64)
    if y.min() < 0:
        raise BaselineError("class labels must be non-negative")
    n_classes = int(n_classes if n_classes is not None else y.max() + 1)
    if n_classes < 2 or y.max() >= n_classes:
        raise BaselineError(f"labels must lie in [0, {n_classes}) with at least 2 classes")
    prior = np.bincount(y, minlength=n_classes) / y.shape[0]
    return X, y, n_classes, prior


def _fit_forest_member(X: np.ndarray, y: np.ndarray, n_classes: int, params: TreeParams,
                       seed_seq: np.random.SeedSequence) -> DecisionTree:
    rng = np.random.default_rng(seed_seq)
    weights = None
    if params.bootstrap:
        draws = rng.integers(0, X.shape[0], X.shape[0])
        weights = np.bincount(draws, minlength=X.shape[0]).astype(np.float64)
    return fit_tree(X, y, weights, params, n_classes=n_classes, rng=rng)


def fit_random_forest(X, y, n_trees: int = 100, params: Optional[TreeParams] = None, seed: int = 0,
                      n_classes: Optional[int] = None, n_jobs: Optional[int] = None) -> EnsembleModel:
    """
    Fit a random forest of Gini trees.

    Each tree gets its own generator spawned from ``seed``, so the result does
    not depend on ``n_jobs``. Bootstrap resampling is expressed as integer
    row weights.

    Args:
        n_trees: number of trees, at least 1
        params: defaults to unlimited depth, sqrt features per node, bootstrap
        n_jobs: parallel workers (default ``HELIOS_THREADS`` or 1)

    Raises:
        BaselineError: n_trees < 1, or invalid data
    """
    if n_trees < 1:
        raise BaselineError(f"n_trees must be >= 1, got {n_trees}")
    params = params or TreeParams(max_depth=None, max_features="sqrt", bootstrap=True)
    X, y, n_classes, prior = _prepare(X, y, n_classes)
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    n_jobs = n_jobs or max_threads(1)
    trees = Parallel(n_jobs=n_jobs)(
        delayed(_fit_forest_member)(X, y, n_classes, params, s) for s in seeds
    )
    logger.debug("Fitted random forest", extra={"n_trees": n_trees, "n_jobs": n_jobs})
    return EnsembleModel("rf", n_classes, X.shape[1], list(trees), prior=prior, seed=seed,
                         hyperparameters={"n_trees": n_trees, **params.to_dict()})


def fit_adaboost(X, y, n_rounds: int = 100, seed: int = 0,
                 n_classes: Optional[int] = None) -> EnsembleModel:
    """
    SAMME boosting of depth-1 stumps.

    Round weight ``alpha = ln((1 - err) / err) + ln(K - 1)``. Boosting stops
    when a stump's weighted error reaches ``1 - 1/K`` (the stump is
    discarded) or 0 (the stump is kept with weight 1).

    Raises:
        BaselineError: n_rounds < 1, or invalid data
    """
    if n_rounds < 1:
        raise BaselineError(f"n_rounds must be >= 1, got {n_rounds}")
    X, y, n_classes, prior = _prepare(X, y, n_classes)
    stump = TreeParams(max_depth=1)
    sample_weight = np.full(X.shape[0], 1.0 / X.shape[0])
    trees: List[DecisionTree] = []
    alphas: List[float] = []
    stop_reason = "rounds"
    for _ in range(n_rounds):
        tree = fit_tree(X, y, sample_weight, stump, n_classes=n_classes)
        miss = tree.predict(X) != y
        err = float(sample_weight[miss].sum() / sample_weight.sum())
        if err <= 0.0:
            trees.append(tree)
            alphas.append(1.0)
            stop_reason = "perfect"
            break
        if err >= 1.0 - 1.0 / n_classes:
            stop_reason = "weak"
            break
        alpha = np.log((1.0 - err) / err) + np.log(n_classes - 1.0)
        trees.append(tree)
        alphas.append(float(alpha))
        sample_weight = sample_weight * np.exp(alpha * miss)
        sample_weight /= sample_weight.sum()
    logger.debug("Fitted AdaBoost", extra={"rounds": len(trees), "stop": stop_reason})
    return EnsembleModel("adaboost", n_classes, X.shape[1], trees, weights=np.asarray(alphas),
                         prior=prior, seed=seed,
                         hyperparameters={"n_rounds": n_rounds, "max_depth": 1,
                                          "stop_reason": stop_reason})


def fit_gradient_boosting(X, y, n_rounds: int = 100, learning_rate: float = 0.1, max_depth: int = 3,
                          seed: int = 0, n_classes: Optional[int] = None) -> EnsembleModel:
    """
    Multinomial-deviance gradient boosting.

    Scores start at the log class prior. Every round fits one regression tree
    per class to the softmax residuals ``onehot(y) - p`` and adds
    ``learning_rate`` times its leaf means.

    Raises:
        ConfigurationError: Negative learning rate
        BaselineError: n_rounds < 1, or invalid data
    """
    if learning_rate < 0:
        raise ConfigurationError(f"learning_rate must be >= 0, got {learning_rate}")
    if n_rounds < 1:
        raise BaselineError(f"n_rounds must be >= 1, got {n_rounds}")
    X, y, n_classes, prior = _prepare(X, y, n_classes)
    params = TreeParams(max_depth=max_depth)
    onehot = np.eye(n_classes)[y]
    scores = np.tile(np.log(np.maximum(prior, PRIOR_FLOOR)), (X.shape[0], 1))
    trees: List[DecisionTree] = []
    for _ in range(n_rounds):
        residual = onehot - _softmax(scores)
        for c in range(n_classes):
            tree = fit_regression_tree(X, residual[:, c], params=params)
            scores[:, c] += learning_rate * tree.predict_value(X)[:, 0]
            trees.append(tree)
    logger.debug("Fitted gradient boosting", extra={"rounds": n_rounds,
                                                    "learning_rate": learning_rate})
    return EnsembleModel("gbm", n_classes, X.shape[1], trees, learning_rate=learning_rate,
                         prior=prior, seed=seed,
                         hyperparameters={"n_rounds": n_rounds, "learning_rate": learning_rate,
                                          "max_depth": max_depth})
