"""
Greedy CART trees on weighted samples.

Classification trees minimize weighted Gini impurity and store a class
distribution in every node; regression trees minimize weighted squared error
and store the weighted mean. Candidate thresholds are midpoints between
consecutive distinct sorted values of a feature, a row goes left when its
value is ``<=`` the threshold.

Among candidates whose impurity is within ``TIE_TOLERANCE`` of the best, the
one with the lower feature index and then the lower threshold wins.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..exceptions import BaselineError, ConfigurationError

TIE_TOLERANCE = 1e-9
LEAF = -1


@dataclass
class TreeParams:
    """Growth limits.

    Attributes:
        max_depth: None for unlimited
        min_samples_leaf: minimum rows on each side of a split
        max_features: features drawn per node; None for all, "sqrt" or an int
        bootstrap: resample rows per tree (forests only)
    """
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    max_features: Union[None, str, int] = None
    bootstrap: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigurationError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ConfigurationError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if not (self.max_features is None or self.max_features == "sqrt"
                or (isinstance(self.max_features, int) and self.max_features >= 1)):
            raise ConfigurationError(f"max_features must be None, 'sqrt' or a positive int, "
                                     f"got {self.max_features!r}")

    def features_per_node(self, n_features: int) -> int:
        if self.max_features is None:
            return n_features
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(n_features)))
        return min(int(self.max_features), n_features)

    def to_dict(self) -> Dict[str, Any]:
        return {"max_depth": self.max_depth, "min_samples_leaf": self.min_samples_leaf,
                "max_features": self.max_features, "bootstrap": self.bootstrap}


@dataclass
class DecisionTree:
    """Array-encoded binary tree.

    Node ``i`` is a leaf when ``feature[i] == -1``; otherwise rows with
    ``x[feature[i]] <= threshold[i]`` go to ``left[i]`` and the rest to
    ``right[i]``. ``value[i]`` is the class distribution (classification) or
    a one-element mean (regression).
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    importances: np.ndarray
    n_features: int
    max_depth: Optional[int] = None

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature == LEAF

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise BaselineError(f"tree expects [n, {self.n_features}] input, got {X.shape}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.nonzero(active)[0]
            current = node[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            node[rows] = np.where(go_left, self.left[current], self.right[current])
            active[rows] = self.feature[node[rows]] != LEAF
        return node

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Class with the highest leaf probability (lower class on ties)."""
        return np.argmax(self.predict_value(X), axis=1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "importances": self.importances.tolist(),
            "n_features": self.n_features,
            "max_depth": self.max_depth,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> 'DecisionTree':
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int64),
            threshold=np.asarray(payload["threshold"], dtype=np.float64),
            left=np.asarray(payload["left"], dtype=np.int64),
            right=np.asarray(payload["right"], dtype=np.int64),
            value=np.asarray(payload["value"], dtype=np.float64),
            importances=np.asarray(payload["importances"], dtype=np.float64),
            n_features=int(payload["n_features"]),
            max_depth=payload.get("max_depth"),
        )


def _candidate_positions(xs: np.ndarray, min_leaf: int) -> np.ndarray:
    """Split positions i (left = sorted rows [0..i]) between distinct values."""
    n = xs.shape[0]
    pos = np.nonzero(xs[:-1] < xs[1:])[0]
    return pos[(pos + 1 >= min_leaf) & (n - pos - 1 >= min_leaf)]


def _midpoints(xs: np.ndarray, pos: np.ndarray) -> np.ndarray:
    lo, hi = xs[pos], xs[pos + 1]
    mid = (lo + hi) / 2.0
    # adjacent floats: keep the threshold strictly below the upper value
    return np.where(mid >= hi, lo, mid)


def gini_split_scores(xf: np.ndarray, counts_w: np.ndarray, min_leaf: int = 1):
    """
    Weighted Gini impurity of every admissible threshold on one feature.

    Args:
        xf: feature values of the node's rows
        counts_w: [n, n_classes] per-row weight placed on its class
        min_leaf: minimum rows per side

    Returns:
        (impurities, thresholds, left_counts) or None when no threshold is admissible
    """
    order = np.argsort(xf, kind="stable")
    xs = xf[order]
    pos = _candidate_positions(xs, min_leaf)
    if pos.size == 0:
        return None
    cum = np.cumsum(counts_w[order], axis=0)
    total = cum[-1]
    left = cum[pos]
    right = total - left
    w_left = left.sum(axis=1)
    w_right = right.sum(axis=1)
    w_total = w_left + w_right
    with np.errstate(divide="ignore", invalid="ignore"):
        g_left = np.where(w_left > 0, w_left - (left ** 2).sum(axis=1) / w_left, 0.0)
        g_right = np.where(w_right > 0, w_right - (right ** 2).sum(axis=1) / w_right, 0.0)
    return (g_left + g_right) / w_total, _midpoints(xs, pos), left


def mse_split_scores(xf: np.ndarray, target: np.ndarray, weights: np.ndarray, min_leaf: int = 1):
    """Weighted mean squared error of every admissible threshold on one feature."""
    order = np.argsort(xf, kind="stable")
    xs = xf[order]
    pos = _candidate_positions(xs, min_leaf)
    if pos.size == 0:
        return None
    w = weights[order]
    wt = w * target[order]
    cw, cs, cq = np.cumsum(w), np.cumsum(wt), np.cumsum(wt * target[order])
    w_left, s_left, q_left = cw[pos], cs[pos], cq[pos]
    w_right, s_right, q_right = cw[-1] - w_left, cs[-1] - s_left, cq[-1] - q_left
    with np.errstate(divide="ignore", invalid="ignore"):
        sse_left = np.where(w_left > 0, q_left - s_left ** 2 / w_left, 0.0)
        sse_right = np.where(w_right > 0, q_right - s_right ** 2 / w_right, 0.0)
    return (sse_left + sse_right) / cw[-1], _midpoints(xs, pos), None


def _node_gini(counts: np.ndarray) -> float:
    w = counts.sum()
    return 0.0 if w <= 0 else float(1.0 - ((counts / w) ** 2).sum())


def _node_mse(target: np.ndarray, weights: np.ndarray) -> float:
    w = weights.sum()
    if w <= 0:
        return 0.0
    mean = np.dot(weights, target) / w
    return float(np.dot(weights, (target - mean) ** 2) / w)


def _check_inputs(X, y, weights) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise BaselineError(f"need a non-empty 2-D feature matrix, got shape {X.shape}")
    if y.shape[0] != X.shape[0]:
        raise BaselineError(f"{X.shape[0]} rows but {y.shape[0]} targets")
    if not np.isfinite(X).all():
        raise BaselineError("features contain NaN or Inf")
    weights = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    if weights.shape != (X.shape[0],):
        raise BaselineError(f"weights must have shape ({X.shape[0]},), got {weights.shape}")
    if (weights < 0).any() or not weights.sum() > 0:
        raise BaselineError("weights must be non-negative and not all zero")
    keep = weights > 0
    return X[keep], y[keep], weights[keep]


def _pick_split(scored: Dict[int, Tuple[np.ndarray, np.ndarray]]) -> Tuple[int, float]:
    """Lowest (feature, threshold) whose impurity is within tolerance of the overall minimum."""
    best = min(float(imp.min()) for imp, _ in scored.values())
    for f in sorted(scored):
        imp, thr = scored[f]
        hits = np.nonzero(imp <= best + TIE_TOLERANCE)[0]
        if hits.size:
            return f, float(thr[hits[0]])
    raise BaselineError("no split candidate reached the minimum impurity")


def _grow(X: np.ndarray, weights: np.ndarray, params: TreeParams, rng: Optional[np.random.Generator],
          score_fn, impurity_fn, leaf_fn, is_pure_fn) -> DecisionTree:
    n_features = X.shape[1]
    k = params.features_per_node(n_features)
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    value: List[np.ndarray] = []
    importances = np.zeros(n_features)
    total_weight = weights.sum()

    def new_node(rows):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(leaf_fn(rows))
        return len(feature) - 1

    stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if rows.size < 2 * params.min_samples_leaf or is_pure_fn(rows):
            continue

        if k < n_features and rng is not None:
            order = rng.permutation(n_features)
        else:
            order = np.arange(n_features)
        # draw until k features were examined and at least one of them can split
        scored = {}
        for visited, f in enumerate(order, start=1):
            result = score_fn(X[rows, f], rows)
            if result is not None:
                scored[int(f)] = result
            if visited >= k and scored:
                break
        if not scored:
            continue
        f, t = _pick_split(scored)
        go_left = X[rows, f] <= t
        left_rows, right_rows = rows[go_left], rows[~go_left]
        w_node, w_l, w_r = weights[rows].sum(), weights[left_rows].sum(), weights[right_rows].sum()
        importances[f] += (w_node * impurity_fn(rows) - w_l * impurity_fn(left_rows)
                           - w_r * impurity_fn(right_rows)) / total_weight
        feature[node], threshold[node] = f, t
        left_id = new_node(left_rows)
        right_id = new_node(right_rows)
        left[node], right[node] = left_id, right_id
        stack.append((right_id, right_rows, depth + 1))
        stack.append((left_id, left_rows, depth + 1))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.vstack(value),
        importances=np.maximum(importances, 0.0),
        n_features=n_features,
        max_depth=params.max_depth,
    )


def fit_tree(X: np.ndarray, y: np.ndarray, weights: Optional[np.ndarray] = None,
             params: Optional[TreeParams] = None, n_classes: Optional[int] = None,
             rng: Optional[np.random.Generator] = None) -> DecisionTree:
    """
    Grow a classification tree minimizing weighted Gini impurity.

    A node is split while it is impure, shallower than ``max_depth`` and has an
    admissible threshold; rows that are identical on every feature stay
    together in a leaf whose distribution favours the weighted majority class.

    Args:
        X: [n, n_features] inputs
        y: class indices
        weights: non-negative row weights (default all ones); zero-weight rows are ignored
        params: growth limits
        n_classes: width of the leaf distributions (default ``max(y) + 1``)
        rng: draws the per-node feature subsets when ``params.max_features`` limits them

    Raises:
        BaselineError: Empty input, shape mismatch, bad weights or labels
    """
    params = params or TreeParams()
    X, y, weights = _check_inputs(X, y, weights)
    y = y.astype(np.int64)
    if y.min() < 0:
        raise BaselineError("class labels must be non-negative")
    n_classes = int(n_classes if n_classes is not None else y.max() + 1)
    if y.max() >= n_classes:
        raise BaselineError(f"labels must lie in [0, {n_classes})")
    counts_w = np.zeros((y.shape[0], n_classes))
    counts_w[np.arange(y.shape[0]), y] = weights

    def class_counts(rows):
        return counts_w[rows].sum(axis=0)

    def leaf(rows):
        counts = class_counts(rows)
        return counts / counts.sum()

    def score(xf, rows):
        scored = gini_split_scores(xf, counts_w[rows], params.min_samples_leaf)
        return None if scored is None else scored[:2]

    return _grow(X, weights, params, rng, score,
                 impurity_fn=lambda rows: _node_gini(class_counts(rows)),
                 leaf_fn=leaf,
                 is_pure_fn=lambda rows: np.count_nonzero(class_counts(rows)) <= 1)


def fit_regression_tree(X: np.ndarray, target: np.ndarray, weights: Optional[np.ndarray] = None,
                        params: Optional[TreeParams] = None,
                        rng: Optional[np.random.Generator] = None) -> DecisionTree:
    """Grow a regression tree minimizing weighted squared error; leaves hold the weighted mean."""
    params = params or TreeParams()
    X, target, weights = _check_inputs(X, target, weights)
    target = target.astype(np.float64)

    def leaf(rows):
        return np.array([np.dot(weights[rows], target[rows]) / weights[rows].sum()])

    def score(xf, rows):
        scored = mse_split_scores(xf, target[rows], weights[rows], params.min_samples_leaf)
        return None if scored is None else scored[:2]

    return _grow(X, weights, params, rng, score,
                 impurity_fn=lambda rows: _node_mse(target[rows], weights[rows]),
                 leaf_fn=leaf,
                 is_pure_fn=lambda rows: np.ptp(target[rows]) == 0.0)
