"""Regression learners sharing the scikit-learn estimator contract.

Every learner accepts ``sample_weight`` in ``fit`` and a ``random_state`` seed;
fitting twice with the same seed on the same data gives identical predictions.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import _check_sample_weight, check_is_fitted, validate_data

from .tree import Tree, grow_tree, predict_trees, presort


def _prepare_fit(est, X, y, sample_weight):
    X, y = validate_data(est, X, y, dtype=np.float64, y_numeric=True, ensure_min_features=0)
    w = _check_sample_weight(sample_weight, X, dtype=np.float64)
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("sample weights must be non-negative and not all zero")
    return np.ascontiguousarray(X), np.asarray(y, dtype=np.float64), w


def _prepare_predict(est, X):
    check_is_fitted(est)
    return np.ascontiguousarray(validate_data(est, X, dtype=np.float64, reset=False, ensure_min_features=0))


def _resolve_max_features(max_features, n_features):
    if max_features is None:
        return None
    if isinstance(max_features, str):
        if max_features == "sqrt":
            return max(1, int(math.sqrt(n_features)))
        if max_features == "log2":
            return max(1, int(math.log2(max(n_features, 1))))
        raise ValueError(f"unknown max_features {max_features!r}")
    if isinstance(max_features, float) and max_features <= 1.0:
        return max(1, int(round(max_features * n_features)))
    return min(int(max_features), n_features)


class BaselineMean(RegressorMixin, BaseEstimator):
    """Predicts the weighted training mean everywhere."""

    def __init__(self, random_state=0):
        self.random_state = random_state

    def fit(self, X, y, sample_weight=None):
        X, y, w = _prepare_fit(self, X, y, sample_weight)
        self.mean_ = float(np.sum(w * y) / np.sum(w))
        return self

    def predict(self, X):
        X = _prepare_predict(self, X)
        return np.full(X.shape[0], self.mean_)

    def _state(self):
        return {"mean": self.mean_}

    def _load_state(self, state):
        self.mean_ = state["mean"]


class LinearModel(RegressorMixin, BaseEstimator):
    """Weighted least squares with an intercept (minimum-norm when rank deficient)."""

    def __init__(self, random_state=0):
        self.random_state = random_state

    def fit(self, X, y, sample_weight=None):
        X, y, w = _prepare_fit(self, X, y, sample_weight)
        wsum = np.sum(w)
        x_mean = (w @ X) / wsum if X.shape[1] else np.zeros(0)
        y_mean = float(np.sum(w * y) / wsum)
        if X.shape[1]:
            sw = np.sqrt(w)
            coef, *_ = np.linalg.lstsq((X - x_mean) * sw[:, None], (y - y_mean) * sw, rcond=None)
        else:
            coef = np.zeros(0)
        self.coef_ = coef
        self.intercept_ = float(y_mean - x_mean @ coef)
        return self

    def predict(self, X):
        X = _prepare_predict(self, X)
        return X @ self.coef_ + self.intercept_

    def _state(self):
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_}

    def _load_state(self, state):
        self.coef_ = np.asarray(state["coef"], dtype=np.float64)
        self.intercept_ = state["intercept"]


class DecisionTree(RegressorMixin, BaseEstimator):
    """CART regression tree with weighted variance-reduction splits.

    ``min_samples_split`` and ``min_samples_leaf`` are compared against summed
    sample weight, so integer weights behave exactly like duplicated rows.
    """

    def __init__(self, max_depth=None, min_samples_split=2, min_samples_leaf=1,
                 max_features=None, random_state=0):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y, sample_weight=None):
        X, y, w = _prepare_fit(self, X, y, sample_weight)
        rng = np.random.default_rng(self.random_state)
        self.tree_ = grow_tree(
            X, -w * y, w,
            max_depth=self.max_depth,
            min_child_weight=self.min_samples_leaf,
            min_split_weight=self.min_samples_split,
            max_features=_resolve_max_features(self.max_features, X.shape[1]),
            rng=rng,
        )
        return self

    def predict(self, X):
        X = _prepare_predict(self, X)
        return self.tree_.predict(X)

    def _state(self):
        return {"trees": [self.tree_.to_dict()]}

    def _load_state(self, state):
        self.tree_ = Tree.from_dict(state["trees"][0])


class RandomForest(RegressorMixin, BaseEstimator):
    """Bagged CART trees; prediction is the mean over trees.

    Bootstrap draws are proportional to sample weight; each split looks at a
    fresh random subset of ``max_features`` columns.
    """

    def __init__(self, n_estimators=100, max_depth=None, min_samples_split=2, min_samples_leaf=1,
                 max_features=0.5, bootstrap=True, random_state=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state

    def fit(self, X, y, sample_weight=None):
        X, y, w = _prepare_fit(self, X, y, sample_weight)
        n = X.shape[0]
        presorted = presort(X)
        max_features = _resolve_max_features(self.max_features, X.shape[1])
        p = w / np.sum(w)
        trees = []
        for t in range(self.n_estimators):
            rng = np.random.default_rng([self.random_state, t])
            if self.bootstrap:
                tw = np.bincount(rng.choice(n, size=n, p=p), minlength=n).astype(np.float64)
            else:
                tw = w
            trees.append(grow_tree(
                X, -tw * y, tw, presorted=presorted, active=tw > 0,
                max_depth=self.max_depth,
                min_child_weight=self.min_samples_leaf,
                min_split_weight=self.min_samples_split,
                max_features=max_features, rng=rng,
            ))
        self.estimators_ = trees
        return self

    def predict(self, X):
        X = _prepare_predict(self, X)
        k = len(self.estimators_)
        return predict_trees(self.estimators_, np.full(k, 1.0 / k), X)

    def _state(self):
        return {"trees": [t.to_dict() for t in self.estimators_]}

    def _load_state(self, state):
        self.estimators_ = [Tree.from_dict(t) for t in state["trees"]]


class _Boosting(RegressorMixin, BaseEstimator):
    """Shared stagewise loop for squared-loss boosting."""

    def _tree_params(self):
        raise NotImplementedError

    def _stage_rng(self, t):
        return np.random.default_rng([self.random_state, t])

    def fit(self, X, y, sample_weight=None):
        X, y, w = _prepare_fit(self, X, y, sample_weight)
        n, n_feat = X.shape
        self.base_score_ = float(np.sum(w * y) / np.sum(w))
        presorted = presort(X)
        current = np.full(n, self.base_score_)
        trees = []
        for t in range(self.n_estimators):
            rng = self._stage_rng(t)
            active, columns = self._stage_sample(rng, n, n_feat)
            # squared loss: gradient w*(F - y), hessian w
            tree = grow_tree(X, w * (current - y), w, presorted=presorted, active=active, columns=columns,
                             rng=rng, **self._tree_params())
            trees.append(tree)
            current = current + self.learning_rate * predict_trees([tree], np.ones(1), X)
        self.estimators_ = trees
        return self

    def _stage_sample(self, rng, n, n_feat):
        return None, None

    def predict(self, X):
        X = _prepare_predict(self, X)
        k = len(self.estimators_)
        return self.base_score_ + predict_trees(self.estimators_, np.full(k, self.learning_rate), X)

    def staged_predict(self, X):
        X = _prepare_predict(self, X)
        out = np.full(X.shape[0], self.base_score_)
        yield out.copy()
        for tree in self.estimators_:
            out = out + self.learning_rate * predict_trees([tree], np.ones(1), X)
            yield out.copy()

    def _state(self):
        return {"base_score": self.base_score_, "trees": [t.to_dict() for t in self.estimators_]}

    def _load_state(self, state):
        self.base_score_ = state["base_score"]
        self.estimators_ = [Tree.from_dict(t) for t in state["trees"]]


class GradientBoosting(_Boosting):
    """Stagewise residual fitting with depth-limited CART trees and shrinkage."""

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3, min_samples_split=2,
                 min_samples_leaf=1, random_state=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state

    def _tree_params(self):
        return dict(max_depth=self.max_depth, min_child_weight=self.min_samples_leaf,
                    min_split_weight=self.min_samples_split)


class RegularizedBoosting(_Boosting):
    """Second-order boosting with L2 leaf penalty and split-gain pruning.

    Leaves take ``-G / (H + reg_lambda)``; a split survives only if
    ``0.5 * [GL²/(HL+λ) + GR²/(HR+λ) - G²/(H+λ)] - gamma > 0`` and both children
    carry at least ``min_child_weight`` hessian mass. ``subsample`` draws rows
    and ``colsample_bytree`` draws columns once per tree.
    """

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=6, min_child_weight=1.0,
                 reg_lambda=1.0, gamma=0.0, subsample=1.0, colsample_bytree=1.0, random_state=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_child_weight = min_child_weight
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.subsample = subsample
        self.colsample_bytree = colsample_bytree
        self.random_state = random_state

    def _tree_params(self):
        return dict(max_depth=self.max_depth, min_child_weight=self.min_child_weight,
                    reg_lambda=self.reg_lambda, gamma=self.gamma)

    def _stage_sample(self, rng, n, n_feat):
        active = None
        columns = None
        if self.subsample < 1.0:
            m = max(1, int(round(self.subsample * n)))
            active = np.zeros(n, dtype=bool)
            active[rng.choice(n, size=m, replace=False)] = True
        if self.colsample_bytree < 1.0 and n_feat:
            m = max(1, int(round(self.colsample_bytree * n_feat)))
            columns = np.sort(rng.choice(n_feat, size=m, replace=False))
        return active, columns

    def feature_gains(self) -> np.ndarray:
        """Total split gain per input column, summed over all trees."""
        check_is_fitted(self)
        out = np.zeros(self.n_features_in_)
        for tree in self.estimators_:
            internal = tree.feature >= 0
            np.add.at(out, tree.feature[internal], tree.gain[internal])
        return out


KINDS = {
    "baseline_mean": BaselineMean,
    "linear": LinearModel,
    "decision_tree": DecisionTree,
    "random_forest": RandomForest,
    "gradient_boosting": GradientBoosting,
    "regularized_boosting": RegularizedBoosting,
}

TREE_ENSEMBLES = ("decision_tree", "random_forest", "gradient_boosting", "regularized_boosting")


def make_estimator(kind: str, **params):
    try:
        cls = KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown estimator kind {kind!r}; choose from {sorted(KINDS)}") from None
    return cls(**params)


def kind_of(est) -> str:
    for name, cls in KINDS.items():
        if type(est) is cls:
            return name
    raise ValueError(f"{type(est).__name__} is not a registered learner")
