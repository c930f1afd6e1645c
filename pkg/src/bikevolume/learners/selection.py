"""Feature selection: univariate k-best, linear RFE, boosting gain, sequential forward."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import _check_sample_weight, check_is_fitted, validate_data

from ..core import derive_seed
from ..eval.folds import group_kfold
from .estimators import LinearModel, RegularizedBoosting
from .search import cv_score

METHODS = ("univariate_kbest", "rfe_linear", "from_model_boosting", "sequential_forward")


def pearson_abs(X, y) -> np.ndarray:
    """|Pearson r| of every column with ``y``; constant columns score 0."""
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    den = np.sqrt((Xc ** 2).sum(axis=0) * (yc ** 2).sum())
    num = Xc.T @ yc
    return np.abs(np.divide(num, den, out=np.zeros_like(num), where=den > 0))


def rank_kbest(X, y, k) -> np.ndarray:
    scores = pearson_abs(X, y)
    # stable sort on -score: equal scores keep the lower column index
    return np.sort(np.argsort(-scores, kind="stable")[:k])


def rfe_linear(X, y, k, sample_weight=None) -> np.ndarray:
    keep = list(range(X.shape[1]))
    while len(keep) > k:
        model = LinearModel().fit(X[:, keep], y, sample_weight=sample_weight)
        std = X[:, keep].std(axis=0)
        keep.pop(int(np.argmin(np.abs(model.coef_ * std))))
    return np.asarray(keep, dtype=int)


def from_model_boosting(X, y, threshold="median", sample_weight=None, random_state=0, **params) -> np.ndarray:
    booster = RegularizedBoosting(random_state=random_state, **params).fit(X, y, sample_weight=sample_weight)
    gains = booster.feature_gains()
    cut = float(np.median(gains)) if threshold == "median" else float(threshold)
    return np.flatnonzero(gains >= cut)


def sequential_forward(X, y, k, groups, estimator=None, cv=5, sample_weight=None, random_state=0):
    """Greedily add the column that lowers grouped-CV MAE most; stop at k or on no gain."""
    estimator = LinearModel() if estimator is None else estimator
    n_groups = len(set(np.asarray(groups, dtype=object).tolist()))
    plan = group_kfold(groups, min(cv, n_groups), seed=derive_seed(random_state, "sfs"))
    chosen: list[int] = []
    current = cv_score(estimator, X[:, []], y, plan, sample_weight)
    while len(chosen) < k:
        best_col, best_score = None, current
        for c in range(X.shape[1]):
            if c in chosen:
                continue
            score = cv_score(estimator, X[:, chosen + [c]], y, plan, sample_weight)
            if score < best_score:
                best_col, best_score = c, score
        if best_col is None:
            break
        chosen.append(best_col)
        current = best_score
    return np.sort(np.asarray(chosen, dtype=int))


class FeatureSelector(SelectorMixin, BaseEstimator):
    """Column selector over one of :data:`METHODS`.

    ``k`` bounds the column count for k-best, RFE and sequential selection;
    ``threshold`` (``"median"`` or a number) applies to boosting gains.
    """

    def __init__(self, method="univariate_kbest", k=10, threshold="median", estimator=None, cv=5,
                 random_state=0):
        self.method = method
        self.k = k
        self.threshold = threshold
        self.estimator = estimator
        self.cv = cv
        self.random_state = random_state

    def fit(self, X, y, sample_weight=None, groups=None):
        X, y = validate_data(self, X, y, dtype=np.float64, y_numeric=True, ensure_min_features=0)
        y = np.asarray(y, dtype=np.float64)
        n_feat = X.shape[1]
        if self.method not in METHODS:
            raise ValueError(f"unknown selection method {self.method!r}; choose from {METHODS}")
        if np.ptp(y) == 0:
            raise ValueError("target is constant; no feature ranking is defined")
        k = n_feat if self.k is None else int(self.k)
        if self.method != "from_model_boosting" and not 0 <= k <= n_feat:
            raise ValueError(f"k={k} exceeds the {n_feat} available columns")
        w = None if sample_weight is None else _check_sample_weight(sample_weight, X)
        if self.method == "univariate_kbest":
            keep = rank_kbest(X, y, k)
        elif self.method == "rfe_linear":
            keep = rfe_linear(X, y, k, w)
        elif self.method == "from_model_boosting":
            keep = from_model_boosting(X, y, self.threshold, w, self.random_state)
        else:
            grp = np.arange(X.shape[0]) if groups is None else np.asarray(groups, dtype=object)
            keep = sequential_forward(X, y, k, grp, self.estimator, self.cv, w, self.random_state)
        mask = np.zeros(n_feat, dtype=bool)
        mask[keep] = True
        self.support_ = mask
        return self

    def _get_support_mask(self):
        check_is_fitted(self)
        return self.support_
