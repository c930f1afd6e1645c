"""The full modelling chain: preprocessing, optional selection and tuning, then a learner."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .core import derive_seed
from .errors import ConfigError
from .learners.estimators import KINDS, make_estimator
from .learners.search import random_search
from .learners.selection import METHODS, FeatureSelector
from .learners.serialize import FORMAT_VERSION, dump_estimator, load_estimator
from .pipeline.preprocess import Preprocessor


@dataclass(frozen=True)
class ModelSpec:
    """What to fit: learner kind and parameters, optional selection and random search.

    ``selection``: ``{"method": ..., "k": ..., "threshold": ...}``.
    ``search``: ``{"space": {...}, "n_iter": 20, "k": 5}``; tuned inside every
    training split it is given.
    """

    kind: str = "regularized_boosting"
    params: dict = field(default_factory=dict)
    selection: dict | None = None
    search: dict | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown estimator kind {self.kind!r}; choose from {sorted(KINDS)}")
        if self.selection is not None and self.selection.get("method") not in METHODS:
            raise ConfigError(f"unknown selection method {self.selection.get('method')!r}")
        if self.search is not None and "space" not in self.search:
            raise ConfigError("a search needs a 'space'")

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        unknown = sorted(set(d) - {"kind", "params", "selection", "search"})
        if unknown:
            raise ConfigError(f"unknown model settings {unknown}")
        return cls(d.get("kind", "regularized_boosting"), dict(d.get("params") or {}), d.get("selection"),
                   d.get("search"))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params, "selection": self.selection, "search": self.search}

    def build(self, random_state: int = 0, workers: int = 1) -> "VolumeModel":
        return VolumeModel(kind=self.kind, params=dict(self.params), selection=self.selection, search=self.search,
                           random_state=random_state, workers=workers)


class VolumeModel(RegressorMixin, BaseEstimator):
    """Preprocess, select, tune and fit on training rows; predictions are clipped at zero.

    ``groups`` (station ids) drive the cross-station imputation and the grouped
    folds of selection and search.
    """

    def __init__(self, kind="regularized_boosting", params=None, selection=None, search=None,
                 corr_threshold=0.99, random_state=0, workers=1):
        self.kind = kind
        self.params = params
        self.selection = selection
        self.search = search
        self.corr_threshold = corr_threshold
        self.random_state = random_state
        self.workers = workers

    def fit(self, X, y, sample_weight=None, groups=None):
        X = X if isinstance(X, pd.DataFrame) else pd.DataFrame(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        if len(X) == 0:
            raise ValueError("cannot fit on an empty training set")
        if groups is None:
            groups = np.zeros(len(X), dtype=object)
        groups = np.asarray(groups, dtype=object)
        w = None if sample_weight is None else np.asarray(sample_weight, dtype=float)
        self.preprocessor_ = Preprocessor(corr_threshold=self.corr_threshold).fit(X, groups=groups)
        Z = self.preprocessor_.transform(X, groups=groups).to_numpy()
        if not np.all(np.isfinite(Z)) or not np.all(np.isfinite(y)):
            raise ValueError("training data contain non-finite values after preprocessing")
        support = np.ones(Z.shape[1], dtype=bool)
        if self.selection:
            sel = FeatureSelector(
                method=self.selection["method"],
                k=min(int(self.selection.get("k", 10)), Z.shape[1]),
                threshold=self.selection.get("threshold", "median"),
                random_state=derive_seed(self.random_state, "selection"),
            ).fit(Z, y, sample_weight=w, groups=groups)
            support = sel.get_support()
        self.support_ = support
        Zs = Z[:, support]
        params = dict(self.params or {})
        self.search_result_ = None
        if self.search:
            res = random_search(
                self.kind, self.search["space"], Zs, y, groups,
                n_iter=int(self.search.get("n_iter", 20)), k=int(self.search.get("k", 5)),
                seed=derive_seed(self.random_state, "search"), base_params=params, sample_weight=w,
                workers=self.workers,
            )
            params.update(res.best_params)
            self.search_result_ = res
        est = make_estimator(self.kind, **{**params, "random_state": self.random_state})
        est.fit(Zs, y, sample_weight=w)
        self.estimator_ = est
        self.columns_ = [c for c, keep in zip(self.preprocessor_.columns_, support) if keep]
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X, groups=None):
        check_is_fitted(self, "estimator_")
        X = X if isinstance(X, pd.DataFrame) else pd.DataFrame(np.asarray(X, dtype=float),
                                                              columns=self.preprocessor_.feature_names_in_)
        Z = self.preprocessor_.transform(X, groups=groups).to_numpy()[:, self.support_]
        return np.clip(self.estimator_.predict(Z), 0.0, None)

    @property
    def transform_log(self) -> list:
        check_is_fitted(self, "preprocessor_")
        return self.preprocessor_.log_

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        check_is_fitted(self, "estimator_")
        pre = self.preprocessor_
        return {
            "format_version": FORMAT_VERSION,
            "model": {"kind": self.kind, "params": self.params, "selection": self.selection,
                      "search": self.search, "corr_threshold": self.corr_threshold,
                      "random_state": self.random_state},
            "preprocessor": {
                "feature_names_in": [str(c) for c in pre.feature_names_in_],
                "columns": list(pre.columns_),
                "total_sum": pre.total_sum_.tolist(),
                "total_count": pre.total_count_.tolist(),
                "station_sum": {str(k): v.tolist() for k, v in pre.station_sum_.items()},
                "station_count": {str(k): v.tolist() for k, v in pre.station_count_.items()},
                "log": pre.log_,
            },
            "support": [bool(s) for s in self.support_],
            "columns": self.columns_,
            "search_result": None if self.search_result_ is None else self.search_result_.to_dict(),
            "estimator": dump_estimator(self.estimator_),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VolumeModel":
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {d.get('format_version')!r}")
        m = d["model"]
        obj = cls(kind=m["kind"], params=m["params"], selection=m["selection"], search=m["search"],
                  corr_threshold=m["corr_threshold"], random_state=m["random_state"])
        p = d["preprocessor"]
        pre = Preprocessor(corr_threshold=m["corr_threshold"])
        pre.feature_names_in_ = np.asarray(p["feature_names_in"], dtype=object)
        pre.n_features_in_ = len(pre.feature_names_in_)
        pre.columns_ = list(p["columns"])
        pre.total_sum_ = np.asarray(p["total_sum"], dtype=float)
        pre.total_count_ = np.asarray(p["total_count"], dtype=float)
        pre.station_sum_ = {k: np.asarray(v, dtype=float) for k, v in p["station_sum"].items()}
        pre.station_count_ = {k: np.asarray(v, dtype=float) for k, v in p["station_count"].items()}
        pre.log_ = p["log"]
        obj.preprocessor_ = pre
        obj.support_ = np.asarray(d["support"], dtype=bool)
        obj.columns_ = list(d["columns"])
        obj.search_result_ = None
        obj.estimator_ = load_estimator(d["estimator"])
        obj.n_features_in_ = pre.n_features_in_
        return obj

    def save(self, path, metadata: dict | None = None) -> None:
        d = self.to_dict()
        if metadata:
            d["metadata"] = metadata
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(d, fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "VolumeModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
