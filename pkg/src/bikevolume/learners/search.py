"""Random hyperparameter search scored by station-grouped k-fold MAE."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import clone

from ..core import derive_seed
from ..errors import BikeVolumeError, ConfigError
from ..eval.folds import group_kfold
from ..eval.metrics import mae
from .estimators import make_estimator

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def sample(self, rng):
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class LogUniform:
    low: float
    high: float

    def sample(self, rng):
        return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))


@dataclass(frozen=True)
class IntUniform:
    low: int
    high: int  # inclusive

    def sample(self, rng):
        return int(rng.integers(self.low, self.high + 1))


@dataclass(frozen=True)
class Choice:
    values: tuple

    def __post_init__(self):
        if len(self.values) == 0:
            raise ConfigError("a categorical search dimension needs at least one value")

    def sample(self, rng):
        v = self.values[int(rng.integers(len(self.values)))]
        return v.item() if isinstance(v, np.generic) else v


_DISTS = {"uniform": Uniform, "log_uniform": LogUniform, "int_uniform": IntUniform}


def parse_space(spec: Mapping[str, Any]) -> dict:
    """Build a search space from config entries like ``{"max_depth": {"choice": [3, 4]}}``."""
    space = {}
    for name, entry in spec.items():
        if isinstance(entry, (Uniform, LogUniform, IntUniform, Choice)):
            space[name] = entry
            continue
        if not isinstance(entry, Mapping) or len(entry) != 1:
            raise ConfigError(f"search dimension {name!r} must be a single-key mapping", parameter=name)
        (dist, args), = entry.items()
        if dist == "choice":
            space[name] = Choice(tuple(args))
        elif dist in _DISTS:
            lo, hi = args
            if not lo <= hi:
                raise ConfigError(f"empty range for {name!r}", parameter=name)
            space[name] = _DISTS[dist](lo, hi)
        else:
            raise ConfigError(f"unknown distribution {dist!r} for {name!r}", parameter=name)
    if not space:
        raise ConfigError("search space is empty")
    return space


def sample_config(space: Mapping, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    return {name: space[name].sample(rng) for name in sorted(space)}


@dataclass
class Trial:
    index: int
    params: dict
    score: float | None
    status: str = "ok"
    error: str | None = None


@dataclass
class SearchResult:
    best_params: dict
    best_score: float
    trials: list[Trial] = field(default_factory=list)

    def to_dict(self):
        return {
            "best_params": self.best_params,
            "best_score": self.best_score,
            "trials": [t.__dict__ for t in self.trials],
        }


def cv_score(estimator, X, y, plan, sample_weight=None, metric=mae) -> float:
    """Mean of per-fold ``metric`` for ``estimator`` refit on each training split."""
    scores = []
    for fold in plan:
        est = clone(estimator)
        w = None if sample_weight is None else sample_weight[fold.train_idx]
        est.fit(X[fold.train_idx], y[fold.train_idx], sample_weight=w)
        pred = np.clip(est.predict(X[fold.test_idx]), 0.0, None)
        scores.append(metric(y[fold.test_idx], pred))
    return float(np.mean(scores))


def _run_trial(kind, base_params, space, i, seed, X, y, plan, sample_weight):
    params = sample_config(space, derive_seed(seed, "trial", i))
    try:
        est = make_estimator(kind, **{**base_params, **params, "random_state": derive_seed(seed, "fit", i)})
        return Trial(i, params, cv_score(est, X, y, plan, sample_weight))
    except Exception as exc:  # a bad configuration must not sink the search
        return Trial(i, params, None, status="failed", error=f"{type(exc).__name__}: {exc}")


def random_search(kind: str, space: Mapping, X, y, groups, *, n_iter: int = 20, k: int = 5,
                  seed: int = 0, base_params: Mapping | None = None, sample_weight=None,
                  workers: int = 1) -> SearchResult:
    if n_iter < 1:
        raise ConfigError("n_iter must be at least 1")
    space = parse_space(space)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n_groups = len(set(np.asarray(groups, dtype=object).tolist()))
    plan = group_kfold(groups, min(k, n_groups), seed=derive_seed(seed, "folds"))
    base_params = dict(base_params or {})
    trials = Parallel(n_jobs=workers)(
        delayed(_run_trial)(kind, base_params, space, i, seed, X, y, plan, sample_weight)
        for i in range(n_iter)
    )
    ok = [t for t in trials if t.status == "ok"]
    for t in trials:
        if t.status != "ok":
            log.warning("trial %d failed: %s", t.index, t.error)
    if not ok:
        raise BikeVolumeError("every random-search trial failed", code="search_failed")
    best = min(ok, key=lambda t: (t.score, t.index))
    return SearchResult(dict(best.params), best.score, list(trials))
