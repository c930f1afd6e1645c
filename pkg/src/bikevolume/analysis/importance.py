"""Grouped permutation importance over repeated station-stratified folds."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ..core import derive_seed
from ..errors import ConfigError
from ..eval.folds import repeated_stratified_kfold
from ..eval.metrics import get_metric
from ..model import ModelSpec
from ..pipeline.table import FeatureTable

_CHUNK_ROWS = 200_000


@dataclass
class GroupImportance:
    """Mean error increase per feature group when its columns are shuffled in the test rows."""

    metric: str
    gains: dict  # group -> per-fold gains (list)
    baseline: list  # per-fold unpermuted error
    n_permutations: int
    fold_ids: list = field(default_factory=list)

    @property
    def n_folds(self) -> int:
        return len(self.baseline)

    def mean(self, group) -> float:
        return float(np.mean(self.gains[group]))

    def half_width(self, group) -> float:
        g = np.asarray(self.gains[group], dtype=float)
        return float(1.96 * g.std(ddof=1) / np.sqrt(g.size)) if g.size > 1 else 0.0

    def ranking(self) -> list[str]:
        return sorted(self.gains, key=lambda g: (-self.mean(g), g))

    def frame(self) -> pd.DataFrame:
        rows = []
        for g in self.ranking():
            m, h = self.mean(g), self.half_width(g)
            rows.append({"group": g, "mean": m, "ci_low": m - h, "ci_high": m + h, "ci_half_width": h})
        return pd.DataFrame(rows, columns=["group", "mean", "ci_low", "ci_high", "ci_half_width"])

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "n_folds": self.n_folds,
            "n_permutations": self.n_permutations,
            "baseline_error": float(np.mean(self.baseline)) if self.baseline else None,
            "groups": {g: {"mean": self.mean(g), "ci_half_width": self.half_width(g), "per_fold": self.gains[g]}
                       for g in self.ranking()},
            "folds": self.fold_ids,
        }

    def to_json(self, path, metadata: dict | None = None) -> None:
        obj = self.to_dict()
        if metadata:
            obj["metadata"] = metadata
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path) -> None:
        self.frame().to_csv(path, index=False, lineterminator="\n")


def _fold_gains(table: FeatureTable, spec: ModelSpec, train_idx, test_idx, groups, n_permutations, metric,
                seed, fold_key):
    score = get_metric(metric)
    train = table.take(train_idx)
    test = table.take(test_idx)
    model = spec.build(random_state=derive_seed(seed, "model", *fold_key))
    model.fit(train.X, train.y, groups=train.stations)
    X = test.X.reset_index(drop=True)
    y = test.y
    n = len(X)
    base = score(y, model.predict(X, groups=test.stations))
    gains = {}
    per_chunk = max(1, _CHUNK_ROWS // max(n, 1))
    for g in groups:
        cols = table.columns_of(g)
        block = X[cols].to_numpy()
        errors = []
        for start in range(0, n_permutations, per_chunk):
            reps = range(start, min(start + per_chunk, n_permutations))
            stacked = pd.concat([X] * len(reps), ignore_index=True)
            shuffled = np.concatenate([
                block[np.random.default_rng(derive_seed(seed, "perm", *fold_key, g, p)).permutation(n)]
                for p in reps
            ])
            # one shared row order per replicate keeps the group's columns jointly intact
            stacked[cols] = shuffled
            pred = model.predict(stacked, groups=np.tile(test.stations, len(reps)))
            errors += [score(y, pred[i * n:(i + 1) * n]) for i in range(len(reps))]
        gains[g] = float(np.mean(np.asarray(errors) - base))
    return base, gains


def grouped_permutation_importance(table: FeatureTable, spec: ModelSpec, metric: str = "smape",
                                   n_permutations: int = 100, k: int = 5, n_repeats: int = 2, seed: int = 0,
                                   groups=None, workers: int = 1) -> GroupImportance:
    """Fit on each training split, then shuffle one group at a time in the test rows.

    A group's score is the mean over folds of (mean permuted error - unpermuted
    error), in the metric's units.
    """
    if n_permutations < 1:
        raise ConfigError("n_permutations must be at least 1")
    groups = list(groups) if groups is not None else sorted(table.group_set())
    for g in groups:
        if not table.columns_of(g):
            raise ConfigError(f"feature group {g!r} has no columns", group=g)
    plans = repeated_stratified_kfold(table.stations, k=k, n_repeats=n_repeats, seed=derive_seed(seed, "folds"))
    jobs = [(r, f, fold) for r, plan in enumerate(plans) for f, fold in enumerate(plan.folds)]
    results = Parallel(n_jobs=workers)(
        delayed(_fold_gains)(table, spec, fold.train_idx, fold.test_idx, groups, n_permutations, metric, seed,
                             (r, f))
        for r, f, fold in jobs
    )
    gains = {g: [res[1][g] for res in results] for g in groups}
    return GroupImportance(metric, gains, [res[0] for res in results], n_permutations,
                           [{"repeat": r, "fold": f, "n_test": int(len(fold.test_idx))} for r, f, fold in jobs])
