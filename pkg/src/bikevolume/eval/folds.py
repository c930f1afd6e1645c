"""Train/test partitions keyed on counting stations."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..core import derive_seed


@dataclass(frozen=True)
class Fold:
    train_idx: np.ndarray
    test_idx: np.ndarray
    train_stations: frozenset = field(default_factory=frozenset)
    test_stations: frozenset = field(default_factory=frozenset)


@dataclass
class FoldPlan:
    folds: list[Fold]
    kind: str = "custom"

    def __iter__(self):
        return iter(self.folds)

    def __len__(self):
        return len(self.folds)

    def check_logo(self) -> None:
        """Raise if this is not a valid leave-one-station-out plan."""
        tested = [s for f in self.folds for s in f.test_stations]
        if len(tested) != len(set(tested)):
            raise AssertionError("a station is held out more than once")
        everyone = set(tested)
        for f in self.folds:
            if len(f.test_stations) != 1:
                raise AssertionError("LOGO folds hold out exactly one station")
            if f.train_stations & f.test_stations:
                raise AssertionError("train and test stations overlap")
            if f.train_stations != everyone - f.test_stations:
                raise AssertionError("a training set is missing another station")


def _make_fold(groups, train, test):
    return Fold(train, test, frozenset(groups[train].tolist()), frozenset(groups[test].tolist()))


def logo_plan(groups, eligible=None) -> FoldPlan:
    """One fold per eligible station: test on its rows, train on every other eligible station."""
    groups = np.asarray(groups, dtype=object)
    stations = sorted(set(groups.tolist()) if eligible is None else set(eligible))
    in_scope = np.isin(groups, stations)
    folds = []
    for s in stations:
        test = np.flatnonzero(groups == s)
        train = np.flatnonzero(in_scope & (groups != s))
        folds.append(_make_fold(groups, train, test))
    return FoldPlan(folds, kind="logo")


def group_kfold(groups, k: int, seed: int = 0) -> FoldPlan:
    """k folds with whole stations assigned to test folds after a seeded shuffle."""
    groups = np.asarray(groups, dtype=object)
    stations = sorted(set(groups.tolist()))
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > len(stations):
        raise ValueError(f"cannot form {k} station-grouped folds from {len(stations)} stations")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(stations))
    fold_of = {stations[j]: i % k for i, j in enumerate(perm)}
    assign = np.array([fold_of[s] for s in groups.tolist()])
    folds = []
    for i in range(k):
        folds.append(_make_fold(groups, np.flatnonzero(assign != i), np.flatnonzero(assign == i)))
    return FoldPlan(folds, kind="group_kfold")


def stratified_group_kfold(groups, k: int, seed: int = 0) -> FoldPlan:
    """Row-level k-fold where every station's rows are spread evenly over the folds.

    Per station the fold sizes differ by at most one; rotating each station's
    starting fold keeps total fold sizes balanced as well.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    groups = np.asarray(groups, dtype=object)
    stations = sorted(set(groups.tolist()))
    rng = np.random.default_rng(seed)
    assign = np.empty(groups.size, dtype=np.int64)
    offset = 0
    smallest = None
    for s in stations:
        rows = np.flatnonzero(groups == s)
        smallest = rows.size if smallest is None else min(smallest, rows.size)
        rows = rows[rng.permutation(rows.size)]
        assign[rows] = (offset + np.arange(rows.size)) % k
        offset = (offset + rows.size) % k
    if smallest is not None and smallest < k:
        warnings.warn(f"a station has only {smallest} rows for {k} folds; some folds miss it", stacklevel=2)
    folds = [_make_fold(groups, np.flatnonzero(assign != i), np.flatnonzero(assign == i)) for i in range(k)]
    return FoldPlan(folds, kind="stratified_kfold")


def repeated_stratified_kfold(groups, k: int = 5, n_repeats: int = 2, seed: int = 0) -> list[FoldPlan]:
    return [stratified_group_kfold(groups, k, derive_seed(seed, "repeat", r)) for r in range(n_repeats)]
