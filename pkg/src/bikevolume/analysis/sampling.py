"""Simulated short-term count campaigns at held-out long-term stations.

For every repetition and held-out station a campaign collects ``d`` sample
days (``d = 0 .. max_days``, each day set extending the previous one); the
station's remaining rows are the test set. Three ways to use the samples:

* ``full_city``: train on every other long-term station plus the samples, the
  samples holding ``weight_share`` of the total sample-weight mass;
* ``location_specific``: train on the samples alone;
* ``sample_mean``: predict the mean of the sampled counts.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ..core import derive_seed
from ..errors import ConfigError, DataError
from ..eval.metrics import mae, smape
from ..eval.protocols import DEFAULT_MIN_AADB_ROWS, eligible_long_term, fold_seed, score_by_station
from ..eval.report import EvaluationReport, StationScore
from ..model import ModelSpec
from ..pipeline.table import FeatureTable

log = logging.getLogger(__name__)

MAX_BLOCK_ATTEMPTS = 1000


class Strategy(str, enum.Enum):
    ONE_DAY = "one_day"
    THREE_DAY = "three_day"
    SEVEN_DAY = "seven_day"

    @property
    def block(self) -> int:
        return {"one_day": 1, "three_day": 3, "seven_day": 7}[self.value]


class Scenario(str, enum.Enum):
    FULL_CITY = "full_city"
    LOCATION_SPECIFIC = "location_specific"
    SAMPLE_MEAN = "sample_mean"


def sample_dates(available, strategy: Strategy, n_days: int, rng) -> list | None:
    """Collection order of ``n_days`` dates; prefixes give the nested sample sets.

    One-day sampling permutes the available dates. Block strategies place
    non-overlapping runs of consecutive available dates at random, redrawing a
    run that would overlap, and cut the last run short. ``None`` when the
    dates cannot be found.
    """
    strategy = Strategy(strategy)
    days = pd.DatetimeIndex(sorted(pd.to_datetime(pd.Series(list(available))).unique()))
    if n_days == 0:
        return []
    if len(days) < n_days:
        return None
    if strategy is Strategy.ONE_DAY:
        return list(days[rng.permutation(len(days))[:n_days]])
    L = strategy.block
    ordinal = days.map(lambda d: d.toordinal()).to_numpy()
    # a run may start at i when the next L-1 available dates are consecutive days
    starts = [i for i in range(len(days) - L + 1) if ordinal[i + L - 1] - ordinal[i] == L - 1]
    if not starts:
        return None
    taken = np.zeros(len(days), dtype=bool)
    out = []
    for _ in range(math.ceil(n_days / L)):
        for _attempt in range(MAX_BLOCK_ATTEMPTS):
            i = starts[int(rng.integers(len(starts)))]
            if not taken[i:i + L].any():
                break
        else:
            return None
        taken[i:i + L] = True
        out.extend(days[i:i + L])
    return out[:n_days]


def full_city_weights(n_other: int, n_sampled: int, weight_share: float) -> np.ndarray | None:
    """Weights with mean 1 giving the sampled rows ``weight_share`` of the total mass.

    Other rows come first. ``None`` (unweighted) without samples.
    """
    if n_sampled == 0:
        return None
    n = n_other + n_sampled
    w = np.empty(n)
    w[:n_other] = (1.0 - weight_share) * n / n_other if n_other else 0.0
    w[n_other:] = weight_share * n / n_sampled
    return w


@dataclass
class SamplingCurve:
    strategy: str
    scenario: str
    days: list
    errors: dict  # metric -> array[reps, stations, days] (NaN where undefined)
    stations: list
    weight_share: float
    skipped: list = field(default_factory=list)
    weight_mass: list = field(default_factory=list)  # sampled share of the weight mass per fit

    @property
    def reps(self) -> int:
        return next(iter(self.errors.values())).shape[0]

    def rep_means(self, metric: str = "smape") -> np.ndarray:
        """array[reps, days]: mean over stations per repetition."""
        with np.errstate(all="ignore"):
            return np.nanmean(self.errors[metric], axis=1) if len(self.stations) else np.full(
                (self.reps, len(self.days)), np.nan)

    def mean(self, metric: str = "smape") -> np.ndarray:
        return self.rep_means(metric).mean(axis=0)

    def half_width(self, metric: str = "smape") -> np.ndarray:
        m = self.rep_means(metric)
        if m.shape[0] < 2:
            return np.zeros(m.shape[1])
        return 1.96 * m.std(axis=0, ddof=1) / np.sqrt(m.shape[0])

    def at(self, d: int, metric: str = "smape") -> tuple[float, float]:
        j = self.days.index(d)
        return float(self.mean(metric)[j]), float(self.half_width(metric)[j])

    def frame(self) -> pd.DataFrame:
        out = {"days": self.days}
        for metric in sorted(self.errors):
            m, h = self.mean(metric), self.half_width(metric)
            out[f"{metric}_mean"] = m
            out[f"{metric}_ci_low"] = m - h
            out[f"{metric}_ci_high"] = m + h
        df = pd.DataFrame(out)
        df.insert(0, "scenario", self.scenario)
        df.insert(0, "strategy", self.strategy)
        return df

    def to_dict(self) -> dict:
        def clean(a):
            return [None if not np.isfinite(v) else float(v) for v in np.asarray(a, dtype=float).ravel()]

        return {
            "strategy": self.strategy,
            "scenario": self.scenario,
            "days": list(self.days),
            "reps": self.reps,
            "weight_share": self.weight_share,
            "stations": list(self.stations),
            "skipped": self.skipped,
            "curve": {m: {"mean": clean(self.mean(m)), "ci_half_width": clean(self.half_width(m))}
                      for m in sorted(self.errors)},
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


def _station_rep(table: FeatureTable, spec: ModelSpec, station, rep: int, others: np.ndarray, strategy: Strategy,
                 scenario: Scenario, days: list, weight_share: float, seed: int, baseline0=None):
    """Errors for one (station, repetition) over every requested day count."""
    own = np.flatnonzero(table.stations == station)
    own_dates = pd.DatetimeIndex(table.dates.iloc[own])
    rng = np.random.default_rng(derive_seed(seed, "sampling", strategy.value, str(station), rep))
    order = sample_dates(own_dates, strategy, max(days), rng)
    if order is None:
        return None
    pos_of = {d.value: i for i, d in enumerate(own_dates)}
    order_rows = np.array([own[pos_of[pd.Timestamp(d).value]] for d in order], dtype=np.int64)
    res = {"smape": [], "mae": [], "daily": [], "mass": []}
    for d in days:
        sampled = order_rows[:d]
        test = np.setdiff1d(own, sampled)
        y_test = table.y[test]
        if d == 0 and baseline0 is not None:
            pred = baseline0[np.searchsorted(own, test)]
        elif scenario is Scenario.SAMPLE_MEAN:
            pred = np.full(len(test), table.y[sampled].mean()) if d else None
        elif scenario is Scenario.LOCATION_SPECIFIC:
            if d == 0:
                pred = None
            else:
                model = spec.build(random_state=fold_seed(seed, station))
                tr = table.take(sampled)
                model.fit(tr.X, tr.y, groups=tr.stations)
                te = table.take(test)
                pred = model.predict(te.X, groups=te.stations)
        else:
            train = np.concatenate([others, sampled])
            w = full_city_weights(len(others), d, weight_share)
            if w is not None:
                res["mass"].append(float(w[len(others):].sum() / w.sum()))
            model = spec.build(random_state=fold_seed(seed, station))
            tr = table.take(train)
            model.fit(tr.X, tr.y, sample_weight=w, groups=tr.stations)
            te = table.take(test)
            pred = model.predict(te.X, groups=te.stations)
        if pred is None:
            res["smape"].append(np.nan)
            res["mae"].append(np.nan)
            res["daily"].append(None)
        else:
            pred = np.clip(np.asarray(pred, dtype=float), 0.0, None)
            res["smape"].append(smape(y_test, pred))
            res["mae"].append(mae(y_test, pred))
            res["daily"].append((test, pred))
    return res


def _participants(table: FeatureTable, max_days: int, min_rows: int | None):
    stations, excluded = eligible_long_term(table)
    need = (max_days + 30) if min_rows is None else int(min_rows)
    counts = pd.Series(table.stations).value_counts()
    ok = [s for s in stations if counts.get(s, 0) >= need]
    skipped = excluded + [{"station_id": s, "reason": f"fewer than {need} rows"} for s in stations if s not in ok]
    return stations, ok, skipped


def _run(table, spec, strategy, scenario, days, reps, weight_share, seed, min_rows, workers):
    strategy, scenario = Strategy(strategy), Scenario(scenario)
    days = sorted(set(int(d) for d in days))
    if not days or days[0] < 0:
        raise ConfigError("day counts must be non-negative")
    if not 0.0 < weight_share < 1.0:
        raise ConfigError("weight_share must lie strictly between 0 and 1")
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    eligible, stations, skipped = _participants(table, max(days), min_rows)
    if not stations:
        raise DataError("no station has enough rows for the sampling simulation", code="too_few_rows")
    in_scope = np.isin(table.stations, eligible)
    baseline0 = {}
    if 0 in days and scenario is Scenario.FULL_CITY:
        # with no samples every repetition is the plain leave-one-out fit
        def zero_fit(s):
            own = np.flatnonzero(table.stations == s)
            others = np.flatnonzero(in_scope & (table.stations != s))
            model = spec.build(random_state=fold_seed(seed, s))
            tr = table.take(others)
            model.fit(tr.X, tr.y, groups=tr.stations)
            te = table.take(own)
            return model.predict(te.X, groups=te.stations)

        preds = Parallel(n_jobs=workers)(delayed(zero_fit)(s) for s in stations)
        baseline0 = dict(zip(stations, preds))
    jobs = [(r, s) for r in range(reps) for s in stations]
    results = Parallel(n_jobs=workers)(
        delayed(_station_rep)(
            table, spec, s, r, np.flatnonzero(in_scope & (table.stations != s)), strategy, scenario, days,
            weight_share, seed, baseline0.get(s),
        )
        for r, s in jobs
    )
    return strategy, scenario, days, stations, skipped, jobs, results


def simulate_sampling(table: FeatureTable, spec: ModelSpec, strategy="one_day", scenario="full_city",
                      max_days: int = 28, reps: int = 10, weight_share: float = 0.25, seed: int = 0,
                      days=None, min_rows: int | None = None, workers: int = 1) -> SamplingCurve:
    """Error curve over the number of sample days; ``days`` defaults to ``0..max_days``."""
    days = list(range(max_days + 1)) if days is None else list(days)
    strategy, scenario, days, stations, skipped, jobs, results = _run(
        table, spec, strategy, scenario, days, reps, weight_share, seed, min_rows, workers)
    errors = {m: np.full((reps, len(stations), len(days)), np.nan) for m in ("smape", "mae")}
    masses = []
    dropped = set()
    col = {s: i for i, s in enumerate(stations)}
    for (r, s), res in zip(jobs, results):
        if res is None:
            dropped.add(s)
            continue
        for m in errors:
            errors[m][r, col[s]] = res[m]
        masses += res["mass"]
    for s in sorted(dropped):
        log.info("station %s skipped: not enough dates for %s sampling", s, strategy.value)
        skipped.append({"station_id": s, "reason": f"not enough dates for {strategy.value} sampling"})
    keep = [i for i, s in enumerate(stations) if s not in dropped]
    errors = {m: v[:, keep] for m, v in errors.items()}
    return SamplingCurve(strategy.value, scenario.value, days, errors, [stations[i] for i in keep], weight_share,
                         skipped, masses)


def ten_day_headline(table: FeatureTable, spec: ModelSpec, seed: int = 0, reps: int = 10, n_days: int = 10,
                     weight_share: float = 0.25, min_aadb_rows: int = DEFAULT_MIN_AADB_ROWS,
                     workers: int = 1) -> tuple[EvaluationReport, EvaluationReport]:
    """Daily and AADB reports with ``n_days`` one-day samples per station, averaged over repetitions."""
    _, _, _, stations, skipped, jobs, results = _run(
        table, spec, Strategy.ONE_DAY, Scenario.FULL_CITY, [n_days], reps, weight_share, seed, None, workers)
    per = {"daily": {}, "aadb": {}}
    aadb_excluded = {}
    for (r, s), res in zip(jobs, results):
        if res is None:
            continue
        test, pred = res["daily"][0]
        for scale in ("daily", "aadb"):
            scores, excl = score_by_station(table.stations[test], table.y[test], pred, table.dates.iloc[test],
                                            scale, min_aadb_rows)
            for sc in scores:
                per[scale].setdefault(s, []).append(sc)
            for e in excl:
                aadb_excluded[e["station_id"]] = e
    reports = []
    for scale in ("daily", "aadb"):
        scores = [
            StationScore(s, int(np.mean([x.n_test_rows for x in v])), float(np.mean([x.mae for x in v])),
                         float(np.mean([x.smape for x in v])))
            for s, v in sorted(per[scale].items())
        ]
        excluded = list(skipped) + (list(aadb_excluded.values()) if scale == "aadb" else [])
        reports.append(EvaluationReport(f"sampling_{n_days}d", table.window.value, scale, scores, excluded,
                                        extra={"reps": reps, "n_days": n_days, "weight_share": weight_share}))
    return reports[0], reports[1]
