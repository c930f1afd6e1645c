"""Leave-one-station-out and short-term test protocols."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ..core import StationKind, derive_seed
from ..errors import DataError
from ..model import ModelSpec
from ..pipeline.table import FeatureTable
from .folds import FoldPlan, logo_plan
from .metrics import mae, smape
from .report import EvaluationReport, StationScore

log = logging.getLogger(__name__)

SCALES = ("daily", "aadb")
DEFAULT_MIN_AADB_ROWS = 30


def fold_seed(seed: int, station) -> int:
    """Seed of the model fitted while ``station`` is held out; shared with the sampling simulator."""
    return derive_seed(seed, "fold", str(station))


def score_by_station(stations, y, pred, dates, scale: str = "daily",
                     min_rows: int = DEFAULT_MIN_AADB_ROWS) -> tuple[list[StationScore], list[dict]]:
    """Daily: score rows directly. AADB: compare yearly means of truth and prediction.

    For AADB only station-years with at least ``min_rows`` rows count; a station
    left with none is excluded.
    """
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    df = pd.DataFrame({"station": np.asarray(stations, dtype=object), "y": np.asarray(y, dtype=float),
                       "p": np.asarray(pred, dtype=float), "year": pd.to_datetime(pd.Series(dates)).dt.year.to_numpy()})
    scores, excluded = [], []
    for s, part in df.groupby("station", sort=True):
        if scale == "daily":
            scores.append(StationScore(str(s), len(part), mae(part["y"], part["p"]), smape(part["y"], part["p"])))
            continue
        years = part.groupby("year").agg(n=("y", "size"), y=("y", "mean"), p=("p", "mean"))
        years = years[years["n"] >= min_rows]
        if years.empty:
            excluded.append({"station_id": str(s), "reason": f"no station-year with {min_rows} or more rows"})
            continue
        scores.append(StationScore(str(s), int(years["n"].sum()), mae(years["y"], years["p"]),
                                   smape(years["y"], years["p"])))
    return scores, excluded


@dataclass
class LogoRun:
    predictions: np.ndarray  # aligned with table rows; NaN outside the eligible stations
    plan: FoldPlan
    folds: list[dict] = field(default_factory=list)
    excluded: list[dict] = field(default_factory=list)


def _fit_fold(table: FeatureTable, spec: ModelSpec, fold, seed: int, workers: int):
    station = next(iter(fold.test_stations))
    train = table.take(fold.train_idx)
    test = table.take(fold.test_idx)
    model = spec.build(random_state=fold_seed(seed, station), workers=workers)
    model.fit(train.X, train.y, groups=train.stations)
    pred = model.predict(test.X, groups=test.stations)
    record = {
        "test_station": str(station),
        "train_stations": sorted(str(s) for s in fold.train_stations),
        "n_train": int(len(fold.train_idx)),
        "n_test": int(len(fold.test_idx)),
        "transform_log": model.transform_log,
    }
    if model.search_result_ is not None:
        record["search"] = {"best_params": model.search_result_.best_params,
                            "best_score": model.search_result_.best_score}
    return pred, record


def eligible_long_term(table: FeatureTable) -> tuple[list[str], list[dict]]:
    long_rows = table.frame["kind"] == StationKind.LONG_TERM.value
    present = sorted(set(table.frame.loc[long_rows, "station_id"].astype(str)))
    expected = table.meta.get("locations", {}).get(StationKind.LONG_TERM.value, present)
    excluded = [{"station_id": s, "reason": "no valid rows"} for s in sorted(set(expected) - set(present))]
    for e in excluded:
        log.info("station %s left out: %s", e["station_id"], e["reason"])
    return present, excluded


def logo_run(table: FeatureTable, spec: ModelSpec, seed: int = 0, workers: int = 1) -> LogoRun:
    """Fit one model per held-out long-term station; preprocessing is refit inside every fold."""
    stations, excluded = eligible_long_term(table)
    if len(stations) < 2:
        raise DataError("leave-one-out evaluation needs at least two long-term stations with data",
                        code="too_few_stations", n_stations=len(stations))
    plan = logo_plan(table.stations, eligible=stations)
    plan.check_logo()
    results = Parallel(n_jobs=workers)(
        delayed(_fit_fold)(table, spec, fold, seed, 1) for fold in plan.folds
    )
    pred = np.full(len(table), np.nan)
    records = []
    for fold, (p, rec) in zip(plan.folds, results):
        pred[fold.test_idx] = p
        records.append(rec)
    return LogoRun(pred, plan, records, excluded)


def report_from_run(table: FeatureTable, run: LogoRun, scale: str = "daily",
                    min_aadb_rows: int = DEFAULT_MIN_AADB_ROWS, protocol: str = "logo") -> EvaluationReport:
    rows = np.flatnonzero(~np.isnan(run.predictions))
    scores, excluded = score_by_station(table.stations[rows], table.y[rows], run.predictions[rows],
                                        table.dates.iloc[rows], scale, min_aadb_rows)
    return EvaluationReport(protocol, table.window.value, scale, scores, run.excluded + excluded, run.folds)


def logo_evaluate(table: FeatureTable, spec: ModelSpec, scale: str = "daily", seed: int = 0, workers: int = 1,
                  min_aadb_rows: int = DEFAULT_MIN_AADB_ROWS) -> EvaluationReport:
    return report_from_run(table, logo_run(table, spec, seed, workers), scale, min_aadb_rows)


def shortterm_evaluate(table: FeatureTable, spec: ModelSpec, seed: int = 0, workers: int = 1) -> EvaluationReport:
    """Fit once on every long-term row, score each short-term station separately."""
    kind = table.frame["kind"].to_numpy(dtype=object)
    train_rows = np.flatnonzero(kind == StationKind.LONG_TERM.value)
    test_rows = np.flatnonzero(kind == StationKind.SHORT_TERM.value)
    if len(test_rows) == 0:
        raise DataError("the table has no short-term stations to test on (short-term counts only form complete "
                        "days in the daytime window)", code="no_short_term")
    if len(train_rows) == 0:
        raise DataError("the table has no long-term stations to train on", code="no_long_term")
    train = table.take(train_rows)
    test = table.take(test_rows)
    model = spec.build(random_state=derive_seed(seed, "shortterm"), workers=workers)
    model.fit(train.X, train.y, groups=train.stations)
    pred = model.predict(test.X, groups=test.stations)
    scores, excluded = score_by_station(test.stations, test.y, pred, test.dates, "daily")
    record = {"train_stations": sorted(set(str(s) for s in train.stations)), "n_train": len(train_rows),
              "n_test": len(test_rows), "transform_log": model.transform_log}
    return EvaluationReport("shortterm", table.window.value, "daily", scores, excluded, [record])


def closed_form_baseline(table: FeatureTable, scale: str = "daily",
                         min_aadb_rows: int = DEFAULT_MIN_AADB_ROWS) -> EvaluationReport:
    """What a mean predictor scores under LOGO, computed without fitting anything."""
    stations, excluded = eligible_long_term(table)
    frame = table.frame
    in_scope = frame["station_id"].isin(stations).to_numpy()
    pred = np.full(len(frame), np.nan)
    y = table.y
    for s in stations:
        own = (frame["station_id"] == s).to_numpy()
        pred[own] = y[in_scope & ~own].mean()
    rows = np.flatnonzero(in_scope)
    scores, more = score_by_station(table.stations[rows], y[rows], pred[rows], table.dates.iloc[rows], scale,
                                    min_aadb_rows)
    return EvaluationReport("logo_closed_form", table.window.value, scale, scores, excluded + more)

