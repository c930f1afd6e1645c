"""Counting stations, daily count observations and their aggregation."""

from __future__ import annotations

import datetime as dt
import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

import pandas as pd

from ..errors import ConfigError, DataError
from .geo import GeoPoint


class StationKind(str, enum.Enum):
    LONG_TERM = "long_term"
    SHORT_TERM = "short_term"


class Window(str, enum.Enum):
    FULL_DAY = "full_day"  # 0h-24h
    DAYTIME = "daytime"  # 7h-19h

    @property
    def hours(self) -> range:
        return range(24) if self is Window.FULL_DAY else range(7, 19)


@dataclass(frozen=True)
class Station:
    id: str
    location: GeoPoint
    kind: StationKind = StationKind.LONG_TERM
    installed_year: int = 2015
    location_id: str | None = None


@dataclass(frozen=True)
class CountObservation:
    station_id: str
    date: dt.date
    window: Window
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"negative count for {self.station_id} on {self.date}")


def _hourly_frame(hourly) -> pd.DataFrame:
    if isinstance(hourly, pd.DataFrame):
        df = hourly.loc[:, ["station_id", "timestamp", "count"]].copy()
    else:
        df = pd.DataFrame(list(hourly), columns=["station_id", "timestamp", "count"])
    df["timestamp"] = pd.to_datetime(df["timestamp"])
    return df


def aggregate_daily_frame(hourly, window: Window) -> pd.DataFrame:
    """Sum whole-hour counts into (station_id, date, count) rows for ``window``.

    A station-date missing any hour of the window yields no row.
    """
    window = Window(window)
    df = _hourly_frame(hourly)
    dup = df.duplicated(["station_id", "timestamp"], keep="first")
    if dup.any():
        row = df[dup].iloc[0]
        raise DataError(
            f"duplicate hourly count for station {row['station_id']} at {row['timestamp']}",
            code="duplicate_row",
            station_id=str(row["station_id"]),
            timestamp=str(row["timestamp"]),
        )
    ts = df["timestamp"]
    if ((ts.dt.minute != 0) | (ts.dt.second != 0) | (ts.dt.microsecond != 0)).any():
        bad = df[(ts.dt.minute != 0) | (ts.dt.second != 0)].iloc[0]
        raise DataError(f"timestamp {bad['timestamp']} is not a whole hour", code="invalid_value")
    hours = list(window.hours)
    df = df[ts.dt.hour.isin(hours)]
    df = df.assign(date=df["timestamp"].dt.date)
    grouped = df.groupby(["station_id", "date"], sort=True)["count"].agg(["sum", "size"])
    grouped = grouped[grouped["size"] == len(hours)]
    out = grouped["sum"].astype("int64").rename("count").reset_index()
    return out


def aggregate_daily(hourly, window: Window) -> list[CountObservation]:
    window = Window(window)
    frame = aggregate_daily_frame(hourly, window)
    return [
        CountObservation(str(s), d, window, int(c))
        for s, d, c in frame.itertuples(index=False, name=None)
    ]


def combine_directional_counters(
    observations: Iterable[CountObservation],
    pairing: Mapping[str, Iterable[str]],
) -> list[CountObservation]:
    """Sum counters on opposite sides of a street into one location count.

    Dates on which any member of a group is missing are dropped for that group;
    stations outside ``pairing`` pass through unchanged.
    """
    member_of = {}
    for loc, members in pairing.items():
        for sid in members:
            if sid in member_of:
                raise ConfigError(f"station {sid} assigned to two locations")
            member_of[sid] = loc

    out = []
    grouped = defaultdict(dict)  # (loc, date, window) -> {station: count}
    windows_seen = defaultdict(lambda: defaultdict(set))
    for obs in observations:
        loc = member_of.get(obs.station_id)
        if loc is None:
            out.append(obs)
            continue
        grouped[(loc, obs.date, obs.window)][obs.station_id] = obs.count
        windows_seen[loc][obs.station_id].add(obs.window)

    for loc, by_station in windows_seen.items():
        sets = {frozenset(w) for w in by_station.values()}
        if len(sets) > 1:
            raise ConfigError(f"counters of location {loc} report different windows", location=loc)

    for (loc, date, window), counts in grouped.items():
        members = set(pairing[loc])
        if set(counts) == members:
            out.append(CountObservation(loc, date, window, sum(counts[m] for m in sorted(members))))

    out.sort(key=lambda o: (o.station_id, o.date, o.window.value))
    return out
