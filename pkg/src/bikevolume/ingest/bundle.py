"""The set of raw data sources behind one study, with file I/O and validation."""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..core import GeoPoint, HexGrid, StationKind
from ..errors import ConfigError, DataError
from .graph import StreetGraph
from .schemas import FILES, SCHEMAS
from .trips import AvailabilitySnapshot, Trip, read_snapshots, write_snapshots

DATE_FMT = "%Y-%m-%d"
HOUR_FMT = "%Y-%m-%d %H:%M"
MINUTE_FMT = "%Y-%m-%dT%H:%M"

_KEY_TYPES = {
    "station_id": "str", "location_id": "str", "area_id": "str", "poi_id": "str", "detector_id": "str",
    "segment_id": "str", "bike_id": "str", "kind": "str", "type": "str", "wkt": "str", "route": "str",
    "date": "date", "timestamp": "hour", "start": "minute", "end": "minute",
    "year": "int", "installed_year": "int", "q": "int", "r": "int", "count": "count",
    "school": "flag", "public": "flag", "unroutable": "flag",
}
# Columns that must be present on every row; feature columns may be blank.
_REQUIRED = {"station_id", "location_id", "lat", "lon", "kind", "installed_year", "timestamp", "count",
             "date", "area_id", "wkt", "area_km2", "year", "poi_id", "type", "detector_id", "segment_id",
             "q", "r", "bike_id", "origin_lat", "origin_lon", "dest_lat", "dest_lon", "start", "end"}


@dataclass
class BundleMeta:
    study_periods: list[tuple[dt.date, dt.date]]
    city_center: GeoPoint
    hex_grid: HexGrid
    extra: dict = field(default_factory=dict)

    def in_study(self, dates) -> np.ndarray:
        d = pd.to_datetime(pd.Series(dates)).dt.normalize()
        ok = np.zeros(len(d), dtype=bool)
        for lo, hi in self.study_periods:
            ok |= ((d >= pd.Timestamp(lo)) & (d <= pd.Timestamp(hi))).to_numpy()
        return ok

    def to_dict(self) -> dict:
        return {
            "study_periods": [[a.isoformat(), b.isoformat()] for a, b in self.study_periods],
            "city_center": {"lat": self.city_center.lat, "lon": self.city_center.lon},
            "hex_grid": {
                "origin": {"lat": self.hex_grid.origin.lat, "lon": self.hex_grid.origin.lon},
                "cell_area_km2": self.hex_grid.cell_area_km2,
            },
            **({"extra": self.extra} if self.extra else {}),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BundleMeta":
        try:
            periods = [(dt.date.fromisoformat(a), dt.date.fromisoformat(b)) for a, b in d["study_periods"]]
            center = GeoPoint(d["city_center"]["lat"], d["city_center"]["lon"])
            hg = d["hex_grid"]
            grid = HexGrid(GeoPoint(hg["origin"]["lat"], hg["origin"]["lon"]), hg.get("cell_area_km2", 0.66))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bundle.json is incomplete: {exc}", code="schema_mismatch") from exc
        for a, b in periods:
            if b < a:
                raise ConfigError(f"study period {a}..{b} is reversed")
        return cls(periods, center, grid, d.get("extra", {}))


@dataclass
class SourceBundle:
    meta: BundleMeta
    stations: pd.DataFrame
    counts: pd.DataFrame
    weather: pd.DataFrame
    planning_areas: pd.DataFrame
    socio: pd.DataFrame
    poi: pd.DataFrame
    motorized: pd.DataFrame
    holidays: pd.DataFrame
    strava_segments: pd.DataFrame
    strava_hexagons: pd.DataFrame
    street_graph: StreetGraph
    trips: list[Trip] = field(default_factory=list)
    snapshots: list[AvailabilitySnapshot] = field(default_factory=list)

    def pairing(self) -> dict[str, set[str]]:
        """location_id -> counter ids, for locations served by more than one counter."""
        groups = self.stations.groupby("location_id")["station_id"].apply(set)
        return {loc: ids for loc, ids in groups.items() if len(ids) > 1}

    def socio_years(self) -> list[int]:
        return sorted(int(y) for y in self.socio["year"].unique())


def map_socio_year(study_year: int, available_years) -> int:
    """Latest socioeconomic year not after ``study_year`` (2019 -> 2019, 2022 -> 2020 given {2019, 2020})."""
    candidates = [int(y) for y in available_years if int(y) <= int(study_year)]
    if not candidates:
        raise ConfigError(f"no socioeconomic data available for {study_year} or earlier",
                          study_year=int(study_year))
    return max(candidates)


def empty_table(source: str) -> pd.DataFrame:
    return _convert(pd.DataFrame({c: pd.Series([], dtype=object) for c in SCHEMAS[source]}), source, "<memory>")


def _exact_float(text: str) -> float:
    # float() round-trips repr output exactly; pandas' fast parser may not
    try:
        return float(text) if text.strip() else np.nan
    except ValueError:
        return np.nan


def _convert(raw: pd.DataFrame, source: str, path: str) -> pd.DataFrame:
    out = {}
    for col in raw.columns:
        s = raw[col]
        kind = _KEY_TYPES.get(col, "float")
        blank = s.astype(str).str.strip() == ""
        if col in _REQUIRED and blank.any():
            line = int(np.flatnonzero(blank.to_numpy())[0]) + 2
            raise DataError(f"{path}:{line}: missing value in column {col!r}", code="invalid_value",
                            file=path, line=line, column=col)
        if kind == "str":
            out[col] = s.astype(str)
            continue
        if kind in ("date", "hour", "minute"):
            fmt = {"date": DATE_FMT, "hour": HOUR_FMT, "minute": MINUTE_FMT}[kind]
            conv = pd.to_datetime(s, format=fmt, errors="coerce")
        else:
            conv = pd.Series([_exact_float(v) for v in s.astype(str)], index=s.index, dtype=float)
        bad = conv.isna() & ~blank
        if kind in ("int", "count", "flag"):
            bad |= conv.notna() & (conv != np.round(conv))
        if kind == "count":
            bad |= conv < 0
        if kind == "flag":
            bad |= ~conv.isin([0, 1]) & ~blank
        if bad.any():
            line = int(np.flatnonzero(bad.to_numpy())[0]) + 2
            raise DataError(f"{path}:{line}: invalid value {s.iloc[line - 2]!r} in column {col!r}",
                            code="invalid_value", file=path, line=line, column=col)
        if kind in ("int", "count", "flag"):
            conv = conv.astype("int64")
        out[col] = conv
    return pd.DataFrame(out, columns=list(raw.columns))


def read_table(path, source: str) -> pd.DataFrame:
    path = str(path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    except FileNotFoundError:
        raise ConfigError(f"missing source file {path}", code="missing_file", file=path) from None
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: file has no header", code="schema_mismatch", file=path) from None
    expected = SCHEMAS[source]
    if list(raw.columns) != expected:
        raise DataError(
            f"{path}: header {list(raw.columns)} does not match {source} schema {expected}",
            code="schema_mismatch", file=path,
        )
    return _convert(raw, source, path)


def write_table(df: pd.DataFrame, path, source: str) -> None:
    out = df.loc[:, SCHEMAS[source]].copy()
    for col in out.columns:
        kind = _KEY_TYPES.get(col)
        if kind in ("date", "hour", "minute"):
            fmt = {"date": DATE_FMT, "hour": HOUR_FMT, "minute": MINUTE_FMT}[kind]
            out[col] = pd.to_datetime(out[col]).dt.strftime(fmt)
    out.to_csv(path, index=False, lineterminator="\n")


def trips_to_frame(trips: list[Trip], routed: bool = False) -> pd.DataFrame:
    rows = []
    for t in trips:
        row = {
            "bike_id": t.bike_id, "origin_lat": t.origin.lat, "origin_lon": t.origin.lon,
            "dest_lat": t.destination.lat, "dest_lon": t.destination.lon,
            "start": t.start, "end": t.end,
        }
        if routed:
            row["routed_distance"] = np.nan if t.routed_distance is None else t.routed_distance
            row["unroutable"] = int(t.unroutable)
            row["route"] = "" if t.route is None else ";".join(f"{p.lat!r} {p.lon!r}" for p in t.route)
        rows.append(row)
    cols = SCHEMAS["routed_trips" if routed else "trips"]
    df = pd.DataFrame(rows, columns=cols)
    df["start"] = pd.to_datetime(df["start"])
    df["end"] = pd.to_datetime(df["end"])
    return df


def frame_to_trips(df: pd.DataFrame) -> list[Trip]:
    trips = []
    routed = "route" in df.columns
    for row in df.itertuples(index=False):
        route = None
        dist = None
        unroutable = False
        if routed:
            unroutable = bool(row.unroutable)
            if isinstance(row.route, str) and row.route:
                route = tuple(GeoPoint(*map(float, p.split())) for p in row.route.split(";"))
            if not pd.isna(row.routed_distance):
                dist = float(row.routed_distance)
        trips.append(Trip(
            str(row.bike_id), GeoPoint(row.origin_lat, row.origin_lon), GeoPoint(row.dest_lat, row.dest_lon),
            pd.Timestamp(row.start).to_pydatetime(), pd.Timestamp(row.end).to_pydatetime(),
            route, dist, unroutable,
        ))
    return trips


def read_trips(path) -> list[Trip]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    source = "routed_trips" if header == SCHEMAS["routed_trips"] else "trips"
    return frame_to_trips(read_table(path, source))


def write_trips(trips: list[Trip], path, routed: bool = False) -> None:
    write_table(trips_to_frame(trips, routed), path, "routed_trips" if routed else "trips")


def _check_period(bundle: SourceBundle, df: pd.DataFrame, col: str, source: str) -> None:
    if df.empty:
        return
    ok = bundle.meta.in_study(df[col])
    if not ok.all():
        line = int(np.flatnonzero(~ok)[0]) + 2
        raise DataError(
            f"{FILES[source]}:{line}: date {pd.Timestamp(df[col].iloc[line - 2]).date()} lies outside the study periods",
            code="date_out_of_period", file=FILES[source], line=line,
        )


def _check_fk(values: pd.Series, allowed, source: str, column: str, target: str) -> None:
    missing = ~values.isin(list(allowed))
    if missing.any():
        line = int(np.flatnonzero(missing.to_numpy())[0]) + 2
        raise DataError(
            f"{FILES.get(source, source)}:{line}: {column} {values.iloc[line - 2]!r} has no match in {target}",
            code="unresolved_foreign_key", file=FILES.get(source, source), line=line, column=column,
        )


def validate_bundle(bundle: SourceBundle) -> SourceBundle:
    st = bundle.stations
    dup = st["station_id"].duplicated()
    if dup.any():
        line = int(np.flatnonzero(dup.to_numpy())[0]) + 2
        raise DataError(f"stations.csv:{line}: duplicate station id", code="duplicate_row", file="stations.csv",
                        line=line)
    kinds = {k.value for k in StationKind}
    bad = ~st["kind"].isin(kinds)
    if bad.any():
        line = int(np.flatnonzero(bad.to_numpy())[0]) + 2
        raise DataError(f"stations.csv:{line}: kind must be one of {sorted(kinds)}", code="invalid_value",
                        file="stations.csv", line=line)
    if (st.groupby("location_id")["kind"].nunique() > 1).any():
        raise DataError("counters sharing a location must share a station kind", code="invalid_value",
                        file="stations.csv")
    _check_fk(bundle.counts["station_id"], st["station_id"], "counts", "station_id", "stations.csv")
    _check_fk(bundle.socio["area_id"], bundle.planning_areas["area_id"], "socio", "area_id", "planning_areas.csv")
    edge_ids = {e.id for e in bundle.street_graph.edges}
    _check_fk(bundle.strava_segments["segment_id"], edge_ids, "strava_segments", "segment_id", "street_graph")
    _check_period(bundle, bundle.counts, "timestamp", "counts")
    for source in ("weather", "motorized", "strava_segments", "strava_hexagons"):
        _check_period(bundle, getattr(bundle, source), "date", source)
    if bundle.trips:
        starts = pd.Series([t.start for t in bundle.trips])
        ok = bundle.meta.in_study(starts)
        if not ok.all():
            line = int(np.flatnonzero(~ok)[0]) + 2
            raise DataError(f"trips.csv:{line}: trip starts outside the study periods",
                            code="date_out_of_period", file="trips.csv", line=line)
    return bundle


def load_bundle(directory, paths: dict | None = None) -> SourceBundle:
    """Read and validate every source in ``directory``; trips and snapshots are optional.

    ``paths`` maps a source name (any tabular source, ``street_graph`` or
    ``snapshots``) to a file that replaces the one in ``directory``.
    """
    directory = Path(directory)
    paths = dict(paths or {})
    unknown = sorted(set(paths) - set(FILES) - {"street_graph", "snapshots", "bundle"})
    if unknown:
        raise ConfigError(f"unknown source names {unknown}", code="unknown_source")

    def where(source, default):
        return Path(paths[source]) if source in paths else directory / default

    meta_path = where("bundle", "bundle.json")
    if not meta_path.exists():
        raise ConfigError(f"{meta_path} not found", code="missing_file", file=str(meta_path))
    with open(meta_path, encoding="utf-8") as fh:
        meta = BundleMeta.from_dict(json.load(fh))
    tables = {}
    for source, name in FILES.items():
        if source == "trips":
            continue
        tables[source] = read_table(where(source, name), source)
    graph_path = where("street_graph", "street_graph.geojson")
    if not graph_path.exists():
        raise ConfigError(f"{graph_path} not found", code="missing_file", file=str(graph_path))
    graph = StreetGraph.read(graph_path)
    trips_path = where("trips", FILES["trips"])
    if "trips" in paths and not trips_path.exists():
        raise ConfigError(f"{trips_path} not found", code="missing_file", file=str(trips_path))
    trips = read_trips(trips_path) if trips_path.exists() else []
    snap_path = where("snapshots", "snapshots.ndjson")
    if "snapshots" in paths and not snap_path.exists():
        raise ConfigError(f"{snap_path} not found", code="missing_file", file=str(snap_path))
    snaps = read_snapshots(snap_path) if snap_path.exists() else []
    bundle = SourceBundle(meta=meta, street_graph=graph, trips=trips, snapshots=snaps, **tables)
    return validate_bundle(bundle)


def save_bundle(bundle: SourceBundle, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "bundle.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(bundle.meta.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for source, name in FILES.items():
        if source == "trips":
            continue
        write_table(getattr(bundle, source), directory / name, source)
    bundle.street_graph.write(directory / "street_graph.geojson")
    if bundle.trips:
        write_trips(bundle.trips, directory / FILES["trips"])
    if bundle.snapshots:
        write_snapshots(bundle.snapshots, directory / "snapshots.ndjson")
