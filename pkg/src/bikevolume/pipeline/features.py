"""Feature families computed for every (location, date) pair.

Each family has a batch form (``*_frame``) returning one row per location and
date, and a single-point form returning a ``{name: value}`` mapping. The
single-point forms call the batch ones, so both always agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
import shapely
from shapely import wkt as shapely_wkt

from ..core import GeoPoint, Station, densify, haversine_array, hex_index_array
from ..core.hexgrid import AXIAL_DIRECTIONS, HexGrid
from ..errors import ConfigError
from ..ingest.bundle import map_socio_year
from ..ingest.graph import StreetGraph
from ..ingest.schemas import (
    LANDUSE_COLUMNS,
    MOTOR_COLUMNS,
    POI_TYPES,
    SOCIO_COLUMNS,
    STRAVA_HEX_COLUMNS,
    STRAVA_SEGMENT_COLUMNS,
    WEATHER_COLUMNS,
)
from ..ingest.trips import Trip

CITY = "city"


@dataclass(frozen=True)
class FeatureConfig:
    bikeshare_radii: tuple = (250, 500, 1000, 2000, 5000, CITY)
    strava_radii: tuple = (500, 1000, 2000, 5000, CITY)
    poi_radii: tuple = (500, 1000, 2000, 5000)
    motor_radius: float = 6000.0
    densify_step: float = 25.0

    def __post_init__(self):
        for name in ("bikeshare_radii", "strava_radii", "poi_radii"):
            radii = getattr(self, name)
            if not radii:
                raise ConfigError(f"{name} must not be empty")
            numeric = [r for r in radii if r != CITY]
            if any(not float(r) > 0 for r in numeric) or sorted(numeric) != list(numeric):
                raise ConfigError(f"{name} must be increasing positive radii, optionally ending with 'city'")
            if CITY in radii and radii[-1] != CITY:
                raise ConfigError(f"'city' must be the last entry of {name}")

    @classmethod
    def from_dict(cls, d: dict | None) -> "FeatureConfig":
        d = dict(d or {})
        unknown = sorted(set(d) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigError(f"unknown feature settings {unknown}")
        for k in ("bikeshare_radii", "strava_radii", "poi_radii"):
            if k in d:
                d[k] = tuple(r if r == CITY else float(r) for r in d[k])
        return cls(**d)


def _rname(r) -> str:
    return CITY if r == CITY else f"{int(r)}m"


def _locations_frame(locations) -> pd.DataFrame:
    if isinstance(locations, pd.DataFrame):
        return locations.loc[:, ["station_id", "lat", "lon"]].reset_index(drop=True)
    rows = []
    for s in locations:
        if isinstance(s, Station):
            rows.append((s.id, s.location.lat, s.location.lon))
        else:
            rows.append(tuple(s))
    return pd.DataFrame(rows, columns=["station_id", "lat", "lon"])


def _date_index(dates) -> pd.DatetimeIndex:
    return pd.DatetimeIndex(pd.to_datetime(list(dates) if not isinstance(dates, pd.Index) else dates)).normalize()


def _grid_frame(locs: pd.DataFrame, days: pd.DatetimeIndex, values: dict) -> pd.DataFrame:
    """Long frame from ``{name: array[n_locations, n_dates]}``."""
    n_loc, n_day = len(locs), len(days)
    out = pd.DataFrame({
        "station_id": np.repeat(locs["station_id"].to_numpy(dtype=object), n_day),
        "date": np.tile(days.to_numpy(), n_loc),
    })
    for name, arr in values.items():
        out[name] = np.asarray(arr, dtype=float).reshape(n_loc * n_day)
    return out


def _polyline_points(polylines, step):
    """Concatenated densified vertices of many polylines plus each polyline's start offset."""
    chunks = [densify(p, step) for p in polylines]
    if not chunks:
        return np.zeros(0), np.zeros(0), np.zeros(0, dtype=np.int64)
    sizes = np.array([len(c) for c in chunks])
    allpts = np.concatenate(chunks)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    return allpts[:, 0], allpts[:, 1], offsets


def _min_distance(lat, lon, plat, plon, offsets) -> np.ndarray:
    if len(offsets) == 0:
        return np.zeros(0)
    d = haversine_array(lat, lon, plat, plon)
    return np.minimum.reduceat(d, offsets)


def _safe_mean(sums, counts):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, sums / np.where(counts > 0, counts, 1), np.nan)


# -- bike sharing -----------------------------------------------------------

def bikeshare_names(radii=FeatureConfig.bikeshare_radii) -> list[str]:
    return [f"bs_{kind}_{_rname(r)}" for r in radii for kind in ("pass", "start", "end")]


def bikeshare_frame(trips: list[Trip], locations, dates, radii=FeatureConfig.bikeshare_radii,
                    step: float = 25.0) -> pd.DataFrame:
    """Trips passing through, starting in and ending in each radius disc, by start date.

    A trip passes a disc when any point of its route, densified every ``step``
    metres, lies inside. Unrouted trips use the straight origin-destination line.
    """
    locs = _locations_frame(locations)
    days = _date_index(dates)
    day_pos = {d: i for i, d in enumerate(days)}
    code = np.array([day_pos.get(pd.Timestamp(t.start.date()), -1) for t in trips], dtype=np.int64)
    keep = np.flatnonzero(code >= 0)
    trips = [trips[i] for i in keep]
    code = code[keep]
    routes = [t.route if t.route else (t.origin, t.destination) for t in trips]
    plat, plon, offsets = _polyline_points(routes, step)
    olat = np.array([t.origin.lat for t in trips])
    olon = np.array([t.origin.lon for t in trips])
    dlat = np.array([t.destination.lat for t in trips])
    dlon = np.array([t.destination.lon for t in trips])
    n_day = len(days)
    per_day = np.bincount(code, minlength=n_day).astype(float)
    values = {name: np.zeros((len(locs), n_day)) for name in bikeshare_names(radii)}
    for i, (lat, lon) in enumerate(zip(locs["lat"].to_numpy(float), locs["lon"].to_numpy(float))):
        dist = {}
        if len(trips):
            dist = {
                "pass": _min_distance(lat, lon, plat, plon, offsets),
                "start": haversine_array(lat, lon, olat, olon),
                "end": haversine_array(lat, lon, dlat, dlon),
            }
        for r in radii:
            for kind in ("pass", "start", "end"):
                name = f"bs_{kind}_{_rname(r)}"
                if r == CITY:
                    values[name][i] = per_day
                elif dist:
                    values[name][i] = np.bincount(code[dist[kind] <= float(r)], minlength=n_day)
    return _grid_frame(locs, days, values)


def bikeshare_features(trips, station, date, radii=FeatureConfig.bikeshare_radii, step: float = 25.0) -> dict:
    row = bikeshare_frame(trips, [station], [date], radii, step).iloc[0]
    return {k: row[k] for k in bikeshare_names(radii)}


# -- crowdsourced -----------------------------------------------------------

def strava_names(radii=FeatureConfig.strava_radii) -> list[str]:
    names = [f"strava_{c}_{_rname(r)}" for r in radii for c in STRAVA_SEGMENT_COLUMNS]
    names += [f"strava_hex_{c}" for c in STRAVA_HEX_COLUMNS]
    names += [f"strava_hexnb_{c}" for c in STRAVA_HEX_COLUMNS]
    return names


def _pivot(df: pd.DataFrame, key, days: pd.DatetimeIndex, keys: list, columns) -> dict:
    """``{column: array[n_dates, n_keys]}`` with NaN where a (date, key) has no row."""
    out = {c: np.full((len(days), len(keys)), np.nan) for c in columns}
    if df.empty or not keys:
        return out
    kpos = {k: i for i, k in enumerate(keys)}
    dpos = {d: i for i, d in enumerate(days)}
    dates = pd.to_datetime(df["date"]).dt.normalize()
    di = dates.map(dpos)
    kvals = df[key].apply(tuple, axis=1) if isinstance(key, list) else df[key]
    ki = kvals.map(kpos)
    ok = (di.notna() & ki.notna()).to_numpy()
    di = di[ok].to_numpy(dtype=np.int64)
    ki = ki[ok].to_numpy(dtype=np.int64)
    for c in columns:
        out[c][di, ki] = df[c].to_numpy(dtype=float)[ok]
    return out


def _masked_means(V: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Per-date mean of V[:, members] ignoring NaN; NaN when nothing has data."""
    sub = V[:, members]
    present = ~np.isnan(sub)
    return _safe_mean(np.where(present, sub, 0.0).sum(axis=1), present.sum(axis=1))


def strava_frame(segments: pd.DataFrame, hexagons: pd.DataFrame, graph: StreetGraph, grid: HexGrid, locations,
                 dates, radii=FeatureConfig.strava_radii, step: float = 25.0) -> pd.DataFrame:
    """Segment means per radius, plus the containing hexagon and the mean of its six neighbours.

    A segment qualifies for a radius when any densified point of it lies inside;
    only segments with a row for the date enter that date's mean.
    """
    locs = _locations_frame(locations)
    days = _date_index(dates)
    seg_ids = [e.id for e in graph.edges]
    plat, plon, offsets = _polyline_points([e.segment.polyline for e in graph.edges], step)
    seg_v = _pivot(segments, "segment_id", days, seg_ids, STRAVA_SEGMENT_COLUMNS)
    cells = sorted({(int(q), int(r)) for q, r in zip(hexagons["q"], hexagons["r"])})
    hex_v = _pivot(hexagons, ["q", "r"], days, cells, STRAVA_HEX_COLUMNS)
    cell_pos = {c: i for i, c in enumerate(cells)}
    lat = locs["lat"].to_numpy(float)
    lon = locs["lon"].to_numpy(float)
    qs, rs = hex_index_array(lat, lon, grid)
    n_loc, n_day = len(locs), len(days)
    values = {name: np.full((n_loc, n_day), np.nan) for name in strava_names(radii)}
    for i in range(n_loc):
        dist = _min_distance(lat[i], lon[i], plat, plon, offsets)
        for r in radii:
            members = np.arange(len(seg_ids)) if r == CITY else np.flatnonzero(dist <= float(r))
            if len(members) == 0:
                continue
            for c in STRAVA_SEGMENT_COLUMNS:
                values[f"strava_{c}_{_rname(r)}"][i] = _masked_means(seg_v[c], members)
        own = cell_pos.get((int(qs[i]), int(rs[i])))
        nbrs = [cell_pos[k] for k in ((int(qs[i]) + dq, int(rs[i]) + dr) for dq, dr in AXIAL_DIRECTIONS)
                if k in cell_pos]
        for c in STRAVA_HEX_COLUMNS:
            if own is not None:
                values[f"strava_hex_{c}"][i] = hex_v[c][:, own]
            if nbrs:
                values[f"strava_hexnb_{c}"][i] = _masked_means(hex_v[c], np.array(nbrs))
    return _grid_frame(locs, days, values)


def strava_features(segments, hexagons, graph, grid, station, date, radii=FeatureConfig.strava_radii,
                    step: float = 25.0) -> dict:
    row = strava_frame(segments, hexagons, graph, grid, [station], [date], radii, step).iloc[0]
    return {k: row[k] for k in strava_names(radii)}


# -- motorized traffic ------------------------------------------------------

def motorized_names() -> list[str]:
    return [f"motor_{c}_{tag}" for tag in ("6km", CITY) for c in MOTOR_COLUMNS]


def motorized_frame(observations: pd.DataFrame, locations, dates, radius: float = 6000.0) -> pd.DataFrame:
    """Mean detector readings within ``radius`` and city-wide; no detector in range gives NaN."""
    locs = _locations_frame(locations)
    days = _date_index(dates)
    det = observations.drop_duplicates("detector_id").sort_values("detector_id", kind="mergesort")
    ids = det["detector_id"].tolist()
    V = _pivot(observations, "detector_id", days, ids, MOTOR_COLUMNS)
    values = {name: np.full((len(locs), len(days)), np.nan) for name in motorized_names()}
    dlat = det["lat"].to_numpy(float)
    dlon = det["lon"].to_numpy(float)
    everyone = np.arange(len(ids))
    for i, (lat, lon) in enumerate(zip(locs["lat"].to_numpy(float), locs["lon"].to_numpy(float))):
        near = np.flatnonzero(haversine_array(lat, lon, dlat, dlon) <= radius)
        for c in MOTOR_COLUMNS:
            if len(near):
                values[f"motor_{c}_6km"][i] = _masked_means(V[c], near)
            if len(everyone):
                values[f"motor_{c}_{CITY}"][i] = _masked_means(V[c], everyone)
    return _grid_frame(locs, days, values)


def motorized_features(observations, station, date, radius: float = 6000.0) -> dict:
    row = motorized_frame(observations, [station], [date], radius).iloc[0]
    return {k: row[k] for k in motorized_names()}


# -- static infrastructure and socioeconomic --------------------------------

def infrastructure_names(poi_radii=FeatureConfig.poi_radii) -> list[str]:
    names = ["lat", "lon", "dist_center_m", "maxspeed", "lane_type"]
    names += [f"poi_{t}_{_rname(r)}" for r in poi_radii for t in POI_TYPES]
    names += [f"landuse_{c[:-4]}_pct" for c in LANDUSE_COLUMNS]
    return names


def socio_names() -> list[str]:
    return [f"socio_{c}" for c in SOCIO_COLUMNS]


def containing_area(point: GeoPoint, areas: pd.DataFrame, geoms=None) -> int:
    """Row position of the planning area holding ``point``; the nearest area when none does."""
    geoms = geoms if geoms is not None else [shapely_wkt.loads(w) for w in areas["wkt"]]
    pt = shapely.Point(point.lon, point.lat)
    inside = [i for i, g in enumerate(geoms) if g.covers(pt)]
    if inside:
        return inside[0]
    return int(np.argmin([g.distance(pt) for g in geoms]))


def static_frame(bundle, locations, poi_radii=FeatureConfig.poi_radii, step: float = 25.0) -> pd.DataFrame:
    """Per-location infrastructure features plus the planning area each location falls in."""
    locs = _locations_frame(locations)
    graph = bundle.street_graph
    plat, plon, offsets = _polyline_points([e.segment.polyline for e in graph.edges], step)
    areas = bundle.planning_areas.reset_index(drop=True)
    geoms = [shapely_wkt.loads(w) for w in areas["wkt"]]
    poi = bundle.poi
    center = bundle.meta.city_center
    rows = []
    for sid, lat, lon in locs.itertuples(index=False, name=None):
        row = {"station_id": sid, "lat": float(lat), "lon": float(lon),
               "dist_center_m": float(haversine_array(center.lat, center.lon, lat, lon))}
        if len(offsets):
            edge = graph.edges[int(np.argmin(_min_distance(lat, lon, plat, plon, offsets)))]
            row["maxspeed"] = float(edge.maxspeed)
            row["lane_type"] = float(edge.lane_type)
        else:
            row["maxspeed"] = row["lane_type"] = np.nan
        d_poi = haversine_array(lat, lon, poi["lat"].to_numpy(float), poi["lon"].to_numpy(float))
        for r in poi_radii:
            for t in POI_TYPES:
                row[f"poi_{t}_{_rname(r)}"] = float(np.sum((poi["type"].to_numpy() == t) & (d_poi <= float(r))))
        if geoms:
            k = containing_area(GeoPoint(lat, lon), areas, geoms)
            area = areas.iloc[k]
            row["area_id"] = area["area_id"]
            for c in LANDUSE_COLUMNS:
                row[f"landuse_{c[:-4]}_pct"] = float(area[c]) / float(area["area_km2"]) * 100.0
        else:
            row["area_id"] = None
            for c in LANDUSE_COLUMNS:
                row[f"landuse_{c[:-4]}_pct"] = np.nan
        rows.append(row)
    return pd.DataFrame(rows, columns=["station_id", *infrastructure_names(poi_radii), "area_id"])


def static_features(bundle, station, poi_radii=FeatureConfig.poi_radii) -> dict:
    row = static_frame(bundle, [station], poi_radii).iloc[0]
    return {k: row[k] for k in infrastructure_names(poi_radii)}


def socio_frame(socio: pd.DataFrame, area_of: pd.DataFrame, years) -> pd.DataFrame:
    """Indicators of each location's area for every study year, via the socio-year mapping.

    ``area_of`` has columns station_id and area_id. Locations whose area has no
    data for the mapped year get NaN.
    """
    available = sorted(int(y) for y in socio["year"].unique())
    table = socio.set_index(["area_id", "year"])
    rows = []
    for year in sorted({int(y) for y in years}):
        mapped = map_socio_year(year, available) if available else None
        for sid, aid in area_of.loc[:, ["station_id", "area_id"]].itertuples(index=False, name=None):
            row = {"station_id": sid, "year": year}
            key = (aid, mapped)
            for c in SOCIO_COLUMNS:
                row[f"socio_{c}"] = float(table.at[key, c]) if mapped is not None and key in table.index else np.nan
            rows.append(row)
    return pd.DataFrame(rows, columns=["station_id", "year", *socio_names()])


def socio_features(bundle, station, year: int) -> dict:
    st = static_frame(bundle, [station])
    row = socio_frame(bundle.socio, st, [year]).iloc[0]
    return {k: row[k] for k in socio_names()}


# -- calendar and weather ---------------------------------------------------

TIME_NAMES = ["month", "day", "weekday", "weekend", "year"]
HOLIDAY_NAMES = ["holiday_school", "holiday_public"]


def weather_names() -> list[str]:
    return [f"weather_{c}" for c in WEATHER_COLUMNS]


def time_holiday_frame(dates, holidays: pd.DataFrame) -> pd.DataFrame:
    days = _date_index(dates)
    hol = holidays.assign(date=pd.to_datetime(holidays["date"]).dt.normalize()).drop_duplicates("date")
    hol = hol.set_index("date")
    school = hol["school"].reindex(days).fillna(0).to_numpy(float)
    public = hol["public"].reindex(days).fillna(0).to_numpy(float)
    return pd.DataFrame({
        "date": days,
        "month": days.month.astype(float),
        "day": days.day.astype(float),
        "weekday": days.weekday.astype(float),
        "weekend": (days.weekday >= 5).astype(float),
        "year": days.year.astype(float),
        "holiday_school": school,
        "holiday_public": public,
    })


def time_holiday_features(date, holidays: pd.DataFrame) -> dict:
    row = time_holiday_frame([date], holidays).iloc[0]
    return {k: row[k] for k in TIME_NAMES + HOLIDAY_NAMES}


def weather_frame(weather: pd.DataFrame, dates) -> pd.DataFrame:
    days = _date_index(dates)
    w = weather.assign(date=pd.to_datetime(weather["date"]).dt.normalize()).drop_duplicates("date").set_index("date")
    out = pd.DataFrame({"date": days})
    for c in WEATHER_COLUMNS:
        out[f"weather_{c}"] = w[c].reindex(days).to_numpy(float)
    return out

