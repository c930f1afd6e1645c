"""A small synthetic city with every data source and a known count-generating model.

Counts follow a log-linear model::

    log mu = b0 + a * log I(location) + weather, calendar and year terms + u_location
    count  = round(mu * exp(eps)),   eps ~ N(0, noise_sd**2)

where ``I`` is a latent cycling-intensity surface (a sum of Gaussian bumps)
that also drives the crowdsourced counts, bike-share demand and POI density.
``u_location`` is a per-location random effect that no feature explains.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from ..core import (
    GeoPoint,
    HexGrid,
    StreetSegment,
    derive_seed,
    hex_center,
    point_along,
    segment_midpoint,
)
from ..core.geo import from_local_km, to_local_km
from ..core.hexgrid import HexCell
from ..errors import ConfigError
from .bundle import BundleMeta, SourceBundle
from .graph import StreetGraph
from .schemas import LANDUSE_COLUMNS, POI_TYPES, SCHEMAS, SOCIO_COLUMNS, WEATHER_COLUMNS
from .trips import AvailabilitySnapshot, Trip

DEFAULT_PERIODS = ((dt.date(2019, 4, 1), dt.date(2019, 12, 31)), (dt.date(2022, 6, 1), dt.date(2022, 12, 31)))

PUBLIC_HOLIDAYS = [
    "2019-04-19", "2019-04-22", "2019-05-01", "2019-05-30", "2019-06-10", "2019-10-03", "2019-12-25",
    "2019-12-26", "2022-06-06", "2022-10-03", "2022-12-25", "2022-12-26",
]
SCHOOL_HOLIDAYS = [
    ("2019-04-15", "2019-04-26"), ("2019-06-20", "2019-08-02"), ("2019-10-04", "2019-10-18"),
    ("2019-12-23", "2019-12-31"), ("2022-07-07", "2022-08-19"), ("2022-10-24", "2022-11-05"),
    ("2022-12-22", "2022-12-31"),
]

# Share of a day's traffic in each hour, 0h..23h.
DIURNAL = np.array([
    0.4, 0.2, 0.15, 0.15, 0.3, 1.0, 2.8, 6.5, 9.0, 6.0, 4.5, 4.5,
    5.0, 5.2, 5.5, 6.8, 8.5, 9.0, 7.0, 5.0, 3.2, 2.2, 1.5, 0.9,
])
DIURNAL = DIURNAL / DIURNAL.sum()


@dataclass(frozen=True)
class SyntheticConfig:
    n_long: int = 20
    n_short: int = 6
    n_days: int = 200
    n_paired: int = 4
    extent_km: float = 8.0
    grid_lines: int = 11
    n_bumps: int = 5
    trips_per_day: int = 60
    violator_share: float = 0.08
    n_detectors: int = 24
    n_poi: int = 400
    noise_sd: float = 0.12
    station_effect_sd: float = 0.35
    missing_hour_rate: float = 0.01
    short_term_dates: int = 10
    snapshot_minutes: int = 120
    center_lat: float = 52.52
    center_lon: float = 13.405
    study_periods: tuple = DEFAULT_PERIODS

    def __post_init__(self):
        if self.n_long < 3:
            raise ConfigError("the synthetic city needs at least 3 long-term stations", n_long=self.n_long)
        if not 0 <= self.n_paired <= self.n_long:
            raise ConfigError("n_paired must lie between 0 and n_long")
        if self.n_days < 0 or self.n_short < 0:
            raise ConfigError("n_days and n_short must be non-negative")
        if self.grid_lines < 3:
            raise ConfigError("grid_lines must be at least 3")

    @classmethod
    def from_dict(cls, d: dict | None) -> "SyntheticConfig":
        d = dict(d or {})
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown synthetic config keys {unknown}")
        if "study_periods" in d:
            d["study_periods"] = tuple(
                (dt.date.fromisoformat(str(a)), dt.date.fromisoformat(str(b))) for a, b in d["study_periods"]
            )
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["study_periods"] = [[a.isoformat(), b.isoformat()] for a, b in self.study_periods]
        return d


@dataclass
class GroundTruth:
    """Parameters of the count model plus the expected daily count of every station-date."""

    intercept: float
    intensity_exponent: float
    coefficients: dict
    noise_sd: float
    location_effects: dict
    bumps: list
    expected: pd.DataFrame = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "intensity_exponent": self.intensity_exponent,
            "coefficients": self.coefficients,
            "noise_sd": self.noise_sd,
            "location_effects": self.location_effects,
            "bumps": self.bumps,
        }


class _City:
    """Latent intensity surface on local km coordinates centred on the city centre."""

    def __init__(self, rng, cfg: SyntheticConfig):
        half = cfg.extent_km / 2.0
        self.half = half
        self.bumps = [
            {
                "x": float(rng.uniform(-0.7 * half, 0.7 * half)),
                "y": float(rng.uniform(-0.7 * half, 0.7 * half)),
                "amplitude": float(rng.uniform(1.0, 3.0)),
                "scale_km": float(rng.uniform(0.8, 2.0)),
            }
            for _ in range(cfg.n_bumps)
        ]

    def intensity(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, 0.3)
        for b in self.bumps:
            d2 = (x - b["x"]) ** 2 + (y - b["y"]) ** 2
            out = out + b["amplitude"] * np.exp(-d2 / (2.0 * b["scale_km"] ** 2))
        return out


def _dates(cfg: SyntheticConfig) -> list[dt.date]:
    periods = cfg.study_periods
    share = [math.ceil(cfg.n_days / len(periods))] * len(periods)
    share[-1] = cfg.n_days - sum(share[:-1])
    out = []
    for (lo, hi), n in zip(periods, share):
        if n > (hi - lo).days + 1:
            raise ConfigError(f"{n} days do not fit into study period {lo}..{hi}")
        out += [lo + dt.timedelta(days=i) for i in range(max(n, 0))]
    return out


def _round5(a):
    return (np.round(np.asarray(a, dtype=float) / 5.0) * 5).astype(np.int64)


def _weather(rng, dates) -> pd.DataFrame:
    n = len(dates)
    doy = np.array([d.timetuple().tm_yday for d in dates], dtype=float)
    tavg = 10.0 + 9.0 * np.sin(2 * np.pi * (doy - 110) / 365.0) + rng.normal(0, 3.0, n)
    rain = rng.random(n) < 0.35
    prcp = np.where(rain, rng.exponential(4.0, n), 0.0)
    snow = np.where((tavg < 1.0) & rain, rng.exponential(20.0, n), 0.0)
    wspd = rng.gamma(4.0, 3.0, n)
    df = pd.DataFrame({
        "date": pd.to_datetime(dates),
        "tavg": np.round(tavg, 1),
        "tmin": np.round(tavg - rng.uniform(3, 7, n), 1),
        "tmax": np.round(tavg + rng.uniform(3, 7, n), 1),
        "prcp": np.round(prcp, 1),
        "snow": np.round(snow, 0),
        "wdir": np.round(rng.uniform(0, 360, n), 0),
        "wspd": np.round(wspd, 1),
        "wpgt": np.round(wspd * 1.8 + rng.gamma(2.0, 2.0, n), 1),
        "pres": np.round(rng.normal(1015, 8, n), 1),
        "tsun": np.round(np.where(rain, 0.3, 1.0) * rng.uniform(100, 700, n), 0),
    })
    return df.loc[:, ["date", *WEATHER_COLUMNS]]


def _holidays(dates) -> pd.DataFrame:
    days = pd.to_datetime(dates)
    public = days.isin(pd.to_datetime(PUBLIC_HOLIDAYS))
    school = np.zeros(len(days), dtype=bool)
    for a, b in SCHOOL_HOLIDAYS:
        school |= (days >= pd.Timestamp(a)) & (days <= pd.Timestamp(b))
    df = pd.DataFrame({"date": days, "school": school.astype(int), "public": public.astype(int)})
    return df.loc[(df["school"] == 1) | (df["public"] == 1)].reset_index(drop=True)


COEFFICIENTS = {
    "tavg": 0.03,
    "log1p_prcp": -0.25,
    "wspd": -0.008,
    "weekend": -0.2,
    "public": -0.25,
    "school": -0.08,
    "year_2022": 0.06,
}


def _temporal_log_effect(weather: pd.DataFrame, holidays: pd.DataFrame) -> np.ndarray:
    days = pd.DatetimeIndex(weather["date"])
    hol = holidays.set_index("date")
    public = days.isin(hol.index[hol["public"] == 1]).astype(float)
    school = days.isin(hol.index[hol["school"] == 1]).astype(float)
    c = COEFFICIENTS
    return (
        c["tavg"] * (weather["tavg"].to_numpy() - 10.0)
        + c["log1p_prcp"] * np.log1p(weather["prcp"].to_numpy())
        + c["wspd"] * (weather["wspd"].to_numpy() - 12.0)
        + c["weekend"] * (days.weekday >= 5).astype(float)
        + c["public"] * public
        + c["school"] * school
        + c["year_2022"] * (days.year == 2022).astype(float)
    )


def _street_grid(rng, cfg: SyntheticConfig, city: _City, center: GeoPoint):
    n = cfg.grid_lines
    ticks = np.linspace(-city.half, city.half, n)
    node_xy = {}
    for i in range(n):
        for j in range(n):
            node_xy[(i, j)] = (ticks[i], ticks[j])
    records = []
    k = 0
    for i in range(n):
        for j in range(n):
            for di, dj in ((1, 0), (0, 1)):
                if i + di >= n or j + dj >= n:
                    continue
                a, b = node_xy[(i, j)], node_xy[(i + di, j + dj)]
                xs, ys = [a[0], b[0]], [a[1], b[1]]
                if rng.random() < 0.3:
                    # a kink so that some segments carry more than two vertices
                    xs.insert(1, (a[0] + b[0]) / 2 + rng.normal(0, 0.03))
                    ys.insert(1, (a[1] + b[1]) / 2 + rng.normal(0, 0.03))
                lat, lon = from_local_km(np.array(xs), np.array(ys), center)
                pts = tuple(GeoPoint(round(float(la), 7), round(float(lo), 7)) for la, lo in zip(lat, lon))
                arterial = (i % 3 == 0 and di == 0) or (j % 3 == 0 and dj == 0)
                mid_i = city.intensity((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
                lane = int(rng.choice(4, p=[0.4, 0.3, 0.2, 0.1])) if mid_i > 1.0 else int(rng.choice(2))
                bicycle = bool(rng.random() > 0.06)
                records.append((StreetSegment(f"e{k:04d}", pts), bicycle, 50.0 if arterial else 30.0, lane))
                k += 1
    return StreetGraph.from_segments(records)


def _place_on_edges(rng, graph: StreetGraph, n: int) -> list[GeoPoint]:
    idx = rng.choice(len(graph.edges), size=n, replace=False)
    out = []
    for e in idx:
        seg = graph.edges[int(e)].segment
        p = point_along(seg.polyline, seg.length * float(rng.uniform(0.2, 0.8)))
        out.append(GeoPoint(round(p.lat, 6), round(p.lon, 6)))
    return out


def _split_hours(total: int) -> np.ndarray:
    """Integer hourly counts that sum exactly to ``total`` (largest-remainder rounding)."""
    raw = total * DIURNAL
    base = np.floor(raw).astype(np.int64)
    rest = int(total - base.sum())
    if rest > 0:
        frac = raw - base
        order = np.lexsort((np.arange(24), -frac))
        base[order[:rest]] += 1
    return base


def generate_synthetic_city(seed: int = 0, config: SyntheticConfig | dict | None = None):
    """Return ``(bundle, truth)`` for a deterministic synthetic city."""
    cfg = config if isinstance(config, SyntheticConfig) else SyntheticConfig.from_dict(config)
    rng = lambda key: np.random.default_rng(derive_seed(seed, key))  # noqa: E731
    center = GeoPoint(cfg.center_lat, cfg.center_lon)
    grid = HexGrid(center, 0.66)
    meta = BundleMeta([tuple(p) for p in cfg.study_periods], center, grid, {"generator_seed": int(seed)})
    city = _City(rng("intensity"), cfg)
    dates = _dates(cfg)
    day_index = pd.to_datetime(dates)

    graph = _street_grid(rng("streets"), cfg, city, center)

    # stations
    r = rng("stations")
    points = _place_on_edges(r, graph, cfg.n_long + cfg.n_short)
    paired = set(r.choice(cfg.n_long, size=cfg.n_paired, replace=False).tolist()) if cfg.n_paired else set()
    station_rows = []
    locations = []
    for i in range(cfg.n_long + cfg.n_short):
        long_term = i < cfg.n_long
        loc = f"L{i + 1:02d}" if long_term else f"S{i - cfg.n_long + 1:02d}"
        kind = "long_term" if long_term else "short_term"
        year = int(r.integers(2012, 2019))
        locations.append((loc, points[i], kind))
        members = [f"{loc}a", f"{loc}b"] if i in paired else [loc]
        for sid in members:
            station_rows.append({"station_id": sid, "location_id": loc, "lat": points[i].lat, "lon": points[i].lon,
                                 "kind": kind, "installed_year": year})
    stations = pd.DataFrame(station_rows, columns=SCHEMAS["stations"])

    weather = _weather(rng("weather"), dates)
    holidays = _holidays(dates)
    temporal = _temporal_log_effect(weather, holidays) if dates else np.zeros(0)
    day_factor = np.exp(temporal)

    # counts
    r = rng("counts")
    intercept = math.log(1500.0)
    exponent = 1.0
    effects = {loc: float(r.normal(0, cfg.station_effect_sd)) for loc, _, _ in locations}
    loc_xy = {loc: to_local_km(p.lat, p.lon, center) for loc, p, _ in locations}
    expected_rows = []
    count_rows = []
    members_of = stations.groupby("location_id", sort=False)["station_id"].apply(list).to_dict()
    short_dates = {}
    for loc, p, kind in locations:
        x, y = loc_xy[loc]
        base = intercept + exponent * math.log(float(city.intensity(x, y))) + effects[loc]
        if kind == "long_term":
            use = np.arange(len(dates))
        else:
            k = min(cfg.short_term_dates, len(dates))
            use = np.sort(r.choice(len(dates), size=k, replace=False)) if k else np.arange(0)
            short_dates[loc] = use
        mu = np.exp(base + temporal[use])
        eps = r.normal(0, cfg.noise_sd, len(use)) if cfg.noise_sd > 0 else np.zeros(len(use))
        totals = np.round(mu * np.exp(eps)).astype(np.int64)
        shares = r.uniform(0.4, 0.6) if len(members_of[loc]) == 2 else 1.0
        hours = range(24) if kind == "long_term" else range(7, 19)
        for j, d_i in enumerate(use):
            expected_rows.append((loc, day_index[d_i], float(mu[j])))
            parts = [totals[j]] if len(members_of[loc]) == 1 else [
                int(round(totals[j] * shares)), totals[j] - int(round(totals[j] * shares))]
            missing = kind == "long_term" and r.random() < cfg.missing_hour_rate
            drop_hour = int(r.integers(24)) if missing else -1
            for sid, part in zip(members_of[loc], parts):
                split = _split_hours(int(part))
                for h in hours:
                    if h == drop_hour:
                        continue
                    count_rows.append((sid, day_index[d_i] + pd.Timedelta(hours=h), int(split[h])))
    counts = pd.DataFrame(count_rows, columns=SCHEMAS["counts"])
    counts["timestamp"] = pd.to_datetime(counts["timestamp"])
    counts = counts.sort_values(["station_id", "timestamp"], kind="mergesort").reset_index(drop=True)
    expected = pd.DataFrame(expected_rows, columns=["location_id", "date", "expected"])

    strava_segments = _strava_segments(rng("strava_segments"), graph, city, center, day_index, day_factor)
    strava_hexagons = _strava_hexagons(rng("strava_hexagons"), grid, city, center, cfg, day_index, day_factor)
    poi = _poi(rng("poi"), city, center, cfg)
    areas, socio = _planning_areas(rng("areas"), city, center, cfg, locations)
    motorized = _motorized(rng("motorized"), graph, day_index, cfg.n_detectors)
    trips, snapshots = _bikeshare(rng("bikeshare"), graph, city, center, cfg, dates, day_factor)

    bundle = SourceBundle(
        meta=meta, stations=stations, counts=counts, weather=weather, planning_areas=areas, socio=socio,
        poi=poi, motorized=motorized, holidays=holidays, strava_segments=strava_segments,
        strava_hexagons=strava_hexagons, street_graph=graph, trips=trips, snapshots=snapshots,
    )
    truth = GroundTruth(
        intercept=intercept, intensity_exponent=exponent, coefficients=dict(COEFFICIENTS),
        noise_sd=cfg.noise_sd, location_effects=effects, bumps=city.bumps, expected=expected,
    )
    return bundle, truth


def _strava_segments(rng, graph, city, center, days, factor) -> pd.DataFrame:
    mids = []
    for e in graph.edges:
        mids.append(segment_midpoint(e.segment))
    x, y = to_local_km([m.lat for m in mids], [m.lon for m in mids], center)
    level = 30.0 * city.intensity(x, y) * np.exp(rng.normal(0, 0.25, len(mids)))
    lam = np.outer(factor, level)
    total = rng.poisson(lam).astype(float)
    ebike = rng.binomial(total.astype(np.int64), 0.03)
    weekday = (days.weekday < 5)[:, None] if len(days) else np.zeros((0, 1), dtype=bool)
    commute = total * np.where(weekday, 0.6, 0.2)
    cols = {
        "trip_count": _round5(total),
        "non_ebike_count": _round5(total - ebike),
        "ebike_count": _round5(ebike),
        "commute_count": _round5(commute),
        "leisure_count": _round5(total - commute),
        "morning_count": _round5(total * 0.3),
        "evening_count": _round5(total * 0.35),
        "avg_speed": np.round(18.0 + rng.normal(0, 1.5, total.shape), 2),
    }
    d_idx, e_idx = np.nonzero(cols["trip_count"] > 0)
    df = pd.DataFrame({
        "segment_id": np.array([e.id for e in graph.edges], dtype=object)[e_idx],
        "date": days[d_idx] if len(days) else pd.DatetimeIndex([]),
        **{k: v[d_idx, e_idx] for k, v in cols.items()},
    })
    return df.loc[:, SCHEMAS["strava_segments"]]


def _strava_hexagons(rng, grid, city, center, cfg, days, factor) -> pd.DataFrame:
    reach = int(math.ceil(cfg.extent_km / grid.size_km)) + 1
    cells = []
    for q in range(-reach, reach + 1):
        for r in range(-reach, reach + 1):
            c = hex_center(HexCell(q, r, grid))
            x, y = to_local_km(c.lat, c.lon, center)
            if abs(x) <= cfg.extent_km / 2 + grid.size_km and abs(y) <= cfg.extent_km / 2 + grid.size_km:
                cells.append((q, r, float(x), float(y)))
    qs = np.array([c[0] for c in cells])
    rs = np.array([c[1] for c in cells])
    level = 120.0 * city.intensity([c[2] for c in cells], [c[3] for c in cells])
    level = level * np.exp(rng.normal(0, 0.25, len(cells)))
    total = rng.poisson(np.outer(factor, level)).astype(float)
    weekday = (days.weekday < 5)[:, None] if len(days) else np.zeros((0, 1), dtype=bool)
    commute = total * np.where(weekday, 0.6, 0.2)
    cols = {
        "trip_count": _round5(total),
        "commute_count": _round5(commute),
        "leisure_count": _round5(total - commute),
        "avg_speed": np.round(17.5 + rng.normal(0, 1.0, total.shape), 2),
    }
    d_idx, c_idx = np.nonzero(cols["trip_count"] > 0)
    df = pd.DataFrame({
        "q": qs[c_idx], "r": rs[c_idx],
        "date": days[d_idx] if len(days) else pd.DatetimeIndex([]),
        **{k: v[d_idx, c_idx] for k, v in cols.items()},
    })
    return df.loc[:, SCHEMAS["strava_hexagons"]]


def _poi(rng, city, center, cfg) -> pd.DataFrame:
    half = cfg.extent_km / 2
    rows = []
    weights = {"shop": 0.6, "education": 0.2, "hotel": 0.15, "hospital": 0.05}
    types = list(weights)
    probs = np.array(list(weights.values()))
    k = 0
    while k < cfg.n_poi:
        x, y = rng.uniform(-half, half, 2)
        # thinning: denser where the intensity surface is high
        if rng.random() * 4.0 > city.intensity(x, y):
            continue
        lat, lon = from_local_km(x, y, center)
        rows.append((f"p{k:04d}", types[int(rng.choice(len(types), p=probs))], round(float(lat), 6),
                     round(float(lon), 6)))
        k += 1
    # industry sits in an outlying estate beyond every station's largest POI radius
    for j in range(5):
        lat, lon = from_local_km(half + 6.5 + 0.2 * j, -half - 6.5, center)
        rows.append((f"p{k + j:04d}", "industry", round(float(lat), 6), round(float(lon), 6)))
    assert set(POI_TYPES) >= {t for _, t, _, _ in rows}
    return pd.DataFrame(rows, columns=SCHEMAS["poi"])


def _planning_areas(rng, city, center, cfg, locations):
    n = 3
    half = cfg.extent_km / 2
    edges = np.linspace(-half, half, n + 1)
    rows = []
    boxes = []
    for i in range(n):
        for j in range(n):
            x0, x1, y0, y1 = edges[i], edges[i + 1], edges[j], edges[j + 1]
            la0, lo0 = from_local_km(x0, y0, center)
            la1, lo1 = from_local_km(x1, y1, center)
            la0, lo0, la1, lo1 = (round(float(v), 7) for v in (la0, lo0, la1, lo1))
            wkt = f"POLYGON (({lo0} {la0}, {lo1} {la0}, {lo1} {la1}, {lo0} {la1}, {lo0} {la0}))"
            area = (x1 - x0) * (y1 - y0)
            shares = rng.dirichlet(np.ones(len(LANDUSE_COLUMNS)))
            shares[LANDUSE_COLUMNS.index("horticulture_km2")] = 0.0
            used = rng.uniform(0.85, 1.0)
            landuse = np.round(shares / shares.sum() * used * area, 4)
            aid = f"A{i * n + j + 1:02d}"
            rows.append({"area_id": aid, "wkt": wkt, "area_km2": round(area, 4),
                         **dict(zip(LANDUSE_COLUMNS, landuse))})
            boxes.append((aid, x0, x1, y0, y1))
    areas = pd.DataFrame(rows, columns=SCHEMAS["planning_areas"])

    # the area holding the first long-term station publishes no socioeconomic data
    x, y = to_local_km(locations[0][1].lat, locations[0][1].lon, center)
    # boundary streets may bend slightly outside the grid
    x, y = float(np.clip(x, -half, half)), float(np.clip(y, -half, half))
    missing = next(a for a, x0, x1, y0, y1 in boxes if x0 <= x <= x1 and y0 <= y <= y1)
    socio_rows = []
    for aid, x0, x1, y0, y1 in boxes:
        if aid == missing:
            continue
        level = float(city.intensity((x0 + x1) / 2, (y0 + y1) / 2))
        base = {
            "population_density": 3000 + 2500 * level + rng.normal(0, 400),
            "inhabitants": 20000 + 15000 * level + rng.normal(0, 3000),
            "average_age": 44 - 2 * level + rng.normal(0, 1),
            "share_female": 50 + rng.normal(0, 1),
            "share_migration": 25 + 5 * level + rng.normal(0, 3),
            "share_foreigners": 15 + 4 * level + rng.normal(0, 2),
            "share_unemployed": 6 + rng.normal(0, 1.5),
            "share_tenure_5y": 45 + rng.normal(0, 5),
            "moving_in_rate": 10 + 2 * level + rng.normal(0, 1),
            "moving_out_rate": 9 + 2 * level + rng.normal(0, 1),
            "share_under_18": 16 + rng.normal(0, 2),
            "share_over_65": 20 - 2 * level + rng.normal(0, 2),
            "greying_index": 110 - 10 * level + rng.normal(0, 8),
            "birth_rate": 10 + rng.normal(0, 1),
        }
        for year, drift in ((2019, 1.0), (2020, 1.0 + rng.normal(0.01, 0.01))):
            socio_rows.append({"area_id": aid, "year": year,
                               **{k: round(float(v * drift), 3) for k, v in base.items()}})
    socio = pd.DataFrame(socio_rows, columns=SCHEMAS["socio"])
    assert list(base) == SOCIO_COLUMNS
    return areas, socio


def _motorized(rng, graph, days, n_detectors) -> pd.DataFrame:
    n_nodes = len(graph.nodes)
    picks = rng.choice(n_nodes, size=min(n_detectors, n_nodes), replace=False)
    rows = []
    for k, node in enumerate(picks):
        p = graph.nodes[int(node)]
        base = rng.uniform(8000, 40000)
        for d in days:
            if rng.random() < 0.05:
                continue
            weekday = 1.0 if d.weekday() < 5 else 0.7
            veh = base * weekday * rng.lognormal(0, 0.08)
            rows.append({
                "detector_id": f"m{k:02d}", "lat": p.lat, "lon": p.lon, "date": d,
                "vehicles_volume": round(veh), "cars_volume": round(veh * 0.88), "lorries_volume": round(veh * 0.07),
                "vehicles_speed": round(float(rng.normal(42, 4)), 1),
                "cars_speed": round(float(rng.normal(44, 4)), 1),
                "lorries_speed": round(float(rng.normal(38, 4)), 1),
            })
    df = pd.DataFrame(rows, columns=SCHEMAS["motorized"])
    df["date"] = pd.to_datetime(df["date"])
    return df


def _bikeshare(rng, graph, city, center, cfg, dates, factor):
    node_lat = np.array([p.lat for p in graph.nodes])
    node_lon = np.array([p.lon for p in graph.nodes])
    nx_, ny_ = to_local_km(node_lat, node_lon, center)
    weight = city.intensity(nx_, ny_)
    weight = weight / weight.sum()
    trips: list[Trip] = []
    k = 0

    def jitter(i):
        dx, dy = rng.normal(0, 0.04, 2)
        lat, lon = from_local_km(nx_[i] + dx, ny_[i] + dy, center)
        return GeoPoint(round(float(lat), 6), round(float(lon), 6))

    for d_i, day in enumerate(dates):
        n = int(rng.poisson(cfg.trips_per_day * factor[d_i]))
        midnight = dt.datetime.combine(day, dt.time())
        for _ in range(n):
            a = int(rng.choice(len(weight), p=weight))
            dist = np.hypot(nx_ - nx_[a], ny_ - ny_[a])
            w = weight * np.exp(-dist / 2.0)
            w[a] = 0.0
            b = int(rng.choice(len(w), p=w / w.sum()))
            origin, dest = jitter(a), jitter(b)
            km = 1.3 * float(dist[b])
            speed = float(np.clip(rng.normal(13, 3), 6, 25))
            minutes = max(2, int(round(km / speed * 60)) + 1)
            kind = rng.random()
            if kind < cfg.violator_share:
                sub = int(rng.integers(5))
                if sub == 0:  # too short: returned almost where it was rented
                    dest = GeoPoint(round(origin.lat + 0.0002, 6), origin.lon)
                elif sub == 1:  # under two minutes
                    minutes = 1
                elif sub == 2:  # forgotten rental
                    minutes = int(rng.integers(700, 1400))
                elif sub == 3:  # too slow for the distance
                    minutes = max(minutes, int(km / 1.0 * 60) + 5)
                else:  # implausibly fast
                    minutes = max(1, int(km / 60.0 * 60))
            start = midnight + dt.timedelta(minutes=int(rng.integers(6 * 60, 22 * 60)))
            trips.append(Trip(f"b{k:06d}", origin, dest, start, start + dt.timedelta(minutes=minutes)))
            k += 1

    snapshots: list[AvailabilitySnapshot] = []
    if trips and cfg.snapshot_minutes > 1:
        t0 = dt.datetime.combine(dates[0], dt.time(7, 0))
        t1 = t0 + dt.timedelta(minutes=cfg.snapshot_minutes)
        covered = [t for t in trips if t.start >= t0 and t.end <= t1 and (t.end - t.start).total_seconds() >= 120]
        if covered:
            ids = {id(t) for t in covered}
            trips = [t for t in trips if id(t) not in ids]
            idle = {f"idle{j:02d}": jitter(int(rng.choice(len(weight), p=weight))) for j in range(10)}
            for m in range(cfg.snapshot_minutes + 1):
                ts = t0 + dt.timedelta(minutes=m)
                bikes = dict(idle)
                for t in covered:
                    if ts <= t.start:
                        bikes[t.bike_id] = t.origin
                    elif ts >= t.end:
                        bikes[t.bike_id] = t.destination
                snapshots.append(AvailabilitySnapshot(ts, bikes))
    trips.sort(key=lambda t: (t.start, t.bike_id))
    return trips, snapshots
