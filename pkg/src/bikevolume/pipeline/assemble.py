"""Join targets and every feature family into one station-day table."""

from __future__ import annotations

import pandas as pd

from ..core import Window, aggregate_daily, combine_directional_counters
from ..errors import BikeVolumeError
from ..ingest.bundle import SourceBundle
from ..ingest.trips import Trip
from . import features as F
from .table import FeatureTable


def daily_targets(bundle: SourceBundle, window: Window) -> pd.DataFrame:
    """(station_id, date, target) per counting location, directional counters summed."""
    obs = aggregate_daily(bundle.counts, window)
    groups = bundle.stations.groupby("location_id", sort=True)["station_id"].apply(set).to_dict()
    combined = combine_directional_counters(obs, groups)
    df = pd.DataFrame(
        [(o.station_id, o.date, o.count) for o in combined], columns=["station_id", "date", "target"]
    )
    df["date"] = pd.to_datetime(df["date"])
    df["target"] = df["target"].astype(float)
    return df


def locations(bundle: SourceBundle) -> pd.DataFrame:
    st = bundle.stations.sort_values(["location_id", "station_id"], kind="mergesort")
    first = st.drop_duplicates("location_id")
    return pd.DataFrame({
        "station_id": first["location_id"].to_numpy(dtype=object),
        "lat": first["lat"].to_numpy(float),
        "lon": first["lon"].to_numpy(float),
        "kind": first["kind"].to_numpy(dtype=object),
    }).reset_index(drop=True)


def feature_groups(cfg: F.FeatureConfig) -> dict:
    """Column -> group in declaration order (earlier columns win correlation ties)."""
    groups = {}
    for group, names in (
        ("Crowdsourced", F.strava_names(cfg.strava_radii)),
        ("BikeSharing", F.bikeshare_names(cfg.bikeshare_radii)),
        ("Motorized", F.motorized_names()),
        ("Infrastructure", F.infrastructure_names(cfg.poi_radii)),
        ("Socioeconomic", F.socio_names()),
        ("Weather", F.weather_names()),
        ("Holiday", F.HOLIDAY_NAMES),
        ("Time", F.TIME_NAMES),
    ):
        for n in names:
            groups[n] = group
    return groups


def location_date_features(bundle: SourceBundle, trips: list[Trip], locs: pd.DataFrame, dates,
                           cfg: F.FeatureConfig | None = None) -> pd.DataFrame:
    """Every feature for every (location, date) combination, keyed by station_id and date."""
    cfg = cfg or F.FeatureConfig()
    days = pd.DatetimeIndex(sorted(pd.to_datetime(pd.Series(list(dates))).dt.normalize().unique()))
    step = cfg.densify_step
    base = F.strava_frame(bundle.strava_segments, bundle.strava_hexagons, bundle.street_graph, bundle.meta.hex_grid,
                          locs, days, cfg.strava_radii, step)
    bs = F.bikeshare_frame(trips, locs, days, cfg.bikeshare_radii, step)
    mo = F.motorized_frame(bundle.motorized, locs, days, cfg.motor_radius)
    keys = ["station_id", "date"]
    out = base.merge(bs, on=keys, how="left", validate="one_to_one")
    out = out.merge(mo, on=keys, how="left", validate="one_to_one")
    static = F.static_frame(bundle, locs, cfg.poi_radii, step)
    out = out.merge(static.drop(columns=["area_id"]), on="station_id", how="left", validate="many_to_one")
    out["_year"] = out["date"].dt.year
    socio = F.socio_frame(bundle.socio, static, days.year.unique()).rename(columns={"year": "_year"})
    out = out.merge(socio, on=["station_id", "_year"], how="left", validate="many_to_one")
    out = out.merge(F.weather_frame(bundle.weather, days), on="date", how="left", validate="many_to_one")
    out = out.merge(F.time_holiday_frame(days, bundle.holidays), on="date", how="left", validate="many_to_one")
    return out.drop(columns=["_year"])


def assemble(bundle: SourceBundle, trips: list[Trip], window: Window = Window.FULL_DAY,
             cfg: F.FeatureConfig | None = None) -> FeatureTable:
    """One row per location-date with a complete count for ``window``, all feature families joined."""
    cfg = cfg or F.FeatureConfig()
    window = Window(window)
    targets = daily_targets(bundle, window)
    locs = locations(bundle)
    kind = dict(zip(locs["station_id"], locs["kind"]))
    targets["kind"] = targets["station_id"].map(kind)
    if targets.duplicated(["station_id", "date"]).any():
        raise BikeVolumeError("duplicate station-date rows while assembling", code="internal_error")
    groups = feature_groups(cfg)
    feats = location_date_features(bundle, trips, locs[locs["station_id"].isin(targets["station_id"])],
                                   targets["date"], cfg)
    frame = targets.merge(feats, on=["station_id", "date"], how="left", validate="one_to_one")
    frame = frame.sort_values(["station_id", "date"], kind="mergesort").reset_index(drop=True)
    if len(frame) != len(targets):
        raise BikeVolumeError("row count changed while joining features", code="internal_error")
    for c in groups:
        frame[c] = frame[c].astype(float)
    by_kind = {k: sorted(g["station_id"].astype(str)) for k, g in locs.groupby("kind", sort=True)}
    meta = {"n_trips": len(trips), "locations": by_kind, "feature_config": {
        "bikeshare_radii": list(cfg.bikeshare_radii), "strava_radii": list(cfg.strava_radii),
        "poi_radii": list(cfg.poi_radii), "motor_radius": cfg.motor_radius, "densify_step": cfg.densify_step,
    }}
    return FeatureTable(frame, groups, window, meta)


def prediction_frame(bundle: SourceBundle, trips: list[Trip], points: pd.DataFrame, date,
                     cfg: F.FeatureConfig | None = None) -> pd.DataFrame:
    """Feature rows for arbitrary points (station_id, lat, lon) on one date."""
    feats = location_date_features(bundle, trips, points, [date], cfg)
    order = {s: i for i, s in enumerate(points["station_id"])}
    return feats.sort_values("station_id", key=lambda s: s.map(order), kind="mergesort").reset_index(drop=True)
