"""CSV column contracts for every tabular source."""

from ..errors import ConfigError

WEATHER_COLUMNS = ["tavg", "tmin", "tmax", "prcp", "snow", "wdir", "wspd", "wpgt", "pres", "tsun"]

LANDUSE_COLUMNS = [
    "farming_km2", "horticulture_km2", "cemeteries_km2", "waterways_km2", "industry_km2",
    "gardening_km2", "parks_km2", "traffic_km2", "forest_km2", "residential_km2",
]

SOCIO_COLUMNS = [
    "population_density", "inhabitants", "average_age", "share_female", "share_migration",
    "share_foreigners", "share_unemployed", "share_tenure_5y", "moving_in_rate",
    "moving_out_rate", "share_under_18", "share_over_65", "greying_index", "birth_rate",
]

POI_TYPES = ["shop", "education", "hotel", "hospital", "industry"]

MOTOR_COLUMNS = [
    "vehicles_volume", "cars_volume", "lorries_volume",
    "vehicles_speed", "cars_speed", "lorries_speed",
]

STRAVA_SEGMENT_COLUMNS = [
    "trip_count", "non_ebike_count", "ebike_count", "commute_count", "leisure_count",
    "morning_count", "evening_count", "avg_speed",
]

STRAVA_HEX_COLUMNS = ["trip_count", "commute_count", "leisure_count", "avg_speed"]

SCHEMAS = {
    "stations": ["station_id", "location_id", "lat", "lon", "kind", "installed_year"],
    "counts": ["station_id", "timestamp", "count"],
    "weather": ["date", *WEATHER_COLUMNS],
    "planning_areas": ["area_id", "wkt", "area_km2", *LANDUSE_COLUMNS],
    "socio": ["area_id", "year", *SOCIO_COLUMNS],
    "poi": ["poi_id", "type", "lat", "lon"],
    "motorized": ["detector_id", "lat", "lon", "date", *MOTOR_COLUMNS],
    "holidays": ["date", "school", "public"],
    "strava_segments": ["segment_id", "date", *STRAVA_SEGMENT_COLUMNS],
    "strava_hexagons": ["q", "r", "date", *STRAVA_HEX_COLUMNS],
    "trips": ["bike_id", "origin_lat", "origin_lon", "dest_lat", "dest_lon", "start", "end"],
    "routed_trips": [
        "bike_id", "origin_lat", "origin_lon", "dest_lat", "dest_lon", "start", "end",
        "routed_distance", "unroutable", "route",
    ],
}

FILES = {
    "stations": "stations.csv",
    "counts": "counts.csv",
    "weather": "weather.csv",
    "planning_areas": "planning_areas.csv",
    "socio": "socio.csv",
    "poi": "poi.csv",
    "motorized": "motorized.csv",
    "holidays": "holidays.csv",
    "strava_segments": "strava_segments.csv",
    "strava_hexagons": "strava_hexagons.csv",
    "trips": "trips.csv",
}

NON_TABULAR = {
    "street_graph": "street_graph.geojson (FeatureCollection of LineStrings; properties id, bicycle, maxspeed, lane_type)",
    "snapshots": "snapshots.ndjson (one object per line: {ts, bikes: [{id, lat, lon}]})",
    "bundle": "bundle.json (study_periods, city_center, hex_grid, metadata)",
}


def schema_text(source: str) -> str:
    if source in SCHEMAS:
        return ",".join(SCHEMAS[source])
    if source in NON_TABULAR:
        return NON_TABULAR[source]
    raise ConfigError(f"unknown source {source!r}; choose from {sorted(SCHEMAS) + sorted(NON_TABULAR)}",
                      code="unknown_source")
