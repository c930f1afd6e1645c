from .counts import (
    CountObservation,
    Station,
    StationKind,
    Window,
    aggregate_daily,
    aggregate_daily_frame,
    combine_directional_counters,
)
from .geo import (
    EARTH_RADIUS_M,
    GeoPoint,
    StreetSegment,
    densify,
    haversine_array,
    haversine_distance,
    point_along,
    polyline_length,
    segment_midpoint,
)
from .hexgrid import HexCell, HexGrid, hex_center, hex_index, hex_index_array, hex_neighbors
from .seeding import derive_seed

__all__ = [
    "CountObservation",
    "EARTH_RADIUS_M",
    "GeoPoint",
    "HexCell",
    "HexGrid",
    "Station",
    "StationKind",
    "StreetSegment",
    "Window",
    "aggregate_daily",
    "aggregate_daily_frame",
    "combine_directional_counters",
    "densify",
    "derive_seed",
    "haversine_array",
    "haversine_distance",
    "hex_center",
    "hex_index",
    "hex_index_array",
    "hex_neighbors",
    "point_along",
    "polyline_length",
    "segment_midpoint",
]
