from .bundle import (
    BundleMeta,
    SourceBundle,
    empty_table,
    load_bundle,
    map_socio_year,
    read_table,
    read_trips,
    save_bundle,
    validate_bundle,
    write_table,
    write_trips,
)
from .graph import StreetEdge, StreetGraph, route_trip
from .schemas import FILES, SCHEMAS, schema_text
from .synthetic import GroundTruth, SyntheticConfig, generate_synthetic_city
from .trips import AvailabilitySnapshot, Trip, read_snapshots, reconstruct_trips, write_snapshots

__all__ = [
    "AvailabilitySnapshot",
    "BundleMeta",
    "FILES",
    "GroundTruth",
    "SCHEMAS",
    "SourceBundle",
    "StreetEdge",
    "StreetGraph",
    "SyntheticConfig",
    "Trip",
    "empty_table",
    "generate_synthetic_city",
    "load_bundle",
    "map_socio_year",
    "read_snapshots",
    "read_table",
    "read_trips",
    "reconstruct_trips",
    "route_trip",
    "save_bundle",
    "schema_text",
    "validate_bundle",
    "write_snapshots",
    "write_table",
    "write_trips",
]
