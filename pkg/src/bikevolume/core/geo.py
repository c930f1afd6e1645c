"""Spherical distance helpers and street geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"invalid coordinates: lat={self.lat}, lon={self.lon}")


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on a sphere of radius 6,371 km."""
    if a.lat == b.lat and a.lon == b.lon:
        return 0.0
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(min(1.0, h)))


def haversine_array(lat1, lon1, lat2, lon2):
    """Broadcasting variant of :func:`haversine_distance` over numpy arrays."""
    lat1, lon1, lat2, lon2 = (np.radians(np.asarray(v, dtype=float)) for v in (lat1, lon1, lat2, lon2))
    h = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.minimum(1.0, h)))


def polyline_length(points: Sequence[GeoPoint]) -> float:
    return float(sum(haversine_distance(p, q) for p, q in zip(points[:-1], points[1:])))


@dataclass(frozen=True)
class StreetSegment:
    """A street between two intersections.

    ``length`` is derived from the polyline when omitted; a supplied value must
    agree with the haversine sum to 1e-6 relative.
    """

    id: str
    polyline: tuple
    length: float = field(default=None)

    def __post_init__(self):
        pts = tuple(self.polyline)
        if len(pts) < 2:
            raise ValueError(f"segment {self.id!r} needs at least 2 points")
        object.__setattr__(self, "polyline", pts)
        computed = polyline_length(pts)
        if self.length is None:
            object.__setattr__(self, "length", computed)
        elif not math.isclose(self.length, computed, rel_tol=1e-6, abs_tol=1e-9):
            raise ValueError(
                f"segment {self.id!r} length {self.length} disagrees with polyline ({computed})"
            )


def point_along(points: Sequence[GeoPoint], distance: float) -> GeoPoint:
    """Point at ``distance`` meters along a polyline, interpolated linearly on its edge."""
    remaining = distance
    for p, q in zip(points[:-1], points[1:]):
        d = haversine_distance(p, q)
        if remaining <= d and d > 0:
            t = remaining / d
            return GeoPoint(p.lat + t * (q.lat - p.lat), p.lon + t * (q.lon - p.lon))
        remaining -= d
    return points[-1]


def segment_midpoint(segment: StreetSegment) -> GeoPoint:
    return point_along(segment.polyline, segment.length / 2.0)


def densify(points: Sequence[GeoPoint], step: float = 25.0) -> np.ndarray:
    """Return an (n, 2) lat/lon array with vertices plus fill points at most ``step`` m apart."""
    out = [(points[0].lat, points[0].lon)]
    for p, q in zip(points[:-1], points[1:]):
        n = max(1, int(math.ceil(haversine_distance(p, q) / step)))
        t = np.arange(1, n + 1) / n
        out.extend(zip(p.lat + t * (q.lat - p.lat), p.lon + t * (q.lon - p.lon)))
    return np.asarray(out, dtype=float)


def to_local_km(lat, lon, origin: GeoPoint):
    """Equirectangular offsets (east, north) in km from ``origin``."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    r_km = EARTH_RADIUS_M / 1000.0
    x = np.radians(lon - origin.lon) * r_km * math.cos(math.radians(origin.lat))
    y = np.radians(lat - origin.lat) * r_km
    return x, y


def from_local_km(x, y, origin: GeoPoint):
    r_km = EARTH_RADIUS_M / 1000.0
    lat = origin.lat + np.degrees(np.asarray(y, dtype=float) / r_km)
    lon = origin.lon + np.degrees(np.asarray(x, dtype=float) / (r_km * math.cos(math.radians(origin.lat))))
    return lat, lon
