"""Bike-share availability snapshots and trip reconstruction."""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from ..core import GeoPoint
from ..errors import DataError


@dataclass(frozen=True)
class AvailabilitySnapshot:
    timestamp: dt.datetime
    bikes: Mapping[str, GeoPoint]

    @classmethod
    def from_json(cls, line: str, lineno: int | None = None) -> "AvailabilitySnapshot":
        obj = json.loads(line)
        bikes = {}
        for b in obj["bikes"]:
            bid = str(b["id"])
            if bid in bikes:
                raise DataError(f"bike {bid} listed twice in snapshot {obj['ts']}", code="duplicate_row", line=lineno)
            bikes[bid] = GeoPoint(float(b["lat"]), float(b["lon"]))
        return cls(dt.datetime.fromisoformat(obj["ts"]), bikes)

    def to_json(self) -> str:
        bikes = [{"id": b, "lat": p.lat, "lon": p.lon} for b, p in sorted(self.bikes.items())]
        return json.dumps({"ts": self.timestamp.isoformat(timespec="minutes"), "bikes": bikes})


@dataclass(frozen=True)
class Trip:
    bike_id: str
    origin: GeoPoint
    destination: GeoPoint
    start: dt.datetime
    end: dt.datetime
    route: tuple | None = field(default=None, compare=False)
    routed_distance: float | None = None
    unroutable: bool = False

    def __post_init__(self):
        if not self.end > self.start:
            raise ValueError(f"trip of bike {self.bike_id} ends before it starts")

    @property
    def duration(self) -> float:
        """Seconds."""
        return (self.end - self.start).total_seconds()

    @property
    def mean_speed(self) -> float | None:
        """km/h over the routed distance."""
        if self.routed_distance is None:
            return None
        return self.routed_distance / self.duration * 3.6

    @property
    def is_routed(self) -> bool:
        return self.routed_distance is not None or self.unroutable

    def with_route(self, route, distance) -> "Trip":
        return replace(self, route=tuple(route), routed_distance=float(distance), unroutable=False)


def reconstruct_trips(snapshots: Iterable[AvailabilitySnapshot]) -> list[Trip]:
    """Turn a per-minute availability stream into rentals.

    A bike seen at A, then missing from one or more snapshots, then seen again
    at B yields one trip A -> B spanning the last and first sightings. Bikes
    missing at the start or the end of the stream yield nothing.
    """
    last_seen: dict[str, tuple[int, dt.datetime, GeoPoint]] = {}
    trips = []
    prev_ts = None
    for i, snap in enumerate(snapshots):
        if prev_ts is not None and snap.timestamp <= prev_ts:
            raise DataError(
                f"snapshot {snap.timestamp.isoformat()} is not after {prev_ts.isoformat()}",
                code="out_of_order",
            )
        prev_ts = snap.timestamp
        for bike_id, point in snap.bikes.items():
            seen = last_seen.get(bike_id)
            if seen is not None and seen[0] < i - 1:
                trips.append(Trip(bike_id, seen[2], point, seen[1], snap.timestamp))
            last_seen[bike_id] = (i, snap.timestamp, point)
    trips.sort(key=lambda t: (t.start, t.bike_id))
    return trips


def read_snapshots(path) -> list[AvailabilitySnapshot]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    out.append(AvailabilitySnapshot.from_json(line, lineno))
                except (KeyError, ValueError) as exc:
                    if isinstance(exc, DataError):
                        raise
                    raise DataError(f"{path}:{lineno}: bad snapshot ({exc})", code="schema_mismatch",
                                    file=str(path), line=lineno) from exc
    return out


def write_snapshots(snapshots: Iterable[AvailabilitySnapshot], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for snap in snapshots:
            fh.write(snap.to_json() + "\n")
