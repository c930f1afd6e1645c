"""Routing and plausibility filtering of bike-share trips."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

from ..errors import ConfigError, DataError
from ..ingest.graph import StreetGraph, route_trip
from ..ingest.trips import Trip


@dataclass(frozen=True)
class CleaningRules:
    min_distance: float = 100.0  # m
    max_distance: float = 45_000.0  # m
    min_duration: float = 120.0  # s
    max_duration: float = 36_000.0  # s
    min_speed: float = 2.0  # km/h
    max_speed: float = 40.0  # km/h

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ConfigError(f"cleaning threshold {f.name} must be positive")
        for lo, hi in (("min_distance", "max_distance"), ("min_duration", "max_duration"), ("min_speed", "max_speed")):
            if not getattr(self, lo) < getattr(self, hi):
                raise ConfigError(f"{lo} must be below {hi}")

    @classmethod
    def from_dict(cls, d: dict | None) -> "CleaningRules":
        d = dict(d or {})
        unknown = sorted(set(d) - {f.name for f in fields(cls)})
        if unknown:
            raise ConfigError(f"unknown cleaning thresholds {unknown}")
        return cls(**{k: float(v) for k, v in d.items()})

    def checks(self):
        """(rule name, predicate flagging a violation), in attribution order."""
        return [
            ("min_distance", lambda t: t.routed_distance < self.min_distance),
            ("max_distance", lambda t: t.routed_distance > self.max_distance),
            ("min_duration", lambda t: t.duration < self.min_duration),
            ("max_duration", lambda t: t.duration > self.max_duration),
            ("min_speed", lambda t: t.mean_speed < self.min_speed),
            ("max_speed", lambda t: t.mean_speed > self.max_speed),
        ]


RULE_ORDER = ("unroutable", "min_distance", "max_distance", "min_duration", "max_duration", "min_speed", "max_speed")


@dataclass
class RemovalReport:
    input_count: int
    removed: dict  # rule -> count, in RULE_ORDER
    remaining: int
    rules: CleaningRules

    @property
    def percentages(self) -> dict:
        total = self.input_count
        return {k: (100.0 * v / total if total else 0.0) for k, v in self.removed.items()}

    def to_dict(self) -> dict:
        pct = self.percentages
        return {
            "input_count": self.input_count,
            "remaining": self.remaining,
            "removed": [{"rule": k, "count": v, "percent": pct[k]} for k, v in self.removed.items()],
            "rules": asdict(self.rules),
        }

    def to_json(self, path, metadata: dict | None = None) -> None:
        obj = self.to_dict()
        if metadata:
            obj["metadata"] = metadata
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(obj, fh, indent=2)
            fh.write("\n")


def route_trips(graph: StreetGraph, trips: list[Trip]) -> list[Trip]:
    return [route_trip(graph, t) for t in trips]


def clean_trips(trips: list[Trip], rules: CleaningRules | None = None) -> tuple[list[Trip], RemovalReport]:
    """Drop implausible trips; each removal is charged to the first rule it breaks.

    Trips the router could not connect are removed first under their own
    ``unroutable`` bucket. Percentages are relative to the input count.
    """
    rules = rules or CleaningRules()
    removed = {k: 0 for k in RULE_ORDER}
    kept = []
    checks = rules.checks()
    for i, t in enumerate(trips):
        if t.unroutable:
            removed["unroutable"] += 1
            continue
        if t.routed_distance is None:
            raise DataError(f"trip {i} of bike {t.bike_id} has not been routed", code="precondition", index=i)
        for name, violates in checks:
            if violates(t):
                removed[name] += 1
                break
        else:
            kept.append(t)
    report = RemovalReport(len(trips), removed, len(kept), rules)
    assert report.remaining + sum(removed.values()) == report.input_count
    return kept, report
