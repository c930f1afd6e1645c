"""The station-day design matrix and its on-disk form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..core import Window
from ..errors import DataError

GROUPS = (
    "Crowdsourced",
    "Infrastructure",
    "Weather",
    "Socioeconomic",
    "BikeSharing",
    "Holiday",
    "Motorized",
    "Time",
)
KEY_COLUMNS = ["station_id", "date", "kind", "target"]


@dataclass
class FeatureTable:
    """Rows are (station, date); ``groups`` maps every feature column to its source group.

    ``groups`` preserves declaration order, which decides which member of a
    highly correlated pair survives preprocessing.
    """

    frame: pd.DataFrame
    groups: dict
    window: Window = Window.FULL_DAY
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.window = Window(self.window)
        missing = [c for c in KEY_COLUMNS if c not in self.frame.columns]
        if missing:
            raise DataError(f"feature table lacks key columns {missing}", code="schema_mismatch")
        cols = list(self.groups)
        if len(set(cols)) != len(cols):
            raise DataError("feature names must be unique", code="schema_mismatch")
        extra = [c for c in self.frame.columns if c not in self.groups and c not in KEY_COLUMNS]
        absent = [c for c in cols if c not in self.frame.columns]
        if extra or absent:
            raise DataError(f"columns {extra or absent} are not covered by the group map", code="schema_mismatch")
        bad = {g for g in self.groups.values() if g not in GROUPS}
        if bad:
            raise DataError(f"unknown feature groups {sorted(bad)}", code="schema_mismatch")
        self.frame = self.frame.loc[:, KEY_COLUMNS + cols].reset_index(drop=True)

    @property
    def features(self) -> list[str]:
        return list(self.groups)

    @property
    def X(self) -> pd.DataFrame:
        return self.frame.loc[:, self.features]

    @property
    def y(self) -> np.ndarray:
        return self.frame["target"].to_numpy(dtype=float)

    @property
    def stations(self) -> np.ndarray:
        return self.frame["station_id"].to_numpy(dtype=object)

    @property
    def dates(self) -> pd.Series:
        return self.frame["date"]

    def __len__(self) -> int:
        return len(self.frame)

    def columns_of(self, group: str) -> list[str]:
        return [c for c, g in self.groups.items() if g == group]

    def group_set(self) -> set:
        return set(self.groups.values())

    def take(self, rows) -> "FeatureTable":
        rows = np.asarray(rows)
        if rows.dtype == bool:
            rows = np.flatnonzero(rows)
        return FeatureTable(self.frame.iloc[rows].reset_index(drop=True), dict(self.groups), self.window,
                            dict(self.meta))

    def of_kind(self, kind: str) -> "FeatureTable":
        return self.take((self.frame["kind"] == kind).to_numpy())

    def with_features(self, frame_features: pd.DataFrame, groups: dict | None = None) -> "FeatureTable":
        groups = groups if groups is not None else {c: self.groups[c] for c in frame_features.columns}
        frame = pd.concat([self.frame.loc[:, KEY_COLUMNS], frame_features.reset_index(drop=True)], axis=1)
        return FeatureTable(frame, groups, self.window, dict(self.meta))

    def manifest(self) -> dict:
        return {"window": self.window.value, "groups": self.groups, "meta": self.meta}

    def to_csv(self, path, metadata: dict | None = None) -> Path:
        """Write the table plus ``<path>.manifest.json``; returns the manifest path."""
        path = Path(path)
        out = self.frame.copy()
        out["date"] = pd.to_datetime(out["date"]).dt.strftime("%Y-%m-%d")
        out.to_csv(path, index=False, lineterminator="\n")
        man = self.manifest()
        if metadata:
            man["metadata"] = metadata
        mpath = path.with_name(path.name + ".manifest.json")
        with open(mpath, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(man, fh, indent=2)
            fh.write("\n")
        return mpath

    @classmethod
    def read_csv(cls, path) -> "FeatureTable":
        path = Path(path)
        mpath = path.with_name(path.name + ".manifest.json")
        if not mpath.exists():
            raise DataError(f"manifest {mpath} not found next to the feature table", code="missing_file",
                            file=str(mpath))
        with open(mpath, encoding="utf-8") as fh:
            man = json.load(fh)
        frame = pd.read_csv(path, dtype={"station_id": str, "kind": str})
        frame["date"] = pd.to_datetime(frame["date"], format="%Y-%m-%d")
        return cls(frame, dict(man["groups"]), Window(man["window"]), man.get("meta", {}))
