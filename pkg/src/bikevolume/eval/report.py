"""Per-station and aggregate error reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd


@dataclass(frozen=True)
class StationScore:
    station_id: str
    n_test_rows: int
    mae: float
    smape: float


@dataclass
class EvaluationReport:
    """Scores per station; the aggregate weighs every station equally."""

    protocol: str
    window: str
    scale: str
    stations: list[StationScore]
    excluded: list[dict] = field(default_factory=list)
    folds: list[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.stations = sorted(self.stations, key=lambda s: s.station_id)

    @property
    def aggregate_mae(self) -> float:
        return float(np.mean([s.mae for s in self.stations])) if self.stations else float("nan")

    @property
    def aggregate_smape(self) -> float:
        return float(np.mean([s.smape for s in self.stations])) if self.stations else float("nan")

    def station(self, station_id) -> StationScore:
        for s in self.stations:
            if s.station_id == station_id:
                return s
        raise KeyError(station_id)

    def frame(self) -> pd.DataFrame:
        """One row per station with flags for errors more than one standard deviation from the mean."""
        df = pd.DataFrame([s.__dict__ for s in self.stations], columns=["station_id", "n_test_rows", "mae", "smape"])
        for col in ("smape", "mae"):
            v = df[col].to_numpy(dtype=float)
            sd = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
            df[f"{col}_outlier"] = (np.abs(v - v.mean()) > sd).astype(int) if len(v) > 1 else 0
        return df.loc[:, ["station_id", "smape", "mae", "n_test_rows", "smape_outlier", "mae_outlier"]]

    def to_dict(self, include_folds: bool = True) -> dict:
        out = {
            "protocol": self.protocol,
            "window": self.window,
            "scale": self.scale,
            "aggregate": {"mae": self.aggregate_mae, "smape": self.aggregate_smape,
                          "n_stations": len(self.stations)},
            "stations": [s.__dict__ for s in self.stations],
            "excluded": self.excluded,
        }
        if self.extra:
            out["extra"] = self.extra
        if include_folds and self.folds:
            out["folds"] = self.folds
        return out

    def to_json(self, path, metadata: dict | None = None, include_folds: bool = True) -> None:
        obj = self.to_dict(include_folds)
        if metadata:
            obj["metadata"] = metadata
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path) -> None:
        self.frame().to_csv(path, index=False, lineterminator="\n")

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(d["protocol"], d["window"], d["scale"], [StationScore(**s) for s in d["stations"]],
                   d.get("excluded", []), d.get("folds", []), d.get("extra", {}))
