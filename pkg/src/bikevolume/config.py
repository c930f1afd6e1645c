"""Run configuration: one YAML file drives every CLI step.

Unset sections fall back to the shipped defaults. Seeds are never implied; a
stochastic step without its seed is a configuration error.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import yaml

from .analysis.sampling import Scenario, Strategy
from .core import Window
from .errors import ConfigError
from .eval.metrics import METRICS
from .eval.protocols import DEFAULT_MIN_AADB_ROWS, SCALES
from .ingest.synthetic import SyntheticConfig
from .model import ModelSpec
from .pipeline.cleaning import CleaningRules
from .pipeline.features import FeatureConfig
from .pipeline.table import GROUPS

SEED_KEYS = ("synth", "model", "importance", "sampling")
_SECTIONS = {"seeds", "paths", "study_periods", "cleaning", "features", "window", "model", "evaluation",
             "importance", "sampling", "synthetic"}


@lru_cache(maxsize=1)
def learner_defaults() -> dict:
    """The versioned defaults file shipped with the package."""
    text = (resources.files("bikevolume") / "data" / "learner_defaults.yaml").read_text(encoding="utf-8")
    return yaml.safe_load(text)


def resolve_model(d: dict | None) -> ModelSpec:
    """Fill a model section from the shipped defaults.

    ``params`` overlay the learner's defaults. ``search.space: default`` and
    ``selection.method: auto`` pick the shipped space and selection method.
    """
    d = dict(d or {})
    defaults = learner_defaults()
    kind = d.get("kind", "regularized_boosting")
    if kind not in defaults["defaults"]:
        raise ConfigError(f"unknown estimator kind {kind!r}", code="invalid_value", field="model.kind")
    params = {**defaults["defaults"][kind], **dict(d.get("params") or {})}
    search = d.get("search")
    if search == "default":
        search = {"space": "default"}
    if search is not None:
        search = dict(search)
        if search.get("space") == "default":
            if kind not in defaults["search_spaces"]:
                raise ConfigError(f"no default search space for {kind!r}", field="model.search")
            search["space"] = defaults["search_spaces"][kind]
    selection = d.get("selection")
    if selection is not None:
        selection = dict(selection)
        if selection.get("method") == "auto":
            metric = selection.pop("metric", "smape")
            try:
                selection["method"] = defaults["feature_selection"][kind][metric]
            except KeyError:
                raise ConfigError(f"no default selection for {kind!r} under {metric!r}",
                                  field="model.selection") from None
    return ModelSpec.from_dict({"kind": kind, "params": params, "selection": selection, "search": search})


def _section(raw: dict, name: str, allowed: set) -> dict:
    d = raw.get(name) or {}
    if not isinstance(d, dict):
        raise ConfigError(f"section {name!r} must be a mapping", code="invalid_value", field=name)
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {unknown}", code="invalid_value", field=name)
    return d


def _choice(value, options, name):
    if value not in options:
        raise ConfigError(f"{name} must be one of {list(options)}, got {value!r}", code="invalid_value", field=name)
    return value


@dataclass(frozen=True)
class RunConfig:
    seeds: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)
    study_periods: tuple | None = None
    cleaning: CleaningRules = field(default_factory=CleaningRules)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    window: Window = Window.FULL_DAY
    model: ModelSpec = field(default_factory=lambda: resolve_model(None))
    evaluation: dict = field(default_factory=lambda: {"scale": "daily", "min_aadb_rows": DEFAULT_MIN_AADB_ROWS})
    importance: dict = field(default_factory=lambda: {"metric": "smape", "n_permutations": 100, "k": 5,
                                                      "n_repeats": 2, "groups": None})
    sampling: dict = field(default_factory=lambda: {"strategy": "one_day", "scenario": "full_city", "max_days": 28,
                                                    "reps": 10, "weight_share": 0.25, "days": None,
                                                    "min_rows": None})
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)

    @classmethod
    def from_dict(cls, raw: dict | None, base_dir=None) -> "RunConfig":
        raw = dict(raw or {})
        unknown = sorted(set(raw) - _SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections {unknown}", code="invalid_value")
        base = Path(base_dir) if base_dir is not None else Path.cwd()

        seeds = _section(raw, "seeds", set(SEED_KEYS))
        for k, v in seeds.items():
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ConfigError(f"seed {k!r} must be a non-negative integer", code="invalid_value",
                                  field=f"seeds.{k}")

        p = _section(raw, "paths", {"bundle", "sources", "output"})
        paths = {}
        if p.get("bundle") is not None:
            paths["bundle"] = str(base / p["bundle"])
        if p.get("sources"):
            paths["sources"] = {k: str(base / v) for k, v in dict(p["sources"]).items()}
        if p.get("output") is not None:
            paths["output"] = str(base / p["output"])
        for ref in [paths.get("bundle"), *paths.get("sources", {}).values()]:
            if ref is not None and not Path(ref).exists():
                raise ConfigError(f"configured path {ref} does not exist", code="missing_file", file=ref)

        periods = raw.get("study_periods")
        if periods is not None:
            try:
                periods = tuple((dt.date.fromisoformat(str(a)), dt.date.fromisoformat(str(b))) for a, b in periods)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"study_periods must be [start, end] date pairs: {exc}", code="invalid_value",
                                  field="study_periods") from exc
            if not periods or any(b < a for a, b in periods):
                raise ConfigError("study_periods must be non-empty and ordered", code="invalid_value",
                                  field="study_periods")

        window = _choice(raw.get("window", "full_day"), [w.value for w in Window], "window")

        ev = _section(raw, "evaluation", {"scale", "min_aadb_rows"})
        evaluation = {"scale": _choice(ev.get("scale", "daily"), SCALES, "evaluation.scale"),
                      "min_aadb_rows": int(ev.get("min_aadb_rows", DEFAULT_MIN_AADB_ROWS))}

        im = _section(raw, "importance", {"metric", "n_permutations", "k", "n_repeats", "groups"})
        importance = {"metric": _choice(im.get("metric", "smape"), sorted(METRICS), "importance.metric"),
                      "n_permutations": int(im.get("n_permutations", 100)), "k": int(im.get("k", 5)),
                      "n_repeats": int(im.get("n_repeats", 2)), "groups": im.get("groups")}
        for g in importance["groups"] or []:
            _choice(g, GROUPS, "importance.groups")

        sa = _section(raw, "sampling", {"strategy", "scenario", "max_days", "reps", "weight_share", "days",
                                        "min_rows"})
        sampling = {"strategy": _choice(sa.get("strategy", "one_day"), [s.value for s in Strategy],
                                        "sampling.strategy"),
                    "scenario": _choice(sa.get("scenario", "full_city"), [s.value for s in Scenario],
                                        "sampling.scenario"),
                    "max_days": int(sa.get("max_days", 28)), "reps": int(sa.get("reps", 10)),
                    "weight_share": float(sa.get("weight_share", 0.25)),
                    "days": None if sa.get("days") is None else [int(x) for x in sa["days"]],
                    "min_rows": None if sa.get("min_rows") is None else int(sa["min_rows"])}
        if not 0.0 < sampling["weight_share"] < 1.0:
            raise ConfigError("sampling.weight_share must lie strictly between 0 and 1", code="invalid_value",
                              field="sampling.weight_share")

        synth = dict(raw.get("synthetic") or {})
        if periods is not None and "study_periods" not in synth:
            synth["study_periods"] = [[a.isoformat(), b.isoformat()] for a, b in periods]

        feats = dict(raw.get("features") or {})
        for key in ("bikeshare_radii", "strava_radii", "poi_radii"):
            if key in feats:
                feats[key] = tuple(feats[key])
        return cls(
            seeds=dict(seeds), paths=paths, study_periods=periods,
            cleaning=CleaningRules.from_dict(raw.get("cleaning")),
            features=FeatureConfig.from_dict(feats),
            window=Window(window), model=resolve_model(raw.get("model")),
            evaluation=evaluation, importance=importance, sampling=sampling,
            synthetic=SyntheticConfig.from_dict(synth),
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found", code="missing_file", file=str(path)) from None
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}", code="parse_error",
                              file=str(path)) from None
        if raw is not None and not isinstance(raw, dict):
            raise ConfigError("config file must hold a mapping at the top level", code="invalid_value",
                              file=str(path))
        return cls.from_dict(raw, base_dir=path.parent)

    def seed(self, step: str) -> int:
        if step not in self.seeds:
            raise ConfigError(f"no seed configured for the {step!r} step; set seeds.{step} or pass --seed",
                              code="missing_seed", field=f"seeds.{step}")
        return self.seeds[step]

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        """Everything that can change a result; file locations are left out."""
        return {
            "seeds": dict(sorted(self.seeds.items())),
            "study_periods": None if self.study_periods is None
            else [[a.isoformat(), b.isoformat()] for a, b in self.study_periods],
            "cleaning": dataclasses.asdict(self.cleaning),
            "features": {k: list(v) if isinstance(v, tuple) else v
                         for k, v in dataclasses.asdict(self.features).items()},
            "window": self.window.value,
            "model": self.model.to_dict(),
            "evaluation": self.evaluation,
            "importance": self.importance,
            "sampling": self.sampling,
            "synthetic": self.synthetic.to_dict(),
            "learner_defaults_version": learner_defaults()["version"],
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]
