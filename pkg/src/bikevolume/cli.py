"""Command-line entry point.

Every subcommand reads an optional YAML run config, lets flags override it and
writes its artifacts with a metadata block (engine version, config hash). Any
failure prints one JSON line on stderr and exits 2 (config), 3 (data) or 4.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .config import RunConfig, resolve_model
from .core import Window, segment_midpoint
from .errors import BikeVolumeError, ConfigError, DataError

DEFAULT_NAMES = {
    "synth": "bundle",
    "clean": "clean",
    "features": "features.csv",
    "train": "model.json",
    "eval-logo": "logo_report.json",
    "eval-short": "shortterm_report.json",
    "importance": "importance.json",
    "simulate": "sampling_curve.json",
    "predict-map": "volume_map.geojson",
}
SEED_STEP = {"synth": "synth", "train": "model", "eval-logo": "model", "eval-short": "model",
             "importance": "importance", "simulate": "sampling"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message, code="usage_error")


def _metadata(cfg: RunConfig, command: str) -> dict:
    return {"engine_version": __version__, "config_hash": cfg.hash(), "command": command}


def _write_json(path: Path, obj: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sidecar(csv_path: Path, meta: dict) -> None:
    _write_json(csv_path.with_name(csv_path.name + ".meta.json"), {"metadata": meta})


def _out_path(args, cfg: RunConfig) -> Path:
    if args.out is not None:
        return Path(args.out)
    if "output" in cfg.paths:
        return Path(cfg.paths["output"]) / DEFAULT_NAMES[args.command]
    raise ConfigError("no output location: pass --out or set paths.output", code="missing_output")


def _bundle(args, cfg: RunConfig):
    from .ingest import load_bundle, validate_bundle

    where = args.bundle or cfg.paths.get("bundle")
    if where is None:
        raise ConfigError("no bundle: pass --bundle or set paths.bundle", code="missing_input")
    if not Path(where).is_dir():
        raise ConfigError(f"bundle directory {where} does not exist", code="missing_file", file=str(where))
    bundle = load_bundle(where, cfg.paths.get("sources"))
    if cfg.study_periods is not None:
        bundle.meta.study_periods = list(cfg.study_periods)
        bundle = validate_bundle(bundle)
    return bundle


def _require_file(path, what: str) -> Path:
    if path is None:
        raise ConfigError(f"missing --{what}", code="missing_input")
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{what} file {path} does not exist", code="missing_file", file=str(path))
    return path


def _table(args):
    from .pipeline import FeatureTable

    return FeatureTable.read_csv(_require_file(args.table, "table"))


def _clean_trips(bundle, cfg: RunConfig):
    from .ingest import reconstruct_trips
    from .pipeline import clean_trips, route_trips

    trips = list(bundle.trips) + reconstruct_trips(bundle.snapshots)
    return clean_trips(route_trips(bundle.street_graph, trips), cfg.cleaning)


def _load_trips(args, bundle, cfg: RunConfig):
    from .ingest import read_trips

    if args.trips is not None:
        trips = read_trips(_require_file(args.trips, "trips"))
        if any(not t.is_routed for t in trips):
            raise DataError(f"{args.trips} holds unrouted trips; run `clean` first", code="precondition",
                            file=str(args.trips))
        return trips
    return _clean_trips(bundle, cfg)[0]


# -- subcommands -------------------------------------------------------------


def cmd_synth(args, cfg):
    from .ingest import generate_synthetic_city, save_bundle

    out = _out_path(args, cfg)
    bundle, truth = generate_synthetic_city(cfg.seed("synth"), cfg.synthetic)
    meta = _metadata(cfg, "synth")
    bundle.meta.extra = {**bundle.meta.extra, "metadata": meta}
    save_bundle(bundle, out)
    _write_json(out / "ground_truth.json", {**truth.to_dict(), "metadata": meta})
    return {"bundle": str(out)}


def cmd_clean(args, cfg):
    from .ingest import write_trips

    bundle = _bundle(args, cfg)
    out = _out_path(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    kept, report = _clean_trips(bundle, cfg)
    meta = _metadata(cfg, "clean")
    write_trips(kept, out / "trips_clean.csv", routed=True)
    _sidecar(out / "trips_clean.csv", meta)
    report.to_json(out / "removal_report.json", meta)
    return {"input": report.input_count, "remaining": report.remaining}


def cmd_features(args, cfg):
    from .pipeline import assemble

    bundle = _bundle(args, cfg)
    trips = _load_trips(args, bundle, cfg)
    window = Window(args.window) if args.window else cfg.window
    table = assemble(bundle, trips, window, cfg.features)
    out = _out_path(args, cfg)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, _metadata(cfg, "features"))
    return {"rows": len(table.frame), "features": len(table.features)}


def _spec(args, cfg):
    if getattr(args, "kind", None) and args.kind != cfg.model.kind:
        return resolve_model({"kind": args.kind})
    return cfg.model


def cmd_train(args, cfg):
    table = _table(args)
    model = _spec(args, cfg).build(random_state=cfg.seed("model"), workers=args.workers)
    model.fit(table.X, table.y, groups=table.stations)
    out = _out_path(args, cfg)
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out, {**_metadata(cfg, "train"), "window": table.window.value})
    return {"kind": model.kind, "n_columns": len(model.columns_)}


def _write_report(report, args, cfg, command):
    out = _out_path(args, cfg)
    out.parent.mkdir(parents=True, exist_ok=True)
    meta = _metadata(cfg, command)
    report.to_json(out, meta)
    csv = Path(args.csv) if args.csv else out.with_suffix(".csv")
    report.to_csv(csv)
    _sidecar(csv, meta)
    return out


def cmd_eval_logo(args, cfg):
    from .eval.protocols import logo_evaluate

    table = _table(args)
    scale = args.scale or cfg.evaluation["scale"]
    report = logo_evaluate(table, _spec(args, cfg), scale, cfg.seed("model"), args.workers,
                           cfg.evaluation["min_aadb_rows"])
    _write_report(report, args, cfg, "eval-logo")
    return {"smape": report.aggregate_smape, "mae": report.aggregate_mae}


def cmd_eval_short(args, cfg):
    from .eval.protocols import shortterm_evaluate

    table = _table(args)
    report = shortterm_evaluate(table, _spec(args, cfg), cfg.seed("model"), args.workers)
    _write_report(report, args, cfg, "eval-short")
    return {"smape": report.aggregate_smape, "mae": report.aggregate_mae}


def cmd_importance(args, cfg):
    from .analysis import grouped_permutation_importance

    table = _table(args)
    im = cfg.importance
    result = grouped_permutation_importance(
        table, _spec(args, cfg), metric=im["metric"],
        n_permutations=args.permutations or im["n_permutations"], k=im["k"], n_repeats=im["n_repeats"],
        seed=cfg.seed("importance"), groups=im["groups"], workers=args.workers,
    )
    _write_report(result, args, cfg, "importance")
    return {"ranking": result.ranking()}


def cmd_simulate(args, cfg):
    from .analysis import simulate_sampling

    table = _table(args)
    sa = cfg.sampling
    curve = simulate_sampling(
        table, _spec(args, cfg), strategy=args.strategy or sa["strategy"], scenario=args.scenario or sa["scenario"],
        max_days=args.max_days if args.max_days is not None else sa["max_days"],
        reps=args.reps or sa["reps"], weight_share=sa["weight_share"], seed=cfg.seed("sampling"),
        days=sa["days"], min_rows=sa["min_rows"], workers=args.workers,
    )
    _write_report(curve, args, cfg, "simulate")
    return {"d0": curve.at(curve.days[0])[0], "dmax": curve.at(curve.days[-1])[0]}


def cmd_predict_map(args, cfg):
    from .model import VolumeModel
    from .pipeline import prediction_frame

    bundle = _bundle(args, cfg)
    model = VolumeModel.load(_require_file(args.model, "model"))
    try:
        date = pd.Timestamp(args.date).normalize()
    except ValueError:
        raise ConfigError(f"--date {args.date!r} is not a date", code="invalid_value") from None
    if not bundle.meta.in_study([date])[0]:
        raise ConfigError(f"{date.date()} lies outside the study periods", code="date_out_of_period")
    trips = _load_trips(args, bundle, cfg)
    segments = bundle.street_graph.segments
    mids = [segment_midpoint(s) for s in segments]
    points = pd.DataFrame({"station_id": [f"seg:{s.id}" for s in segments],
                           "lat": [p.lat for p in mids], "lon": [p.lon for p in mids]})
    frame = prediction_frame(bundle, trips, points, date, cfg.features)
    X = frame[list(model.preprocessor_.feature_names_in_)]
    volume = model.predict(X, groups=frame["station_id"].to_numpy(dtype=object))
    features = []
    for seg, v in zip(segments, volume):
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [[p.lon, p.lat] for p in seg.polyline]},
            "properties": {"id": seg.id, "volume": float(np.round(v, 6))},
        })
    out = _out_path(args, cfg)
    _write_json(out, {"type": "FeatureCollection", "features": features,
                      "metadata": {**_metadata(cfg, "predict-map"), "date": str(date.date())}})
    return {"segments": len(features)}


def cmd_schema(args, cfg):
    from .ingest import schema_text

    sys.stdout.write(schema_text(args.source) + "\n")
    return None


COMMANDS = {
    "synth": cmd_synth,
    "clean": cmd_clean,
    "features": cmd_features,
    "train": cmd_train,
    "eval-logo": cmd_eval_logo,
    "eval-short": cmd_eval_short,
    "importance": cmd_importance,
    "simulate": cmd_simulate,
    "predict-map": cmd_predict_map,
    "schema": cmd_schema,
}


def build_parser() -> argparse.ArgumentParser:
    from .analysis import Scenario, Strategy
    from .ingest.schemas import NON_TABULAR, SCHEMAS
    from .learners import KINDS

    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML run config")
    common.add_argument("--workers", type=int, default=1, help="parallel workers (results do not depend on it)")
    common.add_argument("--seed", type=int, help="seed for this step, overriding the config")
    common.add_argument("--out", help="output file or directory")

    parser = _Parser(prog="bikevolume", description="Bicycle volume estimation from crowdsourced and open data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    sub.add_parser("synth", parents=[common], help="write a synthetic source bundle")

    p = sub.add_parser("clean", parents=[common], help="reconstruct, route and clean bike-share trips")
    p.add_argument("--bundle")

    p = sub.add_parser("features", parents=[common], help="build the station-day feature table")
    p.add_argument("--bundle")
    p.add_argument("--trips", help="cleaned trips from `clean`; cleaned on the fly when omitted")
    p.add_argument("--window", choices=[w.value for w in Window])

    def model_cmd(name, help_text):
        q = sub.add_parser(name, parents=[common], help=help_text)
        q.add_argument("--table", help="feature table CSV")
        q.add_argument("--kind", choices=sorted(KINDS))
        return q

    model_cmd("train", "fit a model on every row of a table")
    for name, text in (("eval-logo", "leave-one-station-out evaluation"),
                       ("eval-short", "train on long-term stations, score short-term ones")):
        q = model_cmd(name, text)
        q.add_argument("--csv", help="per-station CSV (default: next to --out)")
        if name == "eval-logo":
            q.add_argument("--scale", choices=["daily", "aadb"])
    q = model_cmd("importance", "grouped permutation importance")
    q.add_argument("--csv")
    q.add_argument("--permutations", type=int)
    q = model_cmd("simulate", "sample-count simulation")
    q.add_argument("--csv")
    q.add_argument("--strategy", choices=[s.value for s in Strategy])
    q.add_argument("--scenario", choices=[s.value for s in Scenario])
    q.add_argument("--reps", type=int)
    q.add_argument("--max-days", type=int)

    p = sub.add_parser("predict-map", parents=[common], help="predicted daily volume per street segment")
    p.add_argument("--bundle")
    p.add_argument("--model", help="model JSON from `train`")
    p.add_argument("--date", required=True)
    p.add_argument("--trips")

    p = sub.add_parser("schema", help="print the CSV column contract of a source")
    p.add_argument("--source", required=True, choices=sorted(SCHEMAS) + sorted(NON_TABULAR))
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    step = SEED_STEP.get(args.command)
    if step and args.seed is not None:
        cfg = cfg.replace(seeds={**cfg.seeds, step: args.seed})
    if getattr(args, "workers", 1) < 1:
        raise ConfigError("--workers must be at least 1", code="invalid_value")
    return cfg


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        summary = COMMANDS[args.command](args, cfg)
        if summary is not None:
            sys.stdout.write(json.dumps(summary, sort_keys=True, default=str) + "\n")
        return 0
    except BikeVolumeError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True, default=str) + "\n")
        return exc.exit_code
    except Exception as exc:  # anything unforeseen is still reported as one JSON line
        sys.stderr.write(json.dumps({"error": "runtime_error", "type": type(exc).__name__, "message": str(exc)},
                                    sort_keys=True) + "\n")
        return 4


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
