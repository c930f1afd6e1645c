"""JSON dumps of fitted learners.

Floats are written with ``repr`` precision, so a load reproduces predictions
bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .estimators import kind_of, make_estimator

FORMAT_VERSION = 1


def dump_estimator(est) -> dict:
    params = {k: (v.item() if isinstance(v, np.generic) else v) for k, v in est.get_params().items()}
    out = {
        "format_version": FORMAT_VERSION,
        "kind": kind_of(est),
        "params": params,
        "n_features_in": int(est.n_features_in_),
        "state": est._state(),
    }
    if hasattr(est, "feature_names_in_"):
        out["feature_names_in"] = [str(c) for c in est.feature_names_in_]
    return out


def load_estimator(d: dict):
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {d.get('format_version')!r}")
    est = make_estimator(d["kind"], **d["params"])
    est.n_features_in_ = d["n_features_in"]
    if "feature_names_in" in d:
        est.feature_names_in_ = np.asarray(d["feature_names_in"], dtype=object)
    est._load_state(d["state"])
    return est


def dumps(est) -> str:
    return json.dumps(dump_estimator(est), sort_keys=True)


def loads(s: str):
    return load_estimator(json.loads(s))
