"""Error metrics for daily bicycle counts."""

import numpy as np


def _check(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.size} observations vs {y_pred.size} predictions")
    if y_true.size == 0:
        raise ValueError("metrics need at least one observation")
    if np.any(y_true < 0) or np.any(y_pred < 0):
        raise ValueError("counts and predictions must be non-negative")
    return y_true, y_pred


def mae(y_true, y_pred) -> float:
    y_true, y_pred = _check(y_true, y_pred)
    return float(np.mean(np.abs(y_true - y_pred)))


def smape(y_true, y_pred) -> float:
    """Symmetric MAPE in percent, range [0, 200]; a term with both values zero counts as 0."""
    y_true, y_pred = _check(y_true, y_pred)
    num = np.abs(y_pred - y_true)
    den = (y_true + y_pred) / 2.0
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(np.mean(terms) * 100.0)


METRICS = {"mae": mae, "smape": smape}


def get_metric(name):
    try:
        return METRICS[name]
    except KeyError:
        raise ValueError(f"unknown metric {name!r}; choose from {sorted(METRICS)}") from None
