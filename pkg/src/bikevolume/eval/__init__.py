from .folds import Fold, FoldPlan, group_kfold, logo_plan, repeated_stratified_kfold, stratified_group_kfold
from .metrics import get_metric, mae, smape

_LAZY = {
    "EvaluationReport": ".report",
    "StationScore": ".report",
    "logo_evaluate": ".protocols",
    "shortterm_evaluate": ".protocols",
    "score_by_station": ".protocols",
}


def __getattr__(name):
    # protocols depend on the learners, which import the fold helpers above
    if name in _LAZY:
        import importlib

        return getattr(importlib.import_module(_LAZY[name], __name__), name)
    raise AttributeError(name)


__all__ = [
    "EvaluationReport",
    "Fold",
    "FoldPlan",
    "StationScore",
    "get_metric",
    "group_kfold",
    "logo_evaluate",
    "logo_plan",
    "mae",
    "repeated_stratified_kfold",
    "shortterm_evaluate",
    "smape",
    "stratified_group_kfold",
]
