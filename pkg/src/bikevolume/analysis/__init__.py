from .importance import GroupImportance, grouped_permutation_importance
from .sampling import (
    SamplingCurve,
    Scenario,
    Strategy,
    full_city_weights,
    sample_dates,
    simulate_sampling,
    ten_day_headline,
)

__all__ = [
    "GroupImportance",
    "SamplingCurve",
    "Scenario",
    "Strategy",
    "full_city_weights",
    "grouped_permutation_importance",
    "sample_dates",
    "simulate_sampling",
    "ten_day_headline",
]
