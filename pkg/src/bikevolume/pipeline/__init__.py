from .assemble import assemble, daily_targets, feature_groups, location_date_features, locations, prediction_frame
from .cleaning import RULE_ORDER, CleaningRules, RemovalReport, clean_trips, route_trips
from .features import (
    CITY,
    FeatureConfig,
    bikeshare_features,
    motorized_features,
    socio_features,
    static_features,
    strava_features,
    time_holiday_features,
)
from .preprocess import Preprocessor, preprocess
from .table import GROUPS, KEY_COLUMNS, FeatureTable

__all__ = [
    "CITY",
    "CleaningRules",
    "FeatureConfig",
    "FeatureTable",
    "GROUPS",
    "KEY_COLUMNS",
    "Preprocessor",
    "RULE_ORDER",
    "RemovalReport",
    "assemble",
    "bikeshare_features",
    "clean_trips",
    "daily_targets",
    "feature_groups",
    "location_date_features",
    "locations",
    "motorized_features",
    "prediction_frame",
    "preprocess",
    "route_trips",
    "socio_features",
    "static_features",
    "strava_features",
    "time_holiday_features",
]
