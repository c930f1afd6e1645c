from .estimators import (
    KINDS,
    TREE_ENSEMBLES,
    BaselineMean,
    DecisionTree,
    GradientBoosting,
    LinearModel,
    RandomForest,
    RegularizedBoosting,
    kind_of,
    make_estimator,
)
from .search import SearchResult, Trial, parse_space, random_search, sample_config
from .selection import METHODS, FeatureSelector
from .serialize import FORMAT_VERSION, dump_estimator, dumps, load_estimator, loads
from .tree import Tree, grow_tree

__all__ = [
    "BaselineMean",
    "DecisionTree",
    "FORMAT_VERSION",
    "FeatureSelector",
    "GradientBoosting",
    "KINDS",
    "LinearModel",
    "METHODS",
    "RandomForest",
    "RegularizedBoosting",
    "SearchResult",
    "TREE_ENSEMBLES",
    "Tree",
    "Trial",
    "dump_estimator",
    "dumps",
    "grow_tree",
    "kind_of",
    "load_estimator",
    "loads",
    "make_estimator",
    "parse_space",
    "random_search",
    "sample_config",
]
