"""Hyperparameter importance for conditional search spaces."""

from cped.hpi import METHODS, HpiReport, analyze
from cped.space import EvaluationSet, SearchSpace, Trial, load_space, load_trials, parse_space
from cped.stats import QuantilePair

__all__ = [
    "METHODS",
    "EvaluationSet",
    "HpiReport",
    "QuantilePair",
    "SearchSpace",
    "Trial",
    "analyze",
    "load_space",
    "load_trials",
    "parse_space",
]
__version__ = "0.1.0"
