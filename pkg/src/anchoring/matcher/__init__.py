"""Matching functions that score percept/anchor pairs in [0, 1]."""

from .analytic import AnalyticMatcher, AnalyticParams, match_analytic
from .network import (
    MatcherModel,
    ModelWidths,
    NeuralMatcher,
    batch_from_pairs,
    forward,
    gradient_check,
    load_model,
    match_neural,
    save_model,
)
from .train import EpochStats, TrainConfig, TrainingHistory, train

__all__ = [
    "AnalyticMatcher",
    "AnalyticParams",
    "match_analytic",
    "MatcherModel",
    "ModelWidths",
    "NeuralMatcher",
    "batch_from_pairs",
    "forward",
    "gradient_check",
    "load_model",
    "match_neural",
    "save_model",
    "EpochStats",
    "TrainConfig",
    "TrainingHistory",
    "train",
]
