"""Perceptual anchoring: keep percept streams and symbolic objects in sync.

The package provides the full loop: pair features and matching functions
(hand-tuned and learned), optimal percept-to-anchor assignment, the
anchoring engine with its knowledge base, plus dataset construction,
a scene simulator, and evaluation tooling.
"""

from .assignment import Assignment, MatchingTable, solve, solve_bruteforce
from .dataset import (
    DatasetSplit,
    LabeledPair,
    SplitManifest,
    build_pairs,
    merge,
    read_pairs,
    split_by_scene,
    write_pairs,
)
from .engine import AnchoringEngine, EngineConfig, FindResult, FrameEvents
from .errors import AnchoringError, ValidationError
from .evaluation import (
    ConfusionMatrix,
    MetricSet,
    ReportRow,
    confusion,
    identity_score,
    metrics,
    read_report_csv,
    report_text,
    write_report_csv,
)
from .matcher import (
    AnalyticMatcher,
    AnalyticParams,
    MatcherModel,
    ModelWidths,
    NeuralMatcher,
    TrainConfig,
    gradient_check,
    load_model,
    match_analytic,
    match_neural,
    save_model,
    train,
)
from .pair_features import PairFeatures, compare
from .percepts import ACTIVE, STALE, Anchor, Frame, Percept, anchor_from_percept, load_scene, write_scene
from .simulate import SimConfig, generate
from .world_model import Fact, GroundingRule, KnowledgeBase, default_grounding_rules, ground

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "MatchingTable",
    "solve",
    "solve_bruteforce",
    "DatasetSplit",
    "LabeledPair",
    "SplitManifest",
    "build_pairs",
    "merge",
    "read_pairs",
    "split_by_scene",
    "write_pairs",
    "AnchoringEngine",
    "EngineConfig",
    "FindResult",
    "FrameEvents",
    "AnchoringError",
    "ValidationError",
    "ConfusionMatrix",
    "MetricSet",
    "ReportRow",
    "confusion",
    "identity_score",
    "metrics",
    "read_report_csv",
    "report_text",
    "write_report_csv",
    "AnalyticMatcher",
    "AnalyticParams",
    "MatcherModel",
    "ModelWidths",
    "NeuralMatcher",
    "TrainConfig",
    "gradient_check",
    "load_model",
    "match_analytic",
    "match_neural",
    "save_model",
    "train",
    "PairFeatures",
    "compare",
    "ACTIVE",
    "STALE",
    "Anchor",
    "Frame",
    "Percept",
    "anchor_from_percept",
    "load_scene",
    "write_scene",
    "SimConfig",
    "generate",
    "Fact",
    "GroundingRule",
    "KnowledgeBase",
    "default_grounding_rules",
    "ground",
]
