"""Hand-tuned closed-form matching function.

Serves as the training-free baseline and as a sanity oracle for the learned
matcher: both map pair features to a similarity in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp

import numpy as np

from ..errors import ValidationError
from ..pair_features import PairFeatures


@dataclass(frozen=True)
class AnalyticParams:
    """Decay scales: ``sigma_distance`` in meters, ``sigma_time`` in seconds."""

    sigma_distance: float = 2.0
    sigma_time: float = 10.0

    def validate(self) -> None:
        if not self.sigma_distance > 0:
            raise ValidationError(f"sigma_distance must be > 0, got {self.sigma_distance}")
        if not self.sigma_time > 0:
            raise ValidationError(f"sigma_time must be > 0, got {self.sigma_time}")


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def match_analytic(pair: PairFeatures, params: AnalyticParams) -> float:
    """Similarity of a percept/anchor pair in [0, 1].

    Different classes score exactly 0.  Otherwise the score is the product
    of a Gaussian distance decay, the scale factor, an exponential time
    decay, and the appearance cosine similarity clamped at 0.  Each factor
    lies in [0, 1], the score is non-increasing in distance and time gap,
    and a self comparison at zero time gap scores 1.
    """
    params.validate()
    if not pair.same_class:
        return 0.0
    distance_term = exp(-(pair.distance**2) / params.sigma_distance**2)
    time_term = exp(-pair.time_delta / params.sigma_time)
    appearance_term = max(0.0, _cosine(pair.appearance_a, pair.appearance_b))
    score = distance_term * pair.scale_factor * time_term * appearance_term
    # guard against rounding just above 1.0 in the product
    return min(1.0, max(0.0, score))


class AnalyticMatcher:
    """Callable wrapper with the matcher interface used by the engine."""

    def __init__(self, params: AnalyticParams | None = None) -> None:
        self.params = params if params is not None else AnalyticParams()
        self.params.validate()

    def score(self, pair: PairFeatures) -> float:
        return match_analytic(pair, self.params)
