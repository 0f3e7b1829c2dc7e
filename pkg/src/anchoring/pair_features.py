"""Percept/anchor pair features consumed by the matching functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .percepts import Anchor, Percept


@dataclass(eq=False)
class PairFeatures:
    """Comparison record for one (percept, anchor) pair.

    ``appearance_a`` is the percept side, ``appearance_b`` the anchor side;
    both are kept raw for the learned matcher's comparator.
    """

    same_class: bool
    appearance_a: np.ndarray
    appearance_b: np.ndarray
    distance: float       # Euclidean distance between centers, meters
    scale_factor: float   # ratio of geometric mean sizes, in (0, 1]
    time_delta: float     # absolute timestamp gap, seconds


def _geometric_mean(size: np.ndarray) -> float:
    return float(np.cbrt(float(size[0]) * float(size[1]) * float(size[2])))


def compare(percept: Percept, anchor: Anchor) -> PairFeatures:
    """Compute pair features.  Pure; inputs are never mutated.

    Swapping the two sides leaves every scalar feature unchanged and swaps
    the appearance vectors.
    """
    a = np.asarray(percept.appearance, dtype=np.float64)
    b = np.asarray(anchor.appearance, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(
            f"appearance dimensions differ: {a.shape[0]} vs {b.shape[0]}"
        )
    diff = np.asarray(percept.position, dtype=np.float64) - np.asarray(
        anchor.position, dtype=np.float64
    )
    gm_p = _geometric_mean(percept.size)
    gm_a = _geometric_mean(anchor.size)
    if gm_p <= 0 or gm_a <= 0:
        raise ValidationError("sizes must be positive to compare scales")
    return PairFeatures(
        same_class=percept.class_label == anchor.class_label,
        appearance_a=a,
        appearance_b=b,
        distance=float(np.linalg.norm(diff)),
        scale_factor=min(gm_p, gm_a) / max(gm_p, gm_a),
        time_delta=abs(float(percept.timestamp) - float(anchor.last_timestamp)),
    )
