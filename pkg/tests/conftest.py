from __future__ import annotations

import numpy as np
import pytest

from anchoring import Frame, Percept, anchor_from_percept


def make_percept(
    pid: str = "p0",
    cls: str = "chair",
    appearance=None,
    position=(0.0, 0.0, 0.0),
    size=(0.5, 0.5, 0.5),
    t: float = 0.0,
    dim: int = 4,
    instance: str | None = None,
) -> Percept:
    if appearance is None:
        appearance = np.ones(dim)
    return Percept(
        percept_id=pid,
        class_label=cls,
        appearance=np.asarray(appearance, dtype=np.float64),
        position=np.asarray(position, dtype=np.float64),
        size=np.asarray(size, dtype=np.float64),
        timestamp=t,
        ground_truth_instance=instance,
    )


def make_anchor(object_id: str = "obj_x", anchor_id: str | None = None, **kwargs):
    return anchor_from_percept(make_percept(**kwargs), object_id, anchor_id=anchor_id)


def make_frame(t: float, percepts) -> Frame:
    return Frame(timestamp=t, percepts=list(percepts))


def random_percept(rng: np.random.Generator, pid: str, t: float, dim: int = 6,
                   classes=("chair", "table", "lamp")) -> Percept:
    return make_percept(
        pid=pid,
        cls=classes[int(rng.integers(len(classes)))],
        appearance=rng.normal(size=dim),
        position=rng.uniform(-5.0, 5.0, size=3),
        size=rng.uniform(0.1, 2.0, size=3),
        t=t,
        dim=dim,
    )


class StubMatcher:
    """Scripted matcher: scores keyed by the integer tags the test plants in
    the first appearance component of each side."""

    def __init__(self, table: dict[tuple[int, int], float], default: float = 0.0) -> None:
        self.table = dict(table)
        self.default = default

    def score(self, pair) -> float:
        key = (int(round(pair.appearance_a[0])), int(round(pair.appearance_b[0])))
        return self.table.get(key, self.default)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260822)
