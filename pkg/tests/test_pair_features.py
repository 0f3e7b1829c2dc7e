from __future__ import annotations

import numpy as np
import pytest

from anchoring import compare
from anchoring.errors import ValidationError
from anchoring.percepts import anchor_from_percept
from conftest import make_anchor, make_percept, random_percept


def test_frozen_scalar_cases():
    percept = make_percept("p", position=(0.0, 0.0, 0.0), size=(1.0, 1.0, 1.0), t=2.0)
    anchor = make_anchor(position=(3.0, 4.0, 0.0), size=(2.0, 2.0, 2.0), t=0.5)
    pair = compare(percept, anchor)
    assert pair.same_class is True
    assert pair.distance == 5.0              # 3-4-5 triangle
    assert pair.scale_factor == 0.5          # geometric means 1 and 2
    assert pair.time_delta == 1.5


def test_scale_factor_uses_geometric_means():
    percept = make_percept("p", size=(1.0, 2.0, 4.0))   # gm = 2
    anchor = make_anchor(size=(2.0, 4.0, 8.0))          # gm = 4
    assert compare(percept, anchor).scale_factor == 0.5


def test_self_comparison_is_neutral():
    percept = make_percept("p", position=(1.0, 2.0, 0.5), t=3.0)
    anchor = anchor_from_percept(percept, "obj_1")
    pair = compare(percept, anchor)
    assert pair.distance == 0.0
    assert pair.scale_factor == 1.0
    assert pair.time_delta == 0.0
    assert pair.same_class is True


def test_swap_symmetry(rng):
    # scalars invariant under swapping the two sides; appearances swap roles
    for i in range(300):
        x = random_percept(rng, f"x{i}", t=float(rng.uniform(0, 10)))
        y = random_percept(rng, f"y{i}", t=float(rng.uniform(0, 10)))
        xy = compare(x, anchor_from_percept(y, "obj_y"))
        yx = compare(y, anchor_from_percept(x, "obj_x"))
        assert xy.same_class == yx.same_class
        assert xy.distance == pytest.approx(yx.distance, abs=0.0)
        assert xy.scale_factor == pytest.approx(yx.scale_factor, abs=0.0)
        assert xy.time_delta == pytest.approx(yx.time_delta, abs=0.0)
        assert np.array_equal(xy.appearance_a, yx.appearance_b)
        assert np.array_equal(xy.appearance_b, yx.appearance_a)


def test_distance_triangle_inequality(rng):
    for i in range(300):
        a = random_percept(rng, f"a{i}", 0.0)
        b = random_percept(rng, f"b{i}", 0.0)
        c = random_percept(rng, f"c{i}", 0.0)
        ab = compare(a, anchor_from_percept(b, "ob")).distance
        bc = compare(b, anchor_from_percept(c, "oc")).distance
        ac = compare(a, anchor_from_percept(c, "oc")).distance
        assert ac <= ab + bc + 1e-9


def test_compare_is_pure(rng):
    percept = random_percept(rng, "p", 1.0)
    anchor = anchor_from_percept(random_percept(rng, "q", 0.0), "obj_q")
    before = (percept.appearance.copy(), anchor.appearance.copy())
    first = compare(percept, anchor)
    second = compare(percept, anchor)
    assert first.distance == second.distance
    assert first.scale_factor == second.scale_factor
    assert first.time_delta == second.time_delta
    assert np.array_equal(percept.appearance, before[0])
    assert np.array_equal(anchor.appearance, before[1])


def test_dimension_mismatch_rejected():
    percept = make_percept("p", dim=4)
    anchor = make_anchor(dim=8)
    with pytest.raises(ValidationError, match="dimensions differ"):
        compare(percept, anchor)


def test_nonpositive_size_rejected():
    percept = make_percept("p")
    anchor = make_anchor()
    anchor.size = np.array([0.0, 1.0, 1.0])
    with pytest.raises(ValidationError, match="positive"):
        compare(percept, anchor)


def test_class_difference_detected():
    pair = compare(make_percept("p", cls="chair"), make_anchor(cls="table"))
    assert pair.same_class is False
