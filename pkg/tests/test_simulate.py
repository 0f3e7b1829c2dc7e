from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from anchoring import SimConfig, generate
from anchoring.errors import ValidationError

NOISELESS = dict(position_sigma=0.0, size_sigma=0.0, appearance_sigma=0.0)


def test_zero_noise_stationary_scene_is_constant():
    cfg = SimConfig(seed=3, num_frames=8, num_instances=4, **NOISELESS)
    frames = generate(cfg)
    assert len(frames) == 8
    first = {p.ground_truth_instance: p for p in frames[0].percepts}
    for frame in frames[1:]:
        assert len(frame.percepts) == 4
        for p in frame.percepts:
            ref = first[p.ground_truth_instance]
            assert np.array_equal(p.position, ref.position)
            assert np.array_equal(p.size, ref.size)
            assert np.array_equal(p.appearance, ref.appearance)
            assert p.class_label == ref.class_label


def test_same_seed_same_scene():
    cfg = SimConfig(seed=11, num_frames=6, num_instances=3, dropout=0.2)
    a, b = generate(cfg), generate(cfg)
    assert len(a) == len(b)
    for fa, fb in zip(a, b):
        assert fa.timestamp == fb.timestamp
        assert [p.percept_id for p in fa.percepts] == [p.percept_id for p in fb.percepts]
        for pa, pb in zip(fa.percepts, fb.percepts):
            assert np.array_equal(pa.position, pb.position)
            assert np.array_equal(pa.appearance, pb.appearance)


def test_different_seeds_differ():
    a = generate(SimConfig(seed=1, num_frames=2))
    b = generate(SimConfig(seed=2, num_frames=2))
    assert not np.array_equal(a[0].percepts[0].position, b[0].percepts[0].position)


def test_ids_timestamps_and_classes():
    vocab = ("chair", "table", "lamp")
    cfg = SimConfig(seed=5, num_frames=3, num_instances=5, frame_period=0.25,
                    class_vocabulary=vocab, **NOISELESS)
    frames = generate(cfg)
    for k, frame in enumerate(frames):
        assert frame.timestamp == pytest.approx(k * 0.25)
        for p in frame.percepts:
            assert p.timestamp == frame.timestamp
        assert [p.percept_id for p in frame.percepts] == [f"f{k:04d}_p{j}" for j in range(5)]
    # classes cycle through the vocabulary in instance order
    for j, p in enumerate(frames[0].percepts):
        assert p.ground_truth_instance == f"inst_{j}"
        assert p.class_label == vocab[j % 3]


def test_round_robin_wraps_past_vocabulary():
    cfg = SimConfig(seed=5, num_frames=1, num_instances=10, min_separation=0.1)
    percepts = generate(cfg)[0].percepts
    assert percepts[8].class_label == percepts[0].class_label
    assert percepts[9].class_label == percepts[1].class_label


def test_dropout_rate_and_frame_count():
    cfg = SimConfig(seed=17, num_frames=200, num_instances=5, dropout=0.3)
    frames = generate(cfg)
    assert len(frames) == 200  # frames survive even when every detection drops
    observed = sum(len(f.percepts) for f in frames)
    dropped = 200 * 5 - observed
    assert 250 <= dropped <= 350  # ~5 sigma around the 300 expectation


def test_dropout_zero_keeps_everything():
    frames = generate(SimConfig(seed=1, num_frames=10, num_instances=4))
    assert all(len(f.percepts) == 4 for f in frames)


def test_positions_respect_bounds_with_reflection():
    bounds = ((0.0, 2.0), (0.0, 2.0), (0.0, 1.0))
    cfg = SimConfig(seed=23, num_frames=120, num_instances=3, bounds=bounds,
                    motion="constant_velocity", speed_range=(0.8, 1.2),
                    frame_period=1.0, min_separation=0.2, **NOISELESS)
    for frame in generate(cfg):
        for p in frame.percepts:
            for axis, (lo, hi) in enumerate(bounds):
                assert lo <= p.position[axis] <= hi


def test_constant_velocity_moves_objects():
    cfg = SimConfig(seed=9, num_frames=5, num_instances=2,
                    motion="constant_velocity", **NOISELESS)
    frames = generate(cfg)
    p0 = frames[0].percepts[0].position
    p1 = frames[1].percepts[0].position
    assert not np.array_equal(p0, p1)


def test_min_separation_holds_at_spawn():
    cfg = SimConfig(seed=31, num_frames=1, num_instances=6, min_separation=1.5,
                    **NOISELESS)
    positions = [p.position for p in generate(cfg)[0].percepts]
    for i in range(len(positions)):
        for j in range(i + 1, len(positions)):
            assert np.linalg.norm(positions[i] - positions[j]) >= 1.5


def test_impossible_separation_rejected():
    cfg = SimConfig(seed=1, num_frames=1, num_instances=8, min_separation=50.0)
    with pytest.raises(ValidationError, match="separation"):
        generate(cfg)


def test_sizes_clamped_positive():
    cfg = SimConfig(seed=41, num_frames=30, num_instances=4, size_sigma=5.0)
    for frame in generate(cfg):
        for p in frame.percepts:
            assert np.all(p.size >= 0.01)


def test_appearance_stays_unit_norm():
    cfg = SimConfig(seed=43, num_frames=10, num_instances=3, appearance_sigma=0.5)
    for frame in generate(cfg):
        for p in frame.percepts:
            assert np.linalg.norm(p.appearance) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "overrides, fragment",
    [
        (dict(num_frames=0), "num_frames"),
        (dict(frame_period=0.0), "frame_period"),
        (dict(num_instances=0), "num_instances"),
        (dict(class_vocabulary=()), "vocabulary"),
        (dict(bounds=((0.0, 1.0), (0.0, 1.0))), "bounds"),
        (dict(bounds=((0.0, 1.0), (1.0, 1.0), (0.0, 1.0))), "bounds"),
        (dict(motion="teleport"), "motion"),
        (dict(speed_range=(-0.1, 0.5)), "speed_range"),
        (dict(speed_range=(0.5, 0.1)), "speed_range"),
        (dict(base_size_range=(0.0, 1.0)), "base_size_range"),
        (dict(dropout=1.0), "dropout"),
        (dict(dropout=-0.1), "dropout"),
        (dict(position_sigma=-1.0), "position_sigma"),
        (dict(embedding_dim=0), "embedding_dim"),
        (dict(min_separation=-1.0), "min_separation"),
    ],
)
def test_config_validation(overrides, fragment):
    cfg = dataclasses.replace(SimConfig(), **overrides)
    with pytest.raises(ValidationError, match=fragment):
        generate(cfg)
