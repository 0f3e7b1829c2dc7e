from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest

from anchoring import (
    AnalyticMatcher,
    AnchoringEngine,
    ConfusionMatrix,
    FrameEvents,
    MetricSet,
    ReportRow,
    SimConfig,
    confusion,
    generate,
    identity_score,
    metrics,
    read_report_csv,
    report_text,
    write_report_csv,
)
from anchoring.evaluation import score_pairs
from anchoring.errors import ValidationError

from conftest import make_frame, make_percept


def test_confusion_against_recount(rng):
    for _ in range(50):
        n = int(rng.integers(0, 40))
        scores = rng.random(n)
        labels = rng.random(n) < 0.5
        threshold = float(rng.random())
        cm = confusion(scores, labels, threshold)
        tp = sum(1 for s, y in zip(scores, labels) if s > threshold and y)
        fp = sum(1 for s, y in zip(scores, labels) if s > threshold and not y)
        fn = sum(1 for s, y in zip(scores, labels) if s <= threshold and y)
        tn = n - tp - fp - fn
        assert (cm.tp, cm.fp, cm.tn, cm.fn) == (tp, fp, tn, fn)
        assert cm.total() == n


def test_score_equal_to_threshold_is_negative():
    cm = confusion([0.5, 0.5], [True, False], threshold=0.5)
    assert (cm.tp, cm.fp, cm.tn, cm.fn) == (0, 0, 1, 1)


def test_confusion_rejections():
    with pytest.raises(ValidationError, match="outside"):
        confusion([1.2], [True])
    with pytest.raises(ValidationError, match="outside"):
        confusion([-0.1], [False])
    with pytest.raises(ValidationError, match="scores vs"):
        confusion([0.5], [True, False])


def test_metrics_reproduce_reported_blocks():
    cases = [
        ((33397, 702, 79404, 3152), (0.967, 0.979, 0.914, 0.945)),
        ((1201, 0, 51017, 588), (0.989, 1.000, 0.671, 0.803)),
        ((37703, 156, 130967, 635), (0.995, 0.996, 0.983, 0.990)),
    ]
    for (tp, fp, tn, fn), (acc, prec, rec, f1) in cases:
        m = metrics(ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn))
        assert m.accuracy == pytest.approx(acc, abs=1e-3)
        assert m.precision == pytest.approx(prec, abs=1e-3)
        assert m.recall == pytest.approx(rec, abs=1e-3)
        assert m.f1 == pytest.approx(f1, abs=1e-3)


def test_metric_conventions_on_empty_denominators():
    clean = metrics(ConfusionMatrix(0, 0, 5, 0))  # nothing predicted, nothing to find
    assert clean == MetricSet(accuracy=1.0, precision=1.0, recall=1.0, f1=1.0)
    missed = metrics(ConfusionMatrix(0, 0, 5, 3))  # silent model with positives present
    assert missed.precision == 0.0 and missed.recall == 0.0 and missed.f1 == 0.0
    noisy = metrics(ConfusionMatrix(0, 2, 5, 0))  # false alarms with no positives present
    assert noisy.precision == 0.0 and noisy.recall == 0.0 and noisy.f1 == 0.0


def test_metrics_rejections():
    with pytest.raises(ValidationError, match="empty confusion"):
        metrics(ConfusionMatrix(0, 0, 0, 0))
    with pytest.raises(ValidationError, match="non-negative"):
        metrics(ConfusionMatrix(-1, 0, 1, 0))
    with pytest.raises(ValidationError, match="non-negative"):
        metrics(ConfusionMatrix(1.0, 0, 1, 0))


def gt_scene():
    f0 = make_frame(0.0, [make_percept("pa", t=0.0, instance="A"),
                          make_percept("pb", t=0.0, instance="B")])
    f1 = make_frame(1.0, [make_percept("pc", t=1.0, instance="A"),
                          make_percept("pd", t=1.0, instance="C")])
    return [f0, f1]


def test_identity_score_hand_case():
    events = [
        FrameEvents(0, 0.0, acquired=[("pa", "anchor_0"), ("pb", "anchor_1")]),
        FrameEvents(1, 1.0, acquired=[("pd", "anchor_2")],
                    reacquired=[("pc", "anchor_0", 0.9)]),
    ]
    # pc went back to instance A's anchor; pd broke identity by founding a new one
    assert identity_score(events, gt_scene()) == pytest.approx(0.5)


def test_identity_score_penalizes_wrong_anchor():
    events = [
        FrameEvents(0, 0.0, acquired=[("pa", "anchor_0"), ("pb", "anchor_1")]),
        FrameEvents(1, 1.0, acquired=[("pd", "anchor_2")],
                    reacquired=[("pc", "anchor_1", 0.9)]),  # B's anchor, not A's
    ]
    assert identity_score(events, gt_scene()) == 0.0


def test_identity_score_single_frame_is_vacuous():
    frames = [make_frame(0.0, [make_percept("pa", t=0.0, instance="A")])]
    events = [FrameEvents(0, 0.0, acquired=[("pa", "anchor_0")])]
    assert identity_score(events, frames) == 1.0


def test_identity_score_perfect_on_clean_scene():
    cfg = SimConfig(seed=12, num_frames=5, num_instances=4,
                    position_sigma=0.0, size_sigma=0.0, appearance_sigma=0.0)
    frames = generate(cfg)
    engine = AnchoringEngine(AnalyticMatcher())
    events = engine.run(frames)
    assert identity_score(events, frames) == 1.0


def test_identity_score_rejections():
    frames = gt_scene()
    with pytest.raises(ValidationError, match="missing ground-truth"):
        identity_score([], [make_frame(0.0, [make_percept("px", t=0.0)])])
    with pytest.raises(ValidationError, match="unknown percept 'zz'"):
        identity_score([FrameEvents(0, 0.0, acquired=[("zz", "anchor_0")])], frames)
    events = [
        FrameEvents(0, 0.0, acquired=[("pa", "anchor_0"), ("pb", "anchor_1")]),
        FrameEvents(1, 1.0, reacquired=[("pc", "anchor_9", 0.9)]),
    ]
    with pytest.raises(ValidationError, match="unknown anchor 'anchor_9'"):
        identity_score(events, frames)


def sample_rows():
    return [
        ReportRow("analytic", "indoor", ConfusionMatrix(33397, 702, 79404, 3152)),
        ReportRow("analytic", "outdoor", ConfusionMatrix(1685, 192, 50825, 104)),
        ReportRow("learned", "indoor", ConfusionMatrix(36370, 69, 80037, 179)),
    ]


def test_report_text_layout():
    text = report_text(sample_rows())
    lines = text.splitlines()
    assert lines[0] == "model: analytic"
    assert "accuracy" in lines[1] and "fn" in lines[1]
    assert lines[2].startswith("indoor")
    assert "33397" in lines[2]
    assert "model: learned" in lines
    with pytest.raises(ValidationError, match="at least one"):
        report_text([])


def test_report_csv_round_trip(tmp_path):
    rows = sample_rows()
    path = tmp_path / "report.csv"
    write_report_csv(rows, path)
    loaded = read_report_csv(path)
    assert [r for r, _ in loaded] == rows
    for row, m in loaded:
        assert m == metrics(row.cm)  # repr floats survive the trip exactly


def test_report_csv_rejects_unknown_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("model,tp,fp\nx,1,2\n")
    with pytest.raises(ValidationError, match="unexpected report columns"):
        read_report_csv(path)


def test_threshold_monotonicity(rng):
    for _ in range(20):
        n = 200
        scores = rng.random(n)
        labels = rng.random(n) < 0.4
        thresholds = np.sort(rng.random(5))
        cms = [confusion(scores, labels, float(t)) for t in thresholds]
        for lo, hi in zip(cms, cms[1:]):
            assert hi.tp <= lo.tp
            assert hi.fp <= lo.fp
        recalls = [metrics(cm).recall for cm in cms if cm.tp + cm.fn > 0]
        assert all(b <= a for a, b in zip(recalls, recalls[1:]))
        predicted = [
            {i for i, s in enumerate(scores) if s > t} for t in thresholds
        ]
        for lo, hi in zip(predicted, predicted[1:]):
            assert hi <= lo


def test_score_pairs():
    pairs = [
        SimpleNamespace(features=SimpleNamespace(distance=1.0), label=True),
        SimpleNamespace(features=SimpleNamespace(distance=3.0), label=False),
    ]
    scores, labels = score_pairs(lambda f: 1.0 / (1.0 + f.distance), pairs)
    assert scores == [0.5, 0.25]
    assert labels == [True, False]
