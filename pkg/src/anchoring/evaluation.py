"""Classifier and run-level evaluation.

Confusion counts treat a score strictly above the threshold as a positive
prediction, mirroring the engine's reacquire rule.  Metric conventions for
empty denominators: a precision (recall) with no predicted (actual)
positives is 1.0 when the mirror error count is also zero, else 0.0; F1 is
0.0 when precision + recall is 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .percepts import Frame


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def validate(self) -> None:
        for name, value in (("tp", self.tp), ("fp", self.fp), ("tn", self.tn), ("fn", self.fn)):
            if not isinstance(value, int) or value < 0:
                raise ValidationError(f"confusion count {name} must be a non-negative integer")


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    precision: float
    recall: float
    f1: float


def confusion(scores: Sequence[float], labels: Sequence[bool], threshold: float = 0.5) -> ConfusionMatrix:
    """Tally predictions (score > threshold) against boolean labels."""
    if len(scores) != len(labels):
        raise ValidationError(f"{len(scores)} scores vs {len(labels)} labels")
    tp = fp = tn = fn = 0
    for score, label in zip(scores, labels):
        score = float(score)
        if not (0.0 <= score <= 1.0):
            raise ValidationError(f"score {score} outside [0, 1]")
        predicted = score > threshold
        if predicted and label:
            tp += 1
        elif predicted and not label:
            fp += 1
        elif not predicted and label:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def metrics(cm: ConfusionMatrix) -> MetricSet:
    cm.validate()
    total = cm.total()
    if total == 0:
        raise ValidationError("cannot compute metrics of an empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / total
    if cm.tp + cm.fp == 0:
        precision = 1.0 if cm.fn == 0 else 0.0
    else:
        precision = cm.tp / (cm.tp + cm.fp)
    if cm.tp + cm.fn == 0:
        recall = 1.0 if cm.fp == 0 else 0.0
    else:
        recall = cm.tp / (cm.tp + cm.fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return MetricSet(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


def identity_score(events: Sequence, frames: Sequence[Frame]) -> float:
    """Fraction of non-first-frame percepts whose reacquire linked them to
    the anchor founded on their own ground-truth instance.

    Consumes a completed run's frame events plus the ground-truth scene.
    Acquires after the first frame (identity breaks) and wrong-anchor
    reacquires both count against the score.
    """
    percept_instance: dict[tuple[int, str], str] = {}
    denominator = 0
    for frame_idx, frame in enumerate(frames):
        for percept in frame.percepts:
            if not percept.ground_truth_instance:
                raise ValidationError(
                    f"frame {frame_idx}, percept {percept.percept_id!r}: "
                    "missing ground-truth instance id"
                )
            percept_instance[(frame_idx, percept.percept_id)] = percept.ground_truth_instance
            if frame_idx > 0:
                denominator += 1

    founding_instance: dict[str, str] = {}
    correct = 0
    for event in events:
        for pid, aid in event.acquired:
            key = (event.frame_index, pid)
            if key not in percept_instance:
                raise ValidationError(f"event references unknown percept {pid!r} in frame {event.frame_index}")
            founding_instance[aid] = percept_instance[key]
        for pid, aid, _value in event.reacquired:
            key = (event.frame_index, pid)
            if key not in percept_instance:
                raise ValidationError(f"event references unknown percept {pid!r} in frame {event.frame_index}")
            if aid not in founding_instance:
                raise ValidationError(f"reacquire of unknown anchor {aid!r}")
            if founding_instance[aid] == percept_instance[key]:
                correct += 1
    if denominator == 0:
        return 1.0  # nothing to re-identify
    return correct / denominator


# -- reports ---------------------------------------------------------------------


@dataclass(frozen=True)
class ReportRow:
    model: str
    test_set: str
    cm: ConfusionMatrix


def report_text(rows: Sequence[ReportRow]) -> str:
    """Aligned text report, one block per model, one line per test set."""
    if not rows:
        raise ValidationError("report needs at least one row")
    lines: list[str] = []
    header = (
        f"{'test set':<16} {'accuracy':>9} {'precision':>9} {'recall':>9} {'f1':>9} "
        f"{'tp':>8} {'fp':>8} {'tn':>8} {'fn':>8}"
    )
    by_model: dict[str, list[ReportRow]] = {}
    for row in rows:
        by_model.setdefault(row.model, []).append(row)
    for model, model_rows in by_model.items():
        lines.append(f"model: {model}")
        lines.append(header)
        for row in model_rows:
            m = metrics(row.cm)
            lines.append(
                f"{row.test_set:<16} {m.accuracy:>9.3f} {m.precision:>9.3f} "
                f"{m.recall:>9.3f} {m.f1:>9.3f} "
                f"{row.cm.tp:>8d} {row.cm.fp:>8d} {row.cm.tn:>8d} {row.cm.fn:>8d}"
            )
        lines.append("")
    return "\n".join(lines)


_CSV_FIELDS = ("model", "test_set", "tp", "fp", "tn", "fn", "accuracy", "precision", "recall", "f1")


def write_report_csv(rows: Sequence[ReportRow], path: str | Path) -> None:
    """Machine-readable report: one delimited record per (model, test set).

    Floats are written with full repr precision so parsing the file back
    reproduces the computed metrics exactly.
    """
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_FIELDS)
        for row in rows:
            m = metrics(row.cm)
            writer.writerow(
                [
                    row.model, row.test_set,
                    row.cm.tp, row.cm.fp, row.cm.tn, row.cm.fn,
                    repr(m.accuracy), repr(m.precision), repr(m.recall), repr(m.f1),
                ]
            )


def read_report_csv(path: str | Path) -> list[tuple[ReportRow, MetricSet]]:
    out: list[tuple[ReportRow, MetricSet]] = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != _CSV_FIELDS:
            raise ValidationError(f"{path}: unexpected report columns {reader.fieldnames}")
        for record in reader:
            row = ReportRow(
                model=record["model"],
                test_set=record["test_set"],
                cm=ConfusionMatrix(
                    tp=int(record["tp"]), fp=int(record["fp"]),
                    tn=int(record["tn"]), fn=int(record["fn"]),
                ),
            )
            m = MetricSet(
                accuracy=float(record["accuracy"]),
                precision=float(record["precision"]),
                recall=float(record["recall"]),
                f1=float(record["f1"]),
            )
            out.append((row, m))
    return out


def score_pairs(matcher_score, pairs) -> tuple[list[float], list[bool]]:
    """Score labeled pairs with any matcher callable; convenience for eval."""
    scores = [float(matcher_score(p.features)) for p in pairs]
    labels = [bool(p.label) for p in pairs]
    return scores, labels
