from __future__ import annotations

from anchoring import ConfusionMatrix, ReportRow
from anchoring.figures import confusion_figure, metrics_figure, training_curves_figure
from anchoring.matcher.train import EpochStats, TrainingHistory

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

ROWS = [
    ReportRow("analytic", "indoor", ConfusionMatrix(33397, 702, 79404, 3152)),
    ReportRow("analytic", "outdoor", ConfusionMatrix(1685, 192, 50825, 104)),
    ReportRow("learned", "indoor", ConfusionMatrix(36370, 69, 80037, 179)),
]


def is_png(path) -> bool:
    return path.read_bytes().startswith(PNG_MAGIC)


def test_confusion_figure(tmp_path):
    path = tmp_path / "confusion.png"
    confusion_figure(ROWS, path)
    assert is_png(path)


def test_metrics_figure(tmp_path):
    path = tmp_path / "metrics.png"
    metrics_figure(ROWS, path)
    assert is_png(path)


def test_training_curves_figure(tmp_path):
    history = TrainingHistory(
        epochs=[
            EpochStats(1, 0.6, 0.7, 0.65, 0.68),
            EpochStats(2, 0.4, 0.85, 0.5, 0.8),
            EpochStats(3, 0.3, 0.9, 0.45, 0.86),
        ]
    )
    path = tmp_path / "curves.png"
    training_curves_figure(history, path)
    assert is_png(path)


def test_training_curves_without_validation(tmp_path):
    history = TrainingHistory(epochs=[EpochStats(1, 0.6, 0.7), EpochStats(2, 0.5, 0.8)])
    path = tmp_path / "curves.png"
    training_curves_figure(history, path)
    assert is_png(path)
