"""Matplotlib figure rendering for the report paths.

Figures are presentation artifacts written next to the delimited outputs;
all rendering uses the Agg backend so headless runs work.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .evaluation import ReportRow, metrics  # noqa: E402

# keep PNG bytes stable across reruns of the same inputs
_SAVEFIG_KWARGS = {"dpi": 110, "metadata": {"Software": "anchoring"}}


def confusion_figure(rows: Sequence[ReportRow], path: str | Path) -> None:
    """One annotated 2x2 count grid per (model, test set) row."""
    n = len(rows)
    fig, axes = plt.subplots(1, max(n, 1), figsize=(3.2 * max(n, 1), 3.4), squeeze=False)
    for ax, row in zip(axes[0], rows):
        grid = [[row.cm.tp, row.cm.fn], [row.cm.fp, row.cm.tn]]
        ax.imshow(grid, cmap="Blues")
        for i in range(2):
            for j in range(2):
                ax.text(j, i, f"{grid[i][j]:,}", ha="center", va="center", fontsize=9)
        ax.set_xticks([0, 1], ["pred +", "pred -"])
        ax.set_yticks([0, 1], ["actual +", "actual -"])
        ax.set_title(f"{row.model}\n{row.test_set}", fontsize=9)
    if n == 0:
        axes[0][0].axis("off")
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KWARGS)
    plt.close(fig)


def metrics_figure(rows: Sequence[ReportRow], path: str | Path) -> None:
    """Grouped bars: accuracy / precision / recall / F1 per row."""
    names = [f"{r.model}\n{r.test_set}" for r in rows]
    values = [metrics(r.cm) for r in rows]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.6 * len(rows) + 2), 3.6))
    x = range(len(rows))
    width = 0.2
    for offset, (label, getter) in enumerate(
        [
            ("accuracy", lambda m: m.accuracy),
            ("precision", lambda m: m.precision),
            ("recall", lambda m: m.recall),
            ("f1", lambda m: m.f1),
        ]
    ):
        ax.bar([i + (offset - 1.5) * width for i in x], [getter(m) for m in values],
               width=width, label=label)
    ax.set_xticks(list(x), names, fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=8, ncols=4, loc="lower right")
    ax.set_ylabel("score")
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KWARGS)
    plt.close(fig)


def training_curves_figure(history, path: str | Path) -> None:
    """Loss and accuracy per epoch, train and (when present) validation."""
    epochs = [e.epoch for e in history.epochs]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    ax_loss.plot(epochs, [e.train_loss for e in history.epochs], label="train")
    if any(e.val_loss is not None for e in history.epochs):
        ax_loss.plot(epochs, [e.val_loss for e in history.epochs], label="val")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("BCE loss")
    ax_loss.legend(fontsize=8)
    ax_acc.plot(epochs, [e.train_accuracy for e in history.epochs], label="train")
    if any(e.val_accuracy is not None for e in history.epochs):
        ax_acc.plot(epochs, [e.val_accuracy for e in history.epochs], label="val")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.05)
    ax_acc.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KWARGS)
    plt.close(fig)
