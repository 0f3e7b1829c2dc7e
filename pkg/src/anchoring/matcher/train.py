"""Training loop for the learned matcher: mini-batch Adam on BCE loss."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..dataset import LabeledPair
from ..errors import ValidationError
from .network import (
    MatcherModel,
    ModelWidths,
    PairBatch,
    backward,
    batch_from_pairs,
    bce_loss,
    forward,
)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 256
    epochs: int = 20
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValidationError("Adam betas must lie in [0, 1)")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float | None = None
    val_accuracy: float | None = None


@dataclass
class TrainingHistory:
    epochs: list[EpochStats] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def rows(self) -> list[dict[str, float | int | None]]:
        return [
            {
                "epoch": e.epoch,
                "train_loss": e.train_loss,
                "train_accuracy": e.train_accuracy,
                "val_loss": e.val_loss,
                "val_accuracy": e.val_accuracy,
            }
            for e in self.epochs
        ]


class _Adam:
    """Standard Adam with bias correction, one slot pair per parameter."""

    def __init__(self, model: MatcherModel, cfg: TrainConfig) -> None:
        self.cfg = cfg
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in model.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in model.params.items()}

    def step(self, model: MatcherModel, grads: dict[str, np.ndarray]) -> None:
        cfg = self.cfg
        self.step_count += 1
        correction1 = 1.0 - cfg.beta1**self.step_count
        correction2 = 1.0 - cfg.beta2**self.step_count
        for name, grad in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * grad
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * grad * grad
            m_hat = m / correction1
            v_hat = v / correction2
            model.params[name] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)


def _labels_array(pairs: Sequence[LabeledPair]) -> np.ndarray:
    return np.array([1.0 if p.label else 0.0 for p in pairs])


def _evaluate(model: MatcherModel, batch: PairBatch, labels: np.ndarray, threshold: float = 0.5):
    y, cache = forward(model, batch, want_cache=True)
    loss = bce_loss(y, labels, logits=cache["z"])
    accuracy = float(np.mean((y > threshold) == (labels > 0.5)))
    return loss, accuracy


def train(
    pairs: Sequence[LabeledPair],
    cfg: TrainConfig | None = None,
    val_pairs: Sequence[LabeledPair] | None = None,
    widths: ModelWidths | None = None,
    embedding_dim: int | None = None,
) -> tuple[MatcherModel, TrainingHistory]:
    """Train a matcher on labeled pairs.

    Scalar standardization constants are estimated from the training pairs
    and stored on the model before the first epoch, so a zero-epoch run
    still yields a usable (untrained) model.  Runs are reproducible: the
    seed fixes both initialization and shuffling, and the same seed yields
    bit-identical parameters.
    """
    cfg = cfg if cfg is not None else TrainConfig()
    cfg.validate()
    if not pairs:
        raise ValidationError("training requires at least one labeled pair")
    if embedding_dim is None:
        embedding_dim = int(pairs[0].features.appearance_a.shape[0])

    history = TrainingHistory()
    labels = _labels_array(pairs)
    if labels.min() == labels.max():
        kind = "positive" if labels[0] > 0.5 else "negative"
        history.warnings.append(
            f"training set contains only {kind} pairs; the matcher cannot learn a boundary"
        )

    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    init_seed = int(np.random.default_rng(seeds[0]).integers(2**31 - 1))
    shuffle_rng = np.random.default_rng(seeds[1])

    model = MatcherModel.initialize(embedding_dim, widths, seed=init_seed)
    train_batch = batch_from_pairs([p.features for p in pairs], embedding_dim)
    mean = train_batch.scalars.mean(axis=0)
    std = train_batch.scalars.std(axis=0)
    model.scalar_mean = mean
    model.scalar_std = np.where(std > 1e-12, std, 1.0)

    val_batch = None
    val_labels = None
    if val_pairs:
        val_batch = batch_from_pairs([p.features for p in val_pairs], embedding_dim)
        val_labels = _labels_array(val_pairs)

    adam = _Adam(model, cfg)
    n = len(pairs)
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            take = order[start : start + cfg.batch_size]
            mini = PairBatch(
                abs_diff=train_batch.abs_diff[take],
                same_class=train_batch.same_class[take],
                scalars=train_batch.scalars[take],
            )
            _, cache = forward(model, mini, want_cache=True)
            grads = backward(model, cache, labels[take])
            adam.step(model, grads)

        train_loss, train_acc = _evaluate(model, train_batch, labels)
        stats = EpochStats(epoch=epoch, train_loss=train_loss, train_accuracy=train_acc)
        if val_batch is not None and val_labels is not None:
            stats.val_loss, stats.val_accuracy = _evaluate(model, val_batch, val_labels)
        history.epochs.append(stats)

    return model, history
