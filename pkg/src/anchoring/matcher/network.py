"""Learned matching function: a small dense network built on numpy.

Three stages:

* comparator - dense layer over the element-wise absolute difference of the
  two appearance embeddings
* feature encoders - one dense layer per input feature (class agreement,
  comparator output, distance, scale factor, time gap) whose outputs are
  concatenated and fused by another dense layer
* classifier - two-layer perceptron ending in a sigmoid

All hidden activations are rectified linear.  Scalar inputs are standardized
with mean/variance captured from the training set and stored on the model,
so a saved model reproduces its forward pass bit for bit after reload.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..errors import ValidationError
from ..pair_features import PairFeatures
from ..records import SCHEMA_VERSION

# Flattening order for optimizer state and gradient checks.
PARAM_ORDER = (
    "comparator_w", "comparator_b",
    "enc_class_w", "enc_class_b",
    "enc_comp_w", "enc_comp_b",
    "enc_dist_w", "enc_dist_b",
    "enc_scale_w", "enc_scale_b",
    "enc_time_w", "enc_time_b",
    "fusion_w", "fusion_b",
    "hidden_w", "hidden_b",
    "out_w", "out_b",
)

# Keep reported scores strictly inside (0, 1); sigmoid itself rounds to the
# endpoints in float64 for |logit| > ~37.
_SCORE_MARGIN = 1e-12


@dataclass(frozen=True)
class ModelWidths:
    comparator: int = 16
    feature: int = 8
    encoding: int = 64
    classifier_hidden: int = 32

    def validate(self) -> None:
        for name, value in (
            ("comparator", self.comparator),
            ("feature", self.feature),
            ("encoding", self.encoding),
            ("classifier_hidden", self.classifier_hidden),
        ):
            if not isinstance(value, int) or value < 1:
                raise ValidationError(f"width {name!r} must be a positive integer, got {value!r}")


def _param_shapes(embedding_dim: int, widths: ModelWidths) -> dict[str, tuple[int, ...]]:
    kc, kf, ke, h = widths.comparator, widths.feature, widths.encoding, widths.classifier_hidden
    return {
        "comparator_w": (kc, embedding_dim), "comparator_b": (kc,),
        "enc_class_w": (kf, 1), "enc_class_b": (kf,),
        "enc_comp_w": (kf, kc), "enc_comp_b": (kf,),
        "enc_dist_w": (kf, 1), "enc_dist_b": (kf,),
        "enc_scale_w": (kf, 1), "enc_scale_b": (kf,),
        "enc_time_w": (kf, 1), "enc_time_b": (kf,),
        "fusion_w": (ke, 5 * kf), "fusion_b": (ke,),
        "hidden_w": (h, ke), "hidden_b": (h,),
        "out_w": (1, h), "out_b": (1,),
    }


@dataclass
class MatcherModel:
    embedding_dim: int
    widths: ModelWidths
    params: dict[str, np.ndarray]
    # standardization constants for [distance, scale_factor, time_delta]
    scalar_mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scalar_std: np.ndarray = field(default_factory=lambda: np.ones(3))

    @classmethod
    def initialize(
        cls,
        embedding_dim: int,
        widths: ModelWidths | None = None,
        seed: int = 0,
    ) -> "MatcherModel":
        """Fresh model with weights and biases drawn uniformly at fan-in
        scale.  Biased away from exact zeros so no unit starts pinned to a
        rectifier kink."""
        if not isinstance(embedding_dim, int) or embedding_dim < 1:
            raise ValidationError(f"embedding_dim must be a positive integer, got {embedding_dim!r}")
        widths = widths if widths is not None else ModelWidths()
        widths.validate()
        rng = np.random.default_rng(seed)
        shapes = _param_shapes(embedding_dim, widths)
        params: dict[str, np.ndarray] = {}
        for name in PARAM_ORDER:
            if name.endswith("_b"):
                fan_in = shapes[name.removesuffix("_b") + "_w"][1]
            else:
                fan_in = shapes[name][1]
            bound = 1.0 / np.sqrt(fan_in)
            params[name] = rng.uniform(-bound, bound, size=shapes[name])
        return cls(embedding_dim=embedding_dim, widths=widths, params=params)

    def num_params(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy(self) -> "MatcherModel":
        return MatcherModel(
            embedding_dim=self.embedding_dim,
            widths=self.widths,
            params={k: v.copy() for k, v in self.params.items()},
            scalar_mean=self.scalar_mean.copy(),
            scalar_std=self.scalar_std.copy(),
        )


@dataclass(eq=False)
class PairBatch:
    """Feature arrays for a batch of pairs, ready for the network."""

    abs_diff: np.ndarray    # (B, d)
    same_class: np.ndarray  # (B, 1) 0/1
    scalars: np.ndarray     # (B, 3) raw [distance, scale_factor, time_delta]

    def __len__(self) -> int:
        return self.abs_diff.shape[0]


def batch_from_pairs(pairs: Sequence[PairFeatures], embedding_dim: int) -> PairBatch:
    if not pairs:
        raise ValidationError("cannot build a batch from zero pairs")
    abs_diff = np.empty((len(pairs), embedding_dim))
    same = np.empty((len(pairs), 1))
    scalars = np.empty((len(pairs), 3))
    for i, pair in enumerate(pairs):
        if pair.appearance_a.shape[0] != embedding_dim or pair.appearance_b.shape[0] != embedding_dim:
            raise ValidationError(
                f"pair {i}: appearance dimension "
                f"{pair.appearance_a.shape[0]}/{pair.appearance_b.shape[0]}, "
                f"model expects {embedding_dim}"
            )
        abs_diff[i] = np.abs(pair.appearance_a - pair.appearance_b)
        same[i, 0] = 1.0 if pair.same_class else 0.0
        scalars[i] = (pair.distance, pair.scale_factor, pair.time_delta)
    return PairBatch(abs_diff=abs_diff, same_class=same, scalars=scalars)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(model: MatcherModel, batch: PairBatch, want_cache: bool = False):
    """Batched forward pass.  Returns scores (B,); with ``want_cache`` also
    the intermediate activations needed by :func:`backward`."""
    p = model.params
    std = np.where(model.scalar_std > 0, model.scalar_std, 1.0)
    sn = (batch.scalars - model.scalar_mean) / std

    c_pre = batch.abs_diff @ p["comparator_w"].T + p["comparator_b"]
    c = np.maximum(c_pre, 0.0)

    enc_inputs = {
        "enc_class": batch.same_class,
        "enc_comp": c,
        "enc_dist": sn[:, 0:1],
        "enc_scale": sn[:, 1:2],
        "enc_time": sn[:, 2:3],
    }
    enc_pre: dict[str, np.ndarray] = {}
    enc_out: dict[str, np.ndarray] = {}
    for name, x in enc_inputs.items():
        pre = x @ p[f"{name}_w"].T + p[f"{name}_b"]
        enc_pre[name] = pre
        enc_out[name] = np.maximum(pre, 0.0)

    u = np.hstack([enc_out[n] for n in ("enc_class", "enc_comp", "enc_dist", "enc_scale", "enc_time")])
    f_pre = u @ p["fusion_w"].T + p["fusion_b"]
    f = np.maximum(f_pre, 0.0)
    h_pre = f @ p["hidden_w"].T + p["hidden_b"]
    h = np.maximum(h_pre, 0.0)
    z = h @ p["out_w"].T + p["out_b"]
    y = _sigmoid(z)[:, 0]

    if not want_cache:
        return y
    cache = {
        "abs_diff": batch.abs_diff, "c_pre": c_pre, "c": c,
        "enc_inputs": enc_inputs, "enc_pre": enc_pre, "enc_out": enc_out,
        "u": u, "f_pre": f_pre, "f": f, "h_pre": h_pre, "h": h, "z": z, "y": y,
    }
    return y, cache


def bce_loss(scores: np.ndarray, labels: np.ndarray, logits: np.ndarray | None = None) -> float:
    """Mean binary cross-entropy; computed from logits when available for
    numerical stability."""
    t = np.asarray(labels, dtype=np.float64)
    if logits is not None:
        z = logits.reshape(-1)
        per = np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))
    else:
        y = np.clip(scores, 1e-15, 1.0 - 1e-15)
        per = -(t * np.log(y) + (1.0 - t) * np.log(1.0 - y))
    return float(np.mean(per))


def backward(model: MatcherModel, cache: dict[str, Any], labels: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the mean BCE loss with respect to every parameter."""
    p = model.params
    t = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
    n = t.shape[0]

    dz = (cache["y"].reshape(-1, 1) - t) / n
    grads: dict[str, np.ndarray] = {}
    grads["out_w"] = dz.T @ cache["h"]
    grads["out_b"] = dz.sum(axis=0)
    dh = (dz @ p["out_w"]) * (cache["h_pre"] > 0)
    grads["hidden_w"] = dh.T @ cache["f"]
    grads["hidden_b"] = dh.sum(axis=0)
    df = (dh @ p["hidden_w"]) * (cache["f_pre"] > 0)
    grads["fusion_w"] = df.T @ cache["u"]
    grads["fusion_b"] = df.sum(axis=0)
    du = df @ p["fusion_w"]

    kf = model.widths.feature
    names = ("enc_class", "enc_comp", "enc_dist", "enc_scale", "enc_time")
    dc = None
    for i, name in enumerate(names):
        de = du[:, i * kf : (i + 1) * kf] * (cache["enc_pre"][name] > 0)
        grads[f"{name}_w"] = de.T @ cache["enc_inputs"][name]
        grads[f"{name}_b"] = de.sum(axis=0)
        if name == "enc_comp":
            dc = de @ p["enc_comp_w"]
    assert dc is not None
    dc_pre = dc * (cache["c_pre"] > 0)
    grads["comparator_w"] = dc_pre.T @ cache["abs_diff"]
    grads["comparator_b"] = dc_pre.sum(axis=0)
    return grads


def batch_loss(model: MatcherModel, batch: PairBatch, labels: np.ndarray) -> float:
    y, cache = forward(model, batch, want_cache=True)
    return bce_loss(y, labels, logits=cache["z"])


def match_neural(model: MatcherModel, pair: PairFeatures) -> float:
    """Score one pair with the learned matcher.  Deterministic; output lies
    strictly inside (0, 1)."""
    batch = batch_from_pairs([pair], model.embedding_dim)
    y = forward(model, batch)
    return float(np.clip(y[0], _SCORE_MARGIN, 1.0 - _SCORE_MARGIN))


class NeuralMatcher:
    """Engine-facing wrapper around a trained model."""

    def __init__(self, model: MatcherModel) -> None:
        self.model = model

    def score(self, pair: PairFeatures) -> float:
        return match_neural(self.model, pair)


# -- gradient verification -------------------------------------------------------


def gradient_check(
    model: MatcherModel,
    pair: PairFeatures,
    label: float,
    epsilon: float = 1e-5,
    num_params: int = 60,
    seed: int = 0,
) -> float:
    """Compare analytic gradients against central finite differences.

    A seeded random subset of at least ``num_params`` parameters is probed;
    returns the maximum relative error, where the denominator is floored to
    absorb finite-difference noise on genuinely zero gradients.  The same
    seed always probes the same parameters.
    """
    if not (0 < epsilon <= 1e-2):
        raise ValidationError(f"epsilon must be in (0, 1e-2], got {epsilon}")
    batch = batch_from_pairs([pair], model.embedding_dim)
    labels = np.array([float(label)])

    _, cache = forward(model, batch, want_cache=True)
    grads = backward(model, cache, labels)

    total = model.num_params()
    count = min(max(num_params, 50), total)
    rng = np.random.default_rng(seed)
    flat_indices = np.sort(rng.choice(total, size=count, replace=False))

    # map flat index -> (param name, unraveled index)
    offsets = []
    start = 0
    for name in PARAM_ORDER:
        size = model.params[name].size
        offsets.append((name, start, start + size))
        start += size

    probe = model.copy()
    max_err = 0.0
    for flat in flat_indices:
        for name, lo, hi in offsets:
            if lo <= flat < hi:
                idx = np.unravel_index(flat - lo, probe.params[name].shape)
                original = probe.params[name][idx]
                probe.params[name][idx] = original + epsilon
                loss_plus = batch_loss(probe, batch, labels)
                probe.params[name][idx] = original - epsilon
                loss_minus = batch_loss(probe, batch, labels)
                probe.params[name][idx] = original
                fd = (loss_plus - loss_minus) / (2.0 * epsilon)
                analytic = float(grads[name][idx])
                err = abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-6)
                max_err = max(max_err, err)
                break
    return max_err


# -- persistence ---------------------------------------------------------------

MODEL_KIND = "matcher_model"


def save_model(model: MatcherModel, path: str | Path, meta: dict[str, Any] | None = None) -> None:
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "kind": MODEL_KIND,
        "embedding_dim": model.embedding_dim,
        "widths": {
            "comparator": model.widths.comparator,
            "feature": model.widths.feature,
            "encoding": model.widths.encoding,
            "classifier_hidden": model.widths.classifier_hidden,
        },
        "standardization": {
            "mean": [float(x) for x in model.scalar_mean],
            "std": [float(x) for x in model.scalar_std],
        },
        "params": {name: model.params[name].tolist() for name in PARAM_ORDER},
    }
    if meta:
        doc["meta"] = meta
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: str | Path, expected_dim: int | None = None) -> MatcherModel:
    """Load a saved model, validating schema, widths, and parameter shapes.

    Reloaded parameters are exact: JSON float round-tripping preserves every
    bit, so forward passes agree with the saved model.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at position {exc.pos}") from exc
    if not isinstance(doc, dict) or doc.get("kind") != MODEL_KIND:
        raise ValidationError(f"{path}: not a matcher model file")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    try:
        embedding_dim = int(doc["embedding_dim"])
        widths = ModelWidths(**{k: int(v) for k, v in doc["widths"].items()})
        mean = np.asarray(doc["standardization"]["mean"], dtype=np.float64)
        std = np.asarray(doc["standardization"]["std"], dtype=np.float64)
        raw_params = doc["params"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed model document: {exc}") from exc
    widths.validate()
    if expected_dim is not None and embedding_dim != expected_dim:
        raise ValidationError(
            f"{path}: model embedding_dim {embedding_dim}, expected {expected_dim}"
        )
    if mean.shape != (3,) or std.shape != (3,):
        raise ValidationError(f"{path}: standardization constants must have 3 entries")
    shapes = _param_shapes(embedding_dim, widths)
    params: dict[str, np.ndarray] = {}
    for name in PARAM_ORDER:
        if name not in raw_params:
            raise ValidationError(f"{path}: missing parameter {name!r}")
        arr = np.asarray(raw_params[name], dtype=np.float64)
        if arr.shape != shapes[name]:
            raise ValidationError(
                f"{path}: parameter {name!r} has shape {arr.shape}, expected {shapes[name]}"
            )
        params[name] = arr
    return MatcherModel(
        embedding_dim=embedding_dim,
        widths=widths,
        params=params,
        scalar_mean=mean,
        scalar_std=std,
    )
