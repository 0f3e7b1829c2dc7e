"""Labeled pair datasets built from ground-truth scenes.

Pairing walks each scene frame by frame, visiting percepts in input order.
Every new observation is paired with all previously accumulated
observations of the same scene (the earlier observation takes the anchor
side), then appended to the accumulator.  A scene with n observations thus
yields n*(n-1)/2 pairs, same-frame pairs included, and the label is whether
both observations belong to the same ground-truth instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .pair_features import PairFeatures, compare
from .percepts import Anchor, Frame
from .records import read_records, write_records


@dataclass(frozen=True)
class PairProvenance:
    scene_id: str
    frame_a: int      # frame index of the percept side (the later observation)
    frame_b: int      # frame index of the anchor side (the earlier observation)
    instance_a: str
    instance_b: str


@dataclass(eq=False)
class LabeledPair:
    features: PairFeatures
    label: bool
    provenance: PairProvenance


@dataclass(frozen=True)
class SplitManifest:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]

    def validate(self) -> None:
        groups = {"train": self.train, "val": self.val, "test": self.test}
        seen: dict[str, str] = {}
        for split, ids in groups.items():
            for scene_id in ids:
                if scene_id in seen:
                    raise ValidationError(
                        f"scene {scene_id!r} appears in both {seen[scene_id]!r} and {split!r}"
                    )
                seen[scene_id] = split


@dataclass
class DatasetSplit:
    name: str
    train: list[LabeledPair]
    val: list[LabeledPair]
    test: list[LabeledPair]
    manifest: SplitManifest

    def counts(self) -> dict[str, int]:
        return {"train": len(self.train), "val": len(self.val), "test": len(self.test)}


def _observation_anchor(percept, scene_id: str) -> Anchor:
    # feature view only: gives the earlier observation the anchor-side shape
    # expected by compare(); never registered in any knowledge base
    return Anchor(
        anchor_id=f"{scene_id}:{percept.percept_id}",
        object_id=f"{scene_id}:{percept.ground_truth_instance}",
        class_label=percept.class_label,
        appearance=percept.appearance,
        position=percept.position,
        size=percept.size,
        last_timestamp=float(percept.timestamp),
    )


def build_pairs(scenes: Mapping[str, Sequence[Frame]]) -> list[LabeledPair]:
    """Pair every observation with all earlier ones, per scene.

    Requires every percept to carry a ground-truth instance id and every
    instance to keep one class label throughout; violations are rejected
    naming the offending record.
    """
    out: list[LabeledPair] = []
    for scene_id, frames in scenes.items():
        instance_class: dict[str, str] = {}
        accumulated: list[tuple[Anchor, int, str]] = []  # (anchor view, frame idx, instance)
        for frame_idx, frame in enumerate(frames):
            for percept in frame.percepts:
                instance = percept.ground_truth_instance
                if not instance:
                    raise ValidationError(
                        f"scene {scene_id!r}, frame {frame_idx}, percept "
                        f"{percept.percept_id!r}: missing ground-truth instance id"
                    )
                known = instance_class.get(instance)
                if known is None:
                    instance_class[instance] = percept.class_label
                elif known != percept.class_label:
                    raise ValidationError(
                        f"scene {scene_id!r}, frame {frame_idx}: instance {instance!r} "
                        f"observed with class {percept.class_label!r} but earlier with {known!r}"
                    )
                for anchor_view, earlier_idx, earlier_instance in accumulated:
                    out.append(
                        LabeledPair(
                            features=compare(percept, anchor_view),
                            label=instance == earlier_instance,
                            provenance=PairProvenance(
                                scene_id=scene_id,
                                frame_a=frame_idx,
                                frame_b=earlier_idx,
                                instance_a=instance,
                                instance_b=earlier_instance,
                            ),
                        )
                    )
                accumulated.append((_observation_anchor(percept, scene_id), frame_idx, instance))
    return out


def split_by_scene(
    scenes: Mapping[str, Sequence[Frame]],
    manifest: SplitManifest,
    name: str = "dataset",
) -> DatasetSplit:
    """Build pairs split-wise from disjoint scene id lists.

    Pairs never cross scenes, so scene-disjoint splits are leak-free by
    construction.  Scenes absent from the manifest are simply unused.
    """
    manifest.validate()
    for split, ids in (("train", manifest.train), ("val", manifest.val), ("test", manifest.test)):
        for scene_id in ids:
            if scene_id not in scenes:
                raise ValidationError(f"split {split!r} references unknown scene {scene_id!r}")

    def take(ids: tuple[str, ...]) -> list[LabeledPair]:
        return build_pairs({scene_id: scenes[scene_id] for scene_id in ids})

    return DatasetSplit(
        name=name,
        train=take(manifest.train),
        val=take(manifest.val),
        test=take(manifest.test),
        manifest=manifest,
    )


def merge(splits: Sequence[DatasetSplit], name: str = "merged") -> DatasetSplit:
    """Concatenate datasets split-wise.  Pair counts add up; scene ids must
    stay disjoint across the merged manifest."""
    if not splits:
        raise ValidationError("merge requires at least one dataset")
    dims = set()
    for ds in splits:
        for bucket in (ds.train, ds.val, ds.test):
            for pair in bucket:
                dims.add(pair.features.appearance_a.shape[0])
                break
    if len(dims) > 1:
        raise ValidationError(f"cannot merge datasets with mixed embedding dimensions {sorted(dims)}")
    manifest = SplitManifest(
        train=tuple(s for ds in splits for s in ds.manifest.train),
        val=tuple(s for ds in splits for s in ds.manifest.val),
        test=tuple(s for ds in splits for s in ds.manifest.test),
    )
    manifest.validate()
    return DatasetSplit(
        name=name,
        train=[p for ds in splits for p in ds.train],
        val=[p for ds in splits for p in ds.val],
        test=[p for ds in splits for p in ds.test],
        manifest=manifest,
    )


def subsample_negatives(
    pairs: Sequence[LabeledPair], ratio: float, seed: int = 0
) -> list[LabeledPair]:
    """Optional class balancing: keep all positives and at most
    ``ratio * positives`` negatives, chosen deterministically."""
    if ratio <= 0:
        raise ValidationError(f"ratio must be > 0, got {ratio}")
    positives = [p for p in pairs if p.label]
    negatives = [p for p in pairs if not p.label]
    keep = min(len(negatives), int(round(ratio * len(positives))))
    rng = np.random.default_rng(seed)
    chosen = sorted(rng.choice(len(negatives), size=keep, replace=False)) if keep else []
    return positives + [negatives[i] for i in chosen]


def summary_table(splits: Sequence[DatasetSplit]) -> str:
    """Aligned text table: one row per dataset, columns Train/Val/Test/Total."""
    headers = ("Dataset", "Train", "Val", "Test", "Total")
    rows = []
    for ds in splits:
        c = ds.counts()
        rows.append((ds.name, str(c["train"]), str(c["val"]), str(c["test"]), str(sum(c.values()))))
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines) + "\n"


# -- pair dataset files ------------------------------------------------------------

PAIRS_KIND = "pair_dataset"


def write_pairs(
    path: str | Path,
    pairs: Sequence[LabeledPair],
    embedding_dim: int,
    meta: dict[str, Any] | None = None,
) -> None:
    header: dict[str, Any] = {"embedding_dim": embedding_dim, "count": len(pairs)}
    if meta:
        header.update(meta)

    def records() -> Iterable[dict[str, Any]]:
        for pair in pairs:
            f = pair.features
            yield {
                "same_class": bool(f.same_class),
                "appearance_a": [float(x) for x in f.appearance_a],
                "appearance_b": [float(x) for x in f.appearance_b],
                "distance": float(f.distance),
                "scale_factor": float(f.scale_factor),
                "time_delta": float(f.time_delta),
                "label": bool(pair.label),
                "provenance": {
                    "scene_id": pair.provenance.scene_id,
                    "frame_a": pair.provenance.frame_a,
                    "frame_b": pair.provenance.frame_b,
                    "instance_a": pair.provenance.instance_a,
                    "instance_b": pair.provenance.instance_b,
                },
            }

    write_records(path, PAIRS_KIND, header, records())


def read_pairs(path: str | Path) -> tuple[dict[str, Any], list[LabeledPair]]:
    header, records = read_records(path, PAIRS_KIND)
    embedding_dim = header.get("embedding_dim")
    pairs: list[LabeledPair] = []
    for idx, rec in enumerate(records):
        where = f"{path}: pair record {idx}"
        try:
            features = PairFeatures(
                same_class=bool(rec["same_class"]),
                appearance_a=np.asarray(rec["appearance_a"], dtype=np.float64),
                appearance_b=np.asarray(rec["appearance_b"], dtype=np.float64),
                distance=float(rec["distance"]),
                scale_factor=float(rec["scale_factor"]),
                time_delta=float(rec["time_delta"]),
            )
            prov = rec["provenance"]
            pair = LabeledPair(
                features=features,
                label=bool(rec["label"]),
                provenance=PairProvenance(
                    scene_id=prov["scene_id"],
                    frame_a=int(prov["frame_a"]),
                    frame_b=int(prov["frame_b"]),
                    instance_a=prov["instance_a"],
                    instance_b=prov["instance_b"],
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{where}: {exc}") from exc
        if embedding_dim is not None and features.appearance_a.shape[0] != embedding_dim:
            raise ValidationError(
                f"{where}: appearance dimension {features.appearance_a.shape[0]}, "
                f"header says {embedding_dim}"
            )
        if features.appearance_a.shape != features.appearance_b.shape:
            raise ValidationError(f"{where}: appearance dimensions differ")
        pairs.append(pair)
    return header, pairs


def load_manifest(path: str | Path) -> SplitManifest:
    import json

    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read manifest {path}: {exc}") from exc
    except Exception as exc:
        raise ValidationError(f"{path}: malformed manifest: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: manifest must be a JSON object")
    for key in ("train", "val", "test"):
        if not isinstance(doc.get(key, []), list):
            raise ValidationError(f"{path}: manifest key {key!r} must be a list")
    manifest = SplitManifest(
        train=tuple(doc.get("train", [])),
        val=tuple(doc.get("val", [])),
        test=tuple(doc.get("test", [])),
    )
    manifest.validate()
    return manifest
