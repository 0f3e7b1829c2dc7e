"""Percepts, anchors, and scene files.

A percept is one detection in one frame: class label, appearance embedding,
3D position, bounding-box size, timestamp.  An anchor is the persistent
object hypothesis a percept stream gets attached to; it carries the latest
observed features plus bookkeeping (observation count, staleness status).

Scene files are header+records JSON lines (see :mod:`anchoring.records`):
one record per frame, timestamps strictly increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ValidationError
from .records import read_records, write_records

ACTIVE = "active"
STALE = "stale"


@dataclass(eq=False)
class Percept:
    percept_id: str
    class_label: str
    appearance: np.ndarray   # (d,) float64
    position: np.ndarray     # (3,) float64, meters
    size: np.ndarray         # (3,) float64, meters, all > 0
    timestamp: float         # seconds, >= 0
    ground_truth_instance: str | None = None

    def __post_init__(self) -> None:
        self.appearance = np.asarray(self.appearance, dtype=np.float64)
        self.position = np.asarray(self.position, dtype=np.float64)
        self.size = np.asarray(self.size, dtype=np.float64)

    def validate(self, embedding_dim: int | None = None) -> None:
        if not self.percept_id:
            raise ValidationError("percept id must be non-empty")
        if not self.class_label:
            raise ValidationError(f"percept {self.percept_id!r}: empty class label")
        if self.appearance.ndim != 1:
            raise ValidationError(f"percept {self.percept_id!r}: appearance must be 1-D")
        if embedding_dim is not None and self.appearance.shape[0] != embedding_dim:
            raise ValidationError(
                f"percept {self.percept_id!r}: appearance dimension "
                f"{self.appearance.shape[0]}, expected {embedding_dim}"
            )
        if self.position.shape != (3,):
            raise ValidationError(f"percept {self.percept_id!r}: position must have 3 components")
        if self.size.shape != (3,):
            raise ValidationError(f"percept {self.percept_id!r}: size must have 3 components")
        if not np.all(np.isfinite(self.appearance)):
            raise ValidationError(f"percept {self.percept_id!r}: non-finite appearance")
        if not np.all(np.isfinite(self.position)):
            raise ValidationError(f"percept {self.percept_id!r}: non-finite position")
        if not (np.all(np.isfinite(self.size)) and np.all(self.size > 0)):
            raise ValidationError(f"percept {self.percept_id!r}: size components must be positive")
        if not np.isfinite(self.timestamp) or self.timestamp < 0:
            raise ValidationError(f"percept {self.percept_id!r}: bad timestamp {self.timestamp}")


@dataclass(eq=False)
class Anchor:
    anchor_id: str
    object_id: str
    class_label: str
    appearance: np.ndarray
    position: np.ndarray
    size: np.ndarray
    last_timestamp: float
    observation_count: int = 1
    status: str = ACTIVE


@dataclass(eq=False)
class Frame:
    timestamp: float
    percepts: list[Percept] = field(default_factory=list)

    def validate(self, embedding_dim: int | None = None) -> None:
        seen: set[str] = set()
        for percept in self.percepts:
            percept.validate(embedding_dim)
            if percept.timestamp != self.timestamp:
                raise ValidationError(
                    f"percept {percept.percept_id!r} timestamp {percept.timestamp} "
                    f"differs from frame timestamp {self.timestamp}"
                )
            if percept.percept_id in seen:
                raise ValidationError(f"duplicate percept id {percept.percept_id!r} in frame")
            seen.add(percept.percept_id)


def anchor_from_percept(percept: Percept, object_id: str, anchor_id: str | None = None) -> Anchor:
    """Found a new anchor from a percept.

    Feature arrays are copied so later anchor updates never alias or mutate
    the percept.  When ``anchor_id`` is omitted it is derived from the object
    id, which the caller guarantees is fresh.
    """
    if not object_id:
        raise ValidationError("anchor needs a non-empty object id")
    return Anchor(
        anchor_id=anchor_id if anchor_id is not None else f"anchor_for_{object_id}",
        object_id=object_id,
        class_label=percept.class_label,
        appearance=percept.appearance.copy(),
        position=percept.position.copy(),
        size=percept.size.copy(),
        last_timestamp=float(percept.timestamp),
        observation_count=1,
        status=ACTIVE,
    )


# -- scene files ---------------------------------------------------------------

SCENE_KIND = "scene"


def _percept_record(p: Percept) -> dict[str, Any]:
    rec = {
        "percept_id": p.percept_id,
        "class_label": p.class_label,
        "appearance": [float(x) for x in p.appearance],
        "position": [float(x) for x in p.position],
        "size": [float(x) for x in p.size],
    }
    if p.ground_truth_instance is not None:
        rec["instance"] = p.ground_truth_instance
    return rec


def write_scene(
    path: str | Path,
    frames: list[Frame],
    embedding_dim: int,
    meta: dict[str, Any] | None = None,
) -> None:
    header: dict[str, Any] = {"embedding_dim": embedding_dim}
    if meta:
        header.update(meta)
    records = []
    for frame in frames:
        frame.validate(embedding_dim)
        records.append(
            {
                "timestamp": float(frame.timestamp),
                "percepts": [_percept_record(p) for p in frame.percepts],
            }
        )
    write_records(path, SCENE_KIND, header, records)


def load_scene(path: str | Path) -> tuple[dict[str, Any], list[Frame]]:
    """Load and validate a scene file.

    Returns the header and the frame list.  Rejects non-increasing
    timestamps, duplicate percept ids, bad sizes, and embedding dimension
    mismatches, naming the offending record.
    """
    header, records = read_records(path, SCENE_KIND)
    embedding_dim = header.get("embedding_dim")
    if embedding_dim is not None and (not isinstance(embedding_dim, int) or embedding_dim < 1):
        raise ValidationError(f"{path}: bad embedding_dim {embedding_dim!r}")
    frames: list[Frame] = []
    previous_ts: float | None = None
    for idx, rec in enumerate(records):
        where = f"{path}: frame record {idx}"
        if "timestamp" not in rec or "percepts" not in rec:
            raise ValidationError(f"{where}: missing 'timestamp' or 'percepts'")
        ts = rec["timestamp"]
        if not isinstance(ts, (int, float)):
            raise ValidationError(f"{where}: timestamp must be a number")
        ts = float(ts)
        if previous_ts is not None and ts <= previous_ts:
            raise ValidationError(
                f"{where}: timestamp {ts} not strictly greater than previous {previous_ts}"
            )
        previous_ts = ts
        percepts = []
        for pidx, prec in enumerate(rec["percepts"]):
            try:
                percept = Percept(
                    percept_id=prec["percept_id"],
                    class_label=prec["class_label"],
                    appearance=np.asarray(prec["appearance"], dtype=np.float64),
                    position=np.asarray(prec["position"], dtype=np.float64),
                    size=np.asarray(prec["size"], dtype=np.float64),
                    timestamp=ts,
                    ground_truth_instance=prec.get("instance"),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{where}: percept {pidx}: {exc}") from exc
            if embedding_dim is None:
                embedding_dim = int(percept.appearance.shape[0])
            try:
                percept.validate(embedding_dim)
            except ValidationError as exc:
                raise ValidationError(f"{where}: {exc}") from exc
            percepts.append(percept)
        frame = Frame(timestamp=ts, percepts=percepts)
        try:
            frame.validate(embedding_dim)
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from exc
        frames.append(frame)
    return header, frames
