"""Anchoring engine: keeps percept streams attached to symbolic objects.

Per frame:

1. With no anchors yet, every percept founds a new anchor (acquire).
2. Otherwise a matching table is built (rows: the frame's percepts,
   columns: all anchors, entries: matcher scores) and solved for the
   maximum-similarity one-to-one assignment.
3. An assigned percept whose score is strictly above the threshold extends
   its anchor (reacquire); at or below the threshold it founds a new anchor
   instead, as does every unassigned percept.
4. Anchors unseen for longer than the staleness window are marked stale;
   they stay in the table and a later reacquire revives them.

Every acquire registers a fresh object in the knowledge base and grounds
the anchor's attributes into facts; every reacquire re-grounds them,
replacing the old values of the functional predicates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Protocol, Sequence

import numpy as np

from .assignment import Assignment, MatchingTable, solve
from .errors import ValidationError
from .pair_features import PairFeatures, compare
from .percepts import ACTIVE, STALE, Anchor, Frame, Percept, anchor_from_percept
from .records import read_records, write_records
from .world_model import (
    OBJECT_TYPE,
    PRED_CLASS,
    PRED_SIZE,
    PRED_ZONE,
    GroundingRule,
    KnowledgeBase,
    declare_default_vocabulary,
    default_grounding_rules,
    ground,
)


class Matcher(Protocol):
    def score(self, pair: PairFeatures) -> float: ...


@dataclass(frozen=True)
class EngineConfig:
    threshold: float = 0.5          # reacquire only on score strictly above
    staleness: float = 5.0          # seconds unseen before an anchor goes stale
    smoothing: float | None = None  # None: replace features; beta in (0, 1]: blend
    zone_cell_size: float = 1.0

    def validate(self) -> None:
        if not (0.0 < self.threshold < 1.0):
            raise ValidationError(f"threshold must lie in (0, 1), got {self.threshold}")
        if not self.staleness > 0:
            raise ValidationError(f"staleness must be > 0, got {self.staleness}")
        if self.smoothing is not None and not (0.0 < self.smoothing <= 1.0):
            raise ValidationError(f"smoothing beta must lie in (0, 1], got {self.smoothing}")
        if not self.zone_cell_size > 0:
            raise ValidationError(f"zone_cell_size must be > 0, got {self.zone_cell_size}")


@dataclass
class FrameEvents:
    """Audit record of one processed frame."""

    frame_index: int
    timestamp: float
    acquired: list[tuple[str, str]] = field(default_factory=list)            # (percept, anchor)
    reacquired: list[tuple[str, str, float]] = field(default_factory=list)   # + match score
    tracked_stale: list[str] = field(default_factory=list)                   # newly stale anchors


@dataclass(frozen=True)
class FindResult:
    anchor_id: str
    object_id: str
    score: float


class AnchoringEngine:
    """Single-writer engine owning its anchors and knowledge base."""

    def __init__(
        self,
        matcher: Matcher,
        config: EngineConfig | None = None,
        kb: KnowledgeBase | None = None,
        grounding_rules: Sequence[GroundingRule] | None = None,
    ) -> None:
        self.config = config if config is not None else EngineConfig()
        self.config.validate()
        self.matcher = matcher
        if kb is None:
            kb = KnowledgeBase()
            declare_default_vocabulary(kb)
        self.kb = kb
        if grounding_rules is None:
            grounding_rules = default_grounding_rules(self.config.zone_cell_size)
        self.grounding_rules = list(grounding_rules)
        self.anchors: list[Anchor] = []
        self._by_anchor_id: dict[str, Anchor] = {}
        self._by_object_id: dict[str, Anchor] = {}
        self._next_id = 0
        self._frame_count = 0
        self._last_timestamp: float | None = None

    # -- functionalities -----------------------------------------------------

    def acquire(self, percept: Percept) -> Anchor:
        """Found a new anchor and register its object in the knowledge base."""
        index = self._next_id
        self._next_id += 1
        object_id = f"obj_{index}"
        anchor = anchor_from_percept(percept, object_id, anchor_id=f"anchor_{index}")
        self.kb.add_object(object_id, OBJECT_TYPE)
        self.kb.apply_facts(upserts=ground(anchor, self.grounding_rules))
        self.anchors.append(anchor)
        self._by_anchor_id[anchor.anchor_id] = anchor
        self._by_object_id[object_id] = anchor
        return anchor

    def reacquire(self, anchor: Anchor, percept: Percept) -> None:
        """Extend an anchor with a new observation of the same object."""
        if percept.timestamp < anchor.last_timestamp:
            raise ValidationError(
                f"reacquire of {anchor.anchor_id!r}: percept timestamp "
                f"{percept.timestamp} precedes anchor's {anchor.last_timestamp}"
            )
        beta = self.config.smoothing
        if beta is None:
            anchor.appearance = percept.appearance.copy()
            anchor.position = percept.position.copy()
            anchor.size = percept.size.copy()
        else:
            anchor.appearance = beta * percept.appearance + (1.0 - beta) * anchor.appearance
            anchor.position = beta * percept.position + (1.0 - beta) * anchor.position
            anchor.size = beta * percept.size + (1.0 - beta) * anchor.size
        # class label is frozen at acquisition
        anchor.last_timestamp = float(percept.timestamp)
        anchor.observation_count += 1
        anchor.status = ACTIVE
        self.kb.apply_facts(upserts=ground(anchor, self.grounding_rules))

    def track(self, anchor: Anchor, now: float) -> bool:
        """Constant-position carry-forward: no state changes except the
        staleness evaluation.  Returns True when this call made it stale."""
        if now < anchor.last_timestamp:
            raise ValidationError(
                f"track of {anchor.anchor_id!r}: now={now} precedes last "
                f"observation {anchor.last_timestamp}"
            )
        if anchor.status == ACTIVE and now - anchor.last_timestamp > self.config.staleness:
            anchor.status = STALE
            return True
        return False

    def find(self, object_id: str, facts: Any = None) -> FindResult | None:
        """Top-down lookup: symbol to anchor.

        If the object already has an anchor it is returned directly.
        Otherwise a prototype is assembled from the object's facts (class
        required; zone and size category optional) and scored against every
        active anchor; the best score wins if strictly above the threshold.
        Unknown attributes are neutralized per comparison by borrowing the
        anchor's own value, so only the described attributes discriminate.
        """
        kb = self.kb if facts is None else facts
        existing = self._by_object_id.get(object_id)
        if existing is not None:
            return FindResult(existing.anchor_id, object_id, 1.0)

        class_facts = kb.query(PRED_CLASS, (object_id, None))
        if not class_facts:
            raise ValidationError(
                f"find({object_id!r}): no class fact to build a prototype from"
            )
        class_label = str(class_facts[-1].args[1])
        zone_facts = kb.query(PRED_ZONE, (object_id, None))
        position = _zone_centroid(zone_facts[-1].args[1], self.config.zone_cell_size) \
            if zone_facts else None
        size_facts = kb.query(PRED_SIZE, (object_id, None))
        size = _category_size(size_facts[-1].args[1]) if size_facts else None

        best: FindResult | None = None
        for anchor in self.anchors:
            if anchor.status != ACTIVE:
                continue
            if anchor.class_label != class_label:
                continue
            probe = Percept(
                percept_id=f"find_{object_id}",
                class_label=class_label,
                appearance=anchor.appearance,        # neutral: cosine term = 1
                position=position if position is not None else anchor.position,
                size=size if size is not None else anchor.size,
                timestamp=anchor.last_timestamp,     # neutral: no time decay
            )
            score = self.matcher.score(compare(probe, anchor))
            if best is None or score > best.score:
                best = FindResult(anchor.anchor_id, object_id, score)
        if best is not None and best.score > self.config.threshold:
            return best
        return None

    # -- per-frame loop ----------------------------------------------------------

    def create_matching_table(self, percepts: Sequence[Percept], anchors: Sequence[Anchor]) -> MatchingTable:
        """Score every percept against every anchor.  Rows and columns keep
        the input order; stale anchors participate like active ones."""
        values = np.zeros((len(percepts), len(anchors)))
        for i, percept in enumerate(percepts):
            for j, anchor in enumerate(anchors):
                values[i, j] = self.matcher.score(compare(percept, anchor))
        return MatchingTable(
            values=values,
            row_ids=[p.percept_id for p in percepts],
            col_ids=[a.anchor_id for a in anchors],
        )

    def process_frame(self, frame: Frame) -> FrameEvents:
        if self._last_timestamp is not None and frame.timestamp < self._last_timestamp:
            raise ValidationError(
                f"frame timestamp {frame.timestamp} precedes already processed "
                f"{self._last_timestamp}"
            )
        frame.validate()
        events = FrameEvents(frame_index=self._frame_count, timestamp=float(frame.timestamp))

        if not self.anchors:
            for percept in frame.percepts:
                anchor = self.acquire(percept)
                events.acquired.append((percept.percept_id, anchor.anchor_id))
        elif frame.percepts:
            anchors = list(self.anchors)  # snapshot: new anchors join next frame's table
            table = self.create_matching_table(frame.percepts, anchors)
            assigned = dict(solve(table).pairs)
            for i, percept in enumerate(frame.percepts):
                j = assigned.get(i)
                if j is not None and table.values[i, j] > self.config.threshold:
                    anchor = anchors[j]
                    self.reacquire(anchor, percept)
                    events.reacquired.append(
                        (percept.percept_id, anchor.anchor_id, float(table.values[i, j]))
                    )
                else:
                    anchor = self.acquire(percept)
                    events.acquired.append((percept.percept_id, anchor.anchor_id))

        for anchor in self.anchors:
            if self.track(anchor, float(frame.timestamp)):
                events.tracked_stale.append(anchor.anchor_id)

        self._frame_count += 1
        self._last_timestamp = float(frame.timestamp)
        return events

    def run(self, frames: Iterable[Frame]) -> list[FrameEvents]:
        return [self.process_frame(frame) for frame in frames]


def _zone_centroid(zone: str, cell_size: float) -> np.ndarray:
    parts = zone.split("_")
    if len(parts) != 4 or parts[0] != "zone":
        raise ValidationError(f"malformed zone label {zone!r}")
    try:
        idx = np.array([int(p) for p in parts[1:]], dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(f"malformed zone label {zone!r}") from exc
    return (idx + 0.5) * cell_size


# representative cube volumes per size bucket, cubic meters
_CATEGORY_VOLUMES = {"small": 0.005, "medium": 0.255, "large": 1.0}


def _category_size(category: str) -> np.ndarray:
    volume = _CATEGORY_VOLUMES.get(str(category))
    if volume is None:
        raise ValidationError(f"unknown size category {category!r}")
    return np.full(3, volume ** (1.0 / 3.0))


# -- event log files --------------------------------------------------------------

EVENTS_KIND = "engine_events"


def write_events(
    path: str | Path,
    events: Sequence[FrameEvents],
    meta: dict[str, Any] | None = None,
) -> None:
    header: dict[str, Any] = dict(meta) if meta else {}
    records = [
        {
            "frame_index": e.frame_index,
            "timestamp": e.timestamp,
            "acquired": [[pid, aid] for pid, aid in e.acquired],
            "reacquired": [[pid, aid, value] for pid, aid, value in e.reacquired],
            "tracked_stale": list(e.tracked_stale),
        }
        for e in events
    ]
    write_records(path, EVENTS_KIND, header, records)


def read_events(path: str | Path) -> tuple[dict[str, Any], list[FrameEvents]]:
    header, records = read_records(path, EVENTS_KIND)
    events = []
    for idx, rec in enumerate(records):
        try:
            events.append(
                FrameEvents(
                    frame_index=int(rec["frame_index"]),
                    timestamp=float(rec["timestamp"]),
                    acquired=[(p, a) for p, a in rec["acquired"]],
                    reacquired=[(p, a, float(v)) for p, a, v in rec["reacquired"]],
                    tracked_stale=[str(a) for a in rec["tracked_stale"]],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{path}: event record {idx}: {exc}") from exc
    return header, events
