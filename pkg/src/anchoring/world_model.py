"""Symbolic world model: types, objects, predicates, and grounded facts.

The knowledge base holds four collections:

* ``types``       - type names objects can be declared with
* ``objects``     - (object id, type name) pairs, one type per id
* ``predicates``  - declared predicate schemas (name, arity, argument kinds,
                    functional flag)
* ``facts``       - ground atoms over declared predicates and objects

Facts are stored in insertion order so queries and snapshots are
deterministic.  Functional predicates keep at most one fact per subject
(first argument); upserting replaces the value in place.

Grounding rules translate anchor attributes into facts.  Three encoders
exist:

* ``verbatim``       - the attribute value itself (class label, timestamp)
* ``zone``           - position discretized into axis-aligned cubic cells,
                       rendered as ``zone_<ix>_<iy>_<iz>``
* ``size_category``  - bounding-box volume bucketed into small / medium /
                       large
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import floor, isfinite
from typing import Any, Iterable, Sequence

from .errors import ValidationError
from .records import SCHEMA_VERSION

# Argument kinds a predicate position may declare.  A type name (member of
# kb.types) means the argument must be a declared object of that type;
# LITERAL accepts strings and finite numbers.
LITERAL = "literal"

SIZE_SMALL = "small"
SIZE_MEDIUM = "medium"
SIZE_LARGE = "large"


@dataclass(frozen=True)
class Fact:
    """A ground atom: predicate name applied to a tuple of arguments."""

    predicate: str
    args: tuple[Any, ...]

    def subject(self) -> Any:
        return self.args[0] if self.args else None


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    arity: int
    arg_kinds: tuple[str, ...]
    functional: bool = False


@dataclass(frozen=True)
class GroundingRule:
    """Maps one anchor attribute to one predicate.

    ``feature`` is one of ``class``, ``position``, ``size``, ``timestamp``;
    ``encoder`` must be valid for that feature's value domain.
    """

    predicate: str
    feature: str
    encoder: str
    cell_size: float = 1.0        # zone encoder: cube edge length in meters
    small_max_volume: float = 0.01   # size_category: below this is small
    large_min_volume: float = 0.5    # size_category: above this is large


_ENCODERS_BY_FEATURE = {
    "class": ("verbatim",),
    "position": ("zone",),
    "size": ("size_category",),
    "timestamp": ("verbatim",),
}


class KnowledgeBase:
    """Mutable symbolic store with validation on every mutation.

    Single-writer: one engine owns and mutates a knowledge base; concurrent
    mutation is unsupported.
    """

    def __init__(self) -> None:
        self.types: set[str] = set()
        self.objects: dict[str, str] = {}
        self.predicates: dict[str, PredicateDecl] = {}
        self.facts: list[Fact] = []

    # -- declarations ------------------------------------------------------

    def declare_type(self, name: str) -> None:
        if not name or not isinstance(name, str):
            raise ValidationError("type name must be a non-empty string")
        self.types.add(name)

    def declare_predicate(
        self,
        name: str,
        arity: int,
        arg_kinds: Sequence[str],
        functional: bool = False,
    ) -> None:
        """Declare a predicate schema.  Redeclaring identically is a no-op;
        redeclaring with a different schema is rejected."""
        if not name or not isinstance(name, str):
            raise ValidationError("predicate name must be a non-empty string")
        if arity < 1:
            raise ValidationError(f"predicate {name!r}: arity must be >= 1, got {arity}")
        kinds = tuple(arg_kinds)
        if len(kinds) != arity:
            raise ValidationError(
                f"predicate {name!r}: {len(kinds)} argument kinds for arity {arity}"
            )
        for kind in kinds:
            if kind != LITERAL and kind not in self.types:
                raise ValidationError(
                    f"predicate {name!r}: argument kind {kind!r} is neither "
                    f"'{LITERAL}' nor a declared type"
                )
        decl = PredicateDecl(name, arity, kinds, functional)
        existing = self.predicates.get(name)
        if existing is not None and existing != decl:
            raise ValidationError(
                f"predicate {name!r} already declared as {existing}, conflicting with {decl}"
            )
        self.predicates[name] = decl

    def add_object(self, object_id: str, type_name: str) -> None:
        """Register an object.  Same id with the same type is idempotent."""
        if not object_id or not isinstance(object_id, str):
            raise ValidationError("object id must be a non-empty string")
        if type_name not in self.types:
            raise ValidationError(f"object {object_id!r}: unknown type {type_name!r}")
        existing = self.objects.get(object_id)
        if existing is not None and existing != type_name:
            raise ValidationError(
                f"object {object_id!r} already declared with type {existing!r}, "
                f"conflicting with {type_name!r}"
            )
        self.objects[object_id] = type_name

    # -- facts ---------------------------------------------------------------

    def _check_fact(self, fact: Fact) -> None:
        decl = self.predicates.get(fact.predicate)
        if decl is None:
            raise ValidationError(f"fact uses undeclared predicate {fact.predicate!r}")
        if len(fact.args) != decl.arity:
            raise ValidationError(
                f"fact {fact.predicate!r}: {len(fact.args)} arguments, "
                f"declared arity {decl.arity}"
            )
        for pos, (kind, arg) in enumerate(zip(decl.arg_kinds, fact.args)):
            if kind == LITERAL:
                if isinstance(arg, bool) or not isinstance(arg, (str, int, float)):
                    raise ValidationError(
                        f"fact {fact.predicate!r}: argument {pos} must be a string "
                        f"or number, got {type(arg).__name__}"
                    )
                if isinstance(arg, float) and not isfinite(arg):
                    raise ValidationError(
                        f"fact {fact.predicate!r}: argument {pos} must be finite"
                    )
            else:
                if arg not in self.objects:
                    raise ValidationError(
                        f"fact {fact.predicate!r}: argument {pos} references "
                        f"unknown object {arg!r}"
                    )
                if self.objects[arg] != kind:
                    raise ValidationError(
                        f"fact {fact.predicate!r}: object {arg!r} has type "
                        f"{self.objects[arg]!r}, expected {kind!r}"
                    )

    def apply_facts(
        self,
        upserts: Iterable[Fact] = (),
        retractions: Iterable[Fact] = (),
    ) -> None:
        """Retract then upsert.  Retracting an absent fact is a no-op.

        For functional predicates an upsert replaces the existing fact with
        the same subject in place, preserving its position in the insertion
        order.  All facts are validated before anything is mutated.
        """
        ups = list(upserts)
        rets = list(retractions)
        for fact in ups:
            self._check_fact(fact)
        for fact in rets:
            if fact.predicate not in self.predicates:
                raise ValidationError(
                    f"retraction uses undeclared predicate {fact.predicate!r}"
                )
        for fact in rets:
            self.facts = [f for f in self.facts if f != fact]
        for fact in ups:
            decl = self.predicates[fact.predicate]
            if decl.functional:
                for i, existing in enumerate(self.facts):
                    if existing.predicate == fact.predicate and existing.subject() == fact.subject():
                        self.facts[i] = fact
                        break
                else:
                    self.facts.append(fact)
            else:
                if fact not in self.facts:
                    self.facts.append(fact)

    def query(self, predicate: str, args: Sequence[Any | None] | None = None) -> list[Fact]:
        """Facts matching the pattern, in insertion order.

        ``None`` in the pattern is a wildcard; an unknown predicate matches
        nothing.
        """
        if predicate not in self.predicates:
            return []
        out = []
        for fact in self.facts:
            if fact.predicate != predicate:
                continue
            if args is not None:
                if len(args) != len(fact.args):
                    continue
                if any(p is not None and p != a for p, a in zip(args, fact.args)):
                    continue
            out.append(fact)
        return out

    # -- integrity -----------------------------------------------------------

    def validate(self) -> None:
        """Raise if any structural invariant is violated."""
        for object_id, type_name in self.objects.items():
            if type_name not in self.types:
                raise ValidationError(
                    f"object {object_id!r} has undeclared type {type_name!r}"
                )
        for decl in self.predicates.values():
            for kind in decl.arg_kinds:
                if kind != LITERAL and kind not in self.types:
                    raise ValidationError(
                        f"predicate {decl.name!r} references undeclared type {kind!r}"
                    )
        seen_functional: set[tuple[str, Any]] = set()
        seen_facts: set[Fact] = set()
        for fact in self.facts:
            self._check_fact(fact)
            if fact in seen_facts:
                raise ValidationError(f"duplicate fact {fact}")
            seen_facts.add(fact)
            if self.predicates[fact.predicate].functional:
                key = (fact.predicate, fact.subject())
                if key in seen_functional:
                    raise ValidationError(
                        f"functional predicate {fact.predicate!r} holds two values "
                        f"for subject {fact.subject()!r}"
                    )
                seen_functional.add(key)

    # -- persistence -----------------------------------------------------------

    def to_snapshot(self) -> bytes:
        """UTF-8 JSON snapshot.  Sets are sorted, facts keep insertion order,
        so equal knowledge bases produce identical bytes."""
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": "knowledge_base",
            "types": sorted(self.types),
            "objects": sorted([oid, t] for oid, t in self.objects.items()),
            "predicates": sorted(
                [d.name, d.arity, list(d.arg_kinds), d.functional]
                for d in self.predicates.values()
            ),
            "facts": [[f.predicate, list(f.args)] for f in self.facts],
        }
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")

    @classmethod
    def from_snapshot(cls, data: bytes | str) -> "KnowledgeBase":
        if isinstance(data, bytes):
            data = data.decode("utf-8", errors="replace")
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"malformed snapshot: {exc.msg} at position {exc.pos}"
            ) from exc
        if not isinstance(doc, dict):
            raise ValidationError("malformed snapshot: top level must be an object")
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValidationError(f"unsupported snapshot schema_version {version!r}")
        if doc.get("kind") != "knowledge_base":
            raise ValidationError(f"snapshot kind {doc.get('kind')!r} is not a knowledge base")
        kb = cls()
        for key in ("types", "objects", "predicates", "facts"):
            if not isinstance(doc.get(key), list):
                raise ValidationError(f"malformed snapshot: {key!r} must be a list")
        for name in doc["types"]:
            kb.declare_type(name)
        for entry in doc["predicates"]:
            if len(entry) != 4:
                raise ValidationError(f"malformed predicate entry {entry!r}")
            name, arity, kinds, functional = entry
            kb.declare_predicate(name, arity, kinds, bool(functional))
        for entry in doc["objects"]:
            if len(entry) != 2:
                raise ValidationError(f"malformed object entry {entry!r}")
            kb.add_object(entry[0], entry[1])
        for entry in doc["facts"]:
            if len(entry) != 2 or not isinstance(entry[1], list):
                raise ValidationError(f"malformed fact entry {entry!r}")
            fact = Fact(entry[0], tuple(entry[1]))
            kb._check_fact(fact)
            kb.facts.append(fact)
        kb.validate()
        return kb

    def same_content(self, other: "KnowledgeBase") -> bool:
        """Set-wise equality of all four collections (fact order ignored)."""
        return (
            self.types == other.types
            and self.objects == other.objects
            and self.predicates == other.predicates
            and set(self.facts) == set(other.facts)
        )


def zone_label(position: Sequence[float], cell_size: float) -> str:
    """Discretize a 3D position into a cubic cell label.

    Cells are half-open boxes of edge ``cell_size`` anchored at the origin;
    the label carries the integer cell indices, e.g. ``zone_2_3_0``.
    """
    if cell_size <= 0:
        raise ValidationError(f"zone cell size must be positive, got {cell_size}")
    ix, iy, iz = (floor(float(c) / cell_size) for c in position)
    return f"zone_{ix}_{iy}_{iz}"


def size_category(size: Sequence[float], small_max: float, large_min: float) -> str:
    """Bucket a bounding box by volume: small below ``small_max`` cubic
    meters, large above ``large_min``, medium between."""
    volume = float(size[0]) * float(size[1]) * float(size[2])
    if volume < small_max:
        return SIZE_SMALL
    if volume > large_min:
        return SIZE_LARGE
    return SIZE_MEDIUM


def ground(subject: Any, rules: Sequence[GroundingRule]) -> list[Fact]:
    """Translate an anchor's attributes into facts, one per rule.

    ``subject`` must expose ``object_id``, ``class_label``, ``position``,
    ``size``, and ``last_timestamp``.  Pure: the subject is not modified and
    identical inputs produce identical fact lists.
    """
    object_id = getattr(subject, "object_id", None)
    if not object_id:
        raise ValidationError("grounding subject has no assigned object id")
    facts = []
    for rule in rules:
        valid = _ENCODERS_BY_FEATURE.get(rule.feature)
        if valid is None:
            raise ValidationError(f"grounding rule references unknown feature {rule.feature!r}")
        if rule.encoder not in valid:
            raise ValidationError(
                f"encoder {rule.encoder!r} is not valid for feature {rule.feature!r}"
            )
        if rule.feature == "class":
            value: Any = str(subject.class_label)
        elif rule.feature == "position":
            value = zone_label(subject.position, rule.cell_size)
        elif rule.feature == "size":
            value = size_category(subject.size, rule.small_max_volume, rule.large_min_volume)
        else:
            value = float(subject.last_timestamp)
        facts.append(Fact(rule.predicate, (object_id, value)))
    return facts


OBJECT_TYPE = "object"
PRED_CLASS = "object_class"
PRED_ZONE = "object_at_zone"
PRED_SIZE = "object_size_category"


def declare_default_vocabulary(kb: KnowledgeBase) -> None:
    """Install the stock type and predicate schemas used by the engine."""
    kb.declare_type(OBJECT_TYPE)
    kb.declare_predicate(PRED_CLASS, 2, (OBJECT_TYPE, LITERAL), functional=True)
    kb.declare_predicate(PRED_ZONE, 2, (OBJECT_TYPE, LITERAL), functional=True)
    kb.declare_predicate(PRED_SIZE, 2, (OBJECT_TYPE, LITERAL), functional=True)


def default_grounding_rules(zone_cell_size: float = 1.0) -> list[GroundingRule]:
    """Class label verbatim, position as 1 m zones, size bucketed by volume."""
    return [
        GroundingRule(PRED_CLASS, "class", "verbatim"),
        GroundingRule(PRED_ZONE, "position", "zone", cell_size=zone_cell_size),
        GroundingRule(PRED_SIZE, "size", "size_category"),
    ]
