"""Line-oriented record files and config digests.

All multi-record artifacts (scenes, pair datasets, event logs) share one
layout: a single JSON header line followed by one JSON record per line.
The header always carries ``schema_version`` and ``kind`` plus whatever
metadata the writer supplies (seed, config digest).  Wall-clock data never
goes into these files so that reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable

from .errors import ValidationError

SCHEMA_VERSION = 1


def canonical_json(obj: Any) -> str:
    """Serialize ``obj`` with sorted keys and no whitespace padding."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(obj: Any) -> str:
    """Hex digest identifying a resolved configuration mapping."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def write_records(
    path: str | Path,
    kind: str,
    header: dict[str, Any],
    records: Iterable[dict[str, Any]],
) -> None:
    """Write a header line plus one record per line.

    ``schema_version`` and ``kind`` are injected into the header; the caller
    must not pass conflicting values.
    """
    head = {"schema_version": SCHEMA_VERSION, "kind": kind}
    for key, value in header.items():
        if key in head and value != head[key]:
            raise ValidationError(f"header key {key!r} conflicts with required value")
        head[key] = value
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(canonical_json(head) + "\n")
        for record in records:
            fh.write(canonical_json(record) + "\n")


def read_records(path: str | Path, kind: str) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    """Read a header+records file, validating version and kind.

    Errors name the file and the 1-based line of the first bad record.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ValidationError(f"{path}: missing header line")
    header = _parse_line(path, 1, lines[0])
    version = header.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValidationError(
            f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})"
        )
    if header.get("kind") != kind:
        raise ValidationError(f"{path}: kind {header.get('kind')!r}, expected {kind!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        records.append(_parse_line(path, lineno, line))
    return header, records


def _parse_line(path: Path, lineno: int, line: str) -> dict[str, Any]:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {lineno}: invalid JSON at column {exc.colno}") from exc
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: line {lineno}: expected a JSON object")
    return obj
