"""Snapshot persistence: canonical JSON, atomic writes, schema versioning.

The snapshot is the single source of truth for resuming a run.  Writes are
canonical (sorted keys, fixed indentation, trailing newline) so identical
states produce identical bytes.  All paths stored inside a snapshot are
relative to the snapshot's own directory.
"""

from __future__ import annotations

import json
import os
import random
from pathlib import Path
from typing import Any

from vpsearch.errors import SnapshotError

SCHEMA_VERSION = "1.0"
SNAPSHOT_NAME = "snapshot.json"


def encode_rng_state(state: tuple) -> list:
    version, internal, gauss_next = state
    return [version, list(internal), gauss_next]


def decode_rng_state(data: list) -> tuple:
    version, internal, gauss_next = data
    return (version, tuple(internal), gauss_next)


def rng_from_state(data: list) -> random.Random:
    rng = random.Random()
    rng.setstate(decode_rng_state(data))
    return rng


def dumps_canonical(document: dict[str, Any]) -> str:
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_snapshot(document: dict[str, Any], path: str | Path) -> None:
    """Atomically write a snapshot document (write-temp + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dumps_canonical(document)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(payload)
    os.replace(tmp, path)


def read_snapshot(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise SnapshotError(f"snapshot not found: {path}")
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"snapshot {path} is corrupt: {exc}") from exc
    version = document.get("schema_version")
    if not isinstance(version, str):
        raise SnapshotError(f"snapshot {path} carries no schema_version")
    major = version.split(".", 1)[0]
    if major != SCHEMA_VERSION.split(".", 1)[0]:
        raise SnapshotError(
            f"snapshot schema {version} is incompatible with this build (supports {SCHEMA_VERSION})"
        )
    return document
