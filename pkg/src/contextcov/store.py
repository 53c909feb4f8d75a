"""Persistent check store: versioned JSON, loaded once, merged incrementally.

The on-disk shape is a single object {"version": 1, "constraints": {...}}
with constraint IDs as keys. Keys serialize in lexicographic order so diffs
stay reviewable. Unknown versions are rejected; structural damage and
missing files raise distinct errors so callers can advise differently.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .model import Constraint, constraint_from_dict, constraint_to_dict

STORE_VERSION = 1
DEFAULT_STORE_PATH = os.path.join(".contextcov", "checks.json")
STORE_ENV_VAR = "CONTEXTCOV_STORE"


class StoreError(Exception):
    pass


class StoreNotFoundError(StoreError):
    pass


class StoreFormatError(StoreError):
    pass


class UnsupportedVersionError(StoreError):
    pass


class ExtractionCollisionError(StoreError):
    def __init__(self, constraint_id: str) -> None:
        super().__init__(f"duplicate constraint ID in fresh extraction: {constraint_id}")
        self.constraint_id = constraint_id


@dataclass
class CheckStore:
    version: int = STORE_VERSION
    constraints: dict[str, Constraint] = field(default_factory=dict)


@dataclass
class ChangeReport:
    added: list[str]
    removed: list[str]
    retained: list[str]


def resolve_store_path(explicit: str | None = None) -> Path:
    """--store flag beats CONTEXTCOV_STORE beats the default location."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(STORE_ENV_VAR)
    if env:
        return Path(env)
    return Path(DEFAULT_STORE_PATH)


def store_to_json(store: CheckStore) -> str:
    payload = {
        "version": store.version,
        "constraints": {
            cid: constraint_to_dict(c) for cid, c in store.constraints.items()
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_store(store: CheckStore, path: str | Path) -> None:
    from .synthesis import validate_descriptor  # local: avoids an import cycle

    for cid, constraint in store.constraints.items():
        if constraint.id != cid:
            raise StoreFormatError(f"constraint keyed {cid} carries id {constraint.id}")
        result = validate_descriptor(constraint.check)
        if not result.ok:
            raise StoreFormatError(
                f"constraint {cid} has an invalid descriptor: {'; '.join(result.diagnostics)}"
            )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(store_to_json(store), encoding="utf-8")


def load_store(path: str | Path) -> CheckStore:
    path = Path(path)
    if not path.is_file():
        raise StoreNotFoundError(f"check store not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise StoreFormatError(f"check store unreadable: {path}: {exc}") from exc
    if not isinstance(payload, dict) or "version" not in payload:
        raise StoreFormatError(f"check store malformed (no version field): {path}")
    if payload["version"] != STORE_VERSION:
        raise UnsupportedVersionError(
            f"unsupported store version {payload['version']!r} (expected {STORE_VERSION})"
        )
    raw = payload.get("constraints")
    if not isinstance(raw, dict):
        raise StoreFormatError(f"check store malformed (constraints map missing): {path}")
    constraints: dict[str, Constraint] = {}
    for cid, data in raw.items():
        try:
            constraints[cid] = constraint_from_dict(cid, data)
        except (KeyError, TypeError, ValueError) as exc:
            raise StoreFormatError(f"constraint {cid} malformed: {exc}") from exc
    return CheckStore(version=payload["version"], constraints=constraints)


def merge_incremental(
    old: CheckStore, fresh_constraints: list[Constraint]
) -> tuple[CheckStore, ChangeReport]:
    """Result holds exactly the fresh IDs; retained IDs keep the old objects
    (and therefore their previously synthesized checks) unchanged."""
    seen: set[str] = set()
    for c in fresh_constraints:
        if c.id in seen:
            raise ExtractionCollisionError(c.id)
        seen.add(c.id)
    merged: dict[str, Constraint] = {}
    added: list[str] = []
    retained: list[str] = []
    for c in fresh_constraints:
        if c.id in old.constraints:
            merged[c.id] = old.constraints[c.id]
            retained.append(c.id)
        else:
            merged[c.id] = c
            added.append(c.id)
    removed = [cid for cid in old.constraints if cid not in seen]
    report = ChangeReport(
        added=sorted(added), removed=sorted(removed), retained=sorted(retained)
    )
    return CheckStore(version=STORE_VERSION, constraints=merged), report
