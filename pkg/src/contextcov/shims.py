"""PATH-shim interception for process constraints.

install_shims writes one POSIX wrapper per monitored binary into a shim
directory meant to be prepended to PATH. Each wrapper execs the package's
shim-exec entry, which evaluates stored process rules for that binary and
either blocks (exit 1), warns, or replaces itself with the real binary found
later on PATH. A manifest records wrapper hashes so uninstall and status can
tell our files from anything else.
"""

from __future__ import annotations

import hashlib
import json
import os
import stat
import sys
from dataclasses import dataclass, field

from .model import Constraint, Domain, EnforcementLevel, ProcessRule
from .store import (
    STORE_ENV_VAR,
    CheckStore,
    StoreError,
    load_store,
    resolve_store_path,
)

DISABLE_ENV_VAR = "CONTEXTCOV_DISABLE"
FAIL_OPEN_ENV_VAR = "CONTEXTCOV_FAIL_OPEN"
SHIM_DIR_ENV_VAR = "CONTEXTCOV_SHIM_DIR"
MANIFEST_NAME = ".manifest.json"

_WRAPPER_TEMPLATE = """\
#!/bin/sh
: "${{{store_var}:={store_path}}}"
export {store_var}
: "${{{shim_dir_var}:={shim_dir}}}"
export {shim_dir_var}
exec {python} -m contextcov shim-exec {name} "$@"
"""


class ShimError(Exception):
    pass


@dataclass
class ShimStatus:
    shim_dir: str
    store_path: str
    wrappers: list[dict] = field(default_factory=list)
    store_exists: bool = False
    on_path: bool = False


def default_shim_dir(store_path: str) -> str:
    return os.path.join(os.path.dirname(os.path.abspath(store_path)), "bin")


def resolve_shim_dir(explicit: str | None, store_path: str) -> str:
    if explicit:
        return explicit
    env = os.environ.get(SHIM_DIR_ENV_VAR)
    if env:
        return env
    return default_shim_dir(store_path)


def match_argv(args: list[str], pattern: list[str]) -> bool:
    """Prefix match over argv tokens. `*` consumes exactly one token, a
    trailing `**` consumes any remainder including none. An empty pattern
    matches every invocation. A non-trailing `**` is an ordinary literal."""
    if not pattern:
        return True
    if pattern[-1] == "**":
        head = pattern[:-1]
        if len(head) > len(args):
            return False
        return all(p == "*" or p == a for p, a in zip(head, args))
    if len(pattern) > len(args):
        return False
    return all(p == "*" or p == a for p, a in zip(pattern, args))


def monitored_binaries(store: CheckStore) -> list[str]:
    names: set[str] = set()
    for constraint in store.constraints.values():
        if constraint.disabled:
            continue
        if isinstance(constraint.check, ProcessRule):
            names.update(constraint.check.binaries)
    return sorted(names)


def _wrapper_text(name: str, store_path: str, shim_dir: str, python: str) -> str:
    # The wrapper pins its own directory so forwarding skips it on PATH
    # even when the wrappers live somewhere other than the default spot.
    return _WRAPPER_TEMPLATE.format(
        store_var=STORE_ENV_VAR,
        store_path=os.path.abspath(store_path),
        shim_dir_var=SHIM_DIR_ENV_VAR,
        shim_dir=os.path.abspath(shim_dir),
        python=python,
        name=name,
    )


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _load_manifest(shim_dir: str) -> dict:
    path = os.path.join(shim_dir, MANIFEST_NAME)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, ValueError):
        return {}
    return data if isinstance(data, dict) else {}


def install_shims(
    store: CheckStore,
    store_path: str,
    shim_dir: str,
    python: str | None = None,
) -> list[str]:
    """Write wrappers for every monitored binary; returns their names.

    Refuses to overwrite files it did not create (hash not in manifest).
    """
    python = python or sys.executable
    names = monitored_binaries(store)
    os.makedirs(shim_dir, exist_ok=True)
    manifest = _load_manifest(shim_dir)
    known_hashes = manifest.get("wrappers", {})

    for name in names:
        target = os.path.join(shim_dir, name)
        text = _wrapper_text(name, store_path, shim_dir, python)
        if os.path.exists(target):
            with open(target, "r", encoding="utf-8") as fh:
                existing = fh.read()
            if _sha256(existing) not in set(known_hashes.values()) and existing != text:
                raise ShimError(
                    f"refusing to overwrite {target}: not a wrapper we installed"
                )
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.chmod(
            target,
            stat.S_IRWXU | stat.S_IRGRP | stat.S_IXGRP | stat.S_IROTH | stat.S_IXOTH,
        )

    # Drop wrappers for binaries no longer monitored.
    for stale in set(known_hashes) - set(names):
        path = os.path.join(shim_dir, stale)
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                existing = fh.read()
            if _sha256(existing) == known_hashes[stale]:
                os.remove(path)

    new_manifest = {
        "python": python,
        "store": os.path.abspath(store_path),
        "wrappers": {
            name: _sha256(_wrapper_text(name, store_path, shim_dir, python))
            for name in names
        },
    }
    with open(os.path.join(shim_dir, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        json.dump(new_manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return names


def uninstall_shims(shim_dir: str) -> list[str]:
    """Remove wrappers recorded in the manifest whose content still matches."""
    manifest = _load_manifest(shim_dir)
    removed: list[str] = []
    for name, digest in manifest.get("wrappers", {}).items():
        path = os.path.join(shim_dir, name)
        if not os.path.exists(path):
            continue
        with open(path, "r", encoding="utf-8") as fh:
            existing = fh.read()
        if _sha256(existing) == digest:
            os.remove(path)
            removed.append(name)
    manifest_path = os.path.join(shim_dir, MANIFEST_NAME)
    if os.path.exists(manifest_path):
        os.remove(manifest_path)
    return sorted(removed)


def shim_status(shim_dir: str, store_path: str) -> ShimStatus:
    manifest = _load_manifest(shim_dir)
    status = ShimStatus(
        shim_dir=shim_dir,
        store_path=store_path,
        store_exists=os.path.isfile(store_path),
        on_path=_dir_on_path(shim_dir, os.environ.get("PATH", "")),
    )
    for name, digest in sorted(manifest.get("wrappers", {}).items()):
        path = os.path.join(shim_dir, name)
        present = os.path.isfile(path)
        intact = False
        if present:
            with open(path, "r", encoding="utf-8") as fh:
                intact = _sha256(fh.read()) == digest
        status.wrappers.append({"name": name, "present": present, "intact": intact})
    return status


def _dir_on_path(directory: str, path_value: str) -> bool:
    want = os.path.realpath(directory)
    return any(
        os.path.realpath(entry) == want for entry in path_value.split(os.pathsep) if entry
    )


# ---------------------------------------------------------------------------
# Invocation-time evaluation


@dataclass(frozen=True)
class Verdict:
    action: str  # "allow" | "block" | "warn"
    rule_id: str = ""
    constraint: Constraint | None = None


def evaluate_invocation(
    binary: str, args: list[str], store: CheckStore
) -> tuple[Verdict, list[Verdict]]:
    """(final verdict, warn verdicts) in lexicographic rule-ID order.

    The final verdict is the first BLOCK, else ALLOW; warns accumulate."""
    warns: list[Verdict] = []
    for rule_id in sorted(store.constraints):
        constraint = store.constraints[rule_id]
        if constraint.disabled or constraint.domain is not Domain.PROCESS:
            continue
        rule = constraint.check
        if not isinstance(rule, ProcessRule):
            continue
        if binary not in rule.binaries:
            continue
        if not match_argv(args, list(rule.argv_pattern)):
            continue
        if rule.action is EnforcementLevel.BLOCK:
            return Verdict("block", rule_id, constraint), warns
        warns.append(Verdict("warn", rule_id, constraint))
    return Verdict("allow"), warns


def find_real_binary(name: str, shim_dir: str, path_value: str) -> str | None:
    """First executable `name` on PATH outside any shim directory.

    Directories holding a wrapper manifest are skipped even when they are
    not the active shim dir; forwarding into a stale wrapper would recurse.
    """
    skip = os.path.realpath(shim_dir) if shim_dir else None
    for entry in path_value.split(os.pathsep):
        if not entry:
            continue
        if skip is not None and os.path.realpath(entry) == skip:
            continue
        if os.path.exists(os.path.join(entry, MANIFEST_NAME)):
            continue
        candidate = os.path.join(entry, name)
        if os.path.isfile(candidate) and os.access(candidate, os.X_OK):
            return candidate
    return None


def _shim_dir_from_env() -> str:
    env = os.environ.get(SHIM_DIR_ENV_VAR)
    if env:
        return env
    # Wrappers live beside the store by default.
    return default_shim_dir(resolve_store_path(None))


def run_shim(binary: str, args: list[str]) -> int:
    """Evaluate and forward; only returns when the command is not forwarded.

    On ALLOW this exec-replaces the current process with the real binary,
    so the real exit code propagates untouched.
    """
    from .reports import render_process_block

    shim_dir = _shim_dir_from_env()

    def forward() -> int:
        real = find_real_binary(binary, shim_dir, os.environ.get("PATH", ""))
        if real is None:
            print(
                f"[ContextCov] real binary not found on PATH: {binary}",
                file=sys.stderr,
            )
            return 127
        os.execv(real, [binary, *args])
        raise AssertionError("unreachable")

    if os.environ.get(DISABLE_ENV_VAR) == "1":
        return forward()

    store_path = resolve_store_path(None)
    try:
        store = load_store(store_path)
    except StoreError as exc:
        if os.environ.get(FAIL_OPEN_ENV_VAR) == "1":
            print(
                f"[ContextCov] warning: {exc}; forwarding because "
                f"{FAIL_OPEN_ENV_VAR}=1",
                file=sys.stderr,
            )
            return forward()
        print(
            f"[ContextCov] check store unavailable ({exc}); failing closed. "
            f"Set {FAIL_OPEN_ENV_VAR}=1 to forward anyway.",
            file=sys.stderr,
        )
        return 1

    final, warns = evaluate_invocation(binary, args, store)
    for warn in warns:
        assert warn.constraint is not None
        print(
            f"[ContextCov] WARNING: process constraint matched\n"
            f'  Rule: "{warn.constraint.original_text}"',
            file=sys.stderr,
        )
    if final.action == "block":
        assert final.constraint is not None
        print(render_process_block(final.constraint), file=sys.stderr)
        return 1
    return forward()
