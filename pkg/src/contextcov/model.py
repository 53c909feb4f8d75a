"""Constraint data model, stable identifiers, and check descriptors.

A Constraint is one refined, scoped rule extracted from an instruction file.
Its identifier is content-addressed: SHA-256 over the header path joined with
0x1F, then 0x1E, then the slice content text, truncated to 16 hex chars. The
ID deliberately excludes refined_text and domain so re-running a provider
never churns identifiers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union


class Domain(str, Enum):
    PROCESS = "PROCESS"
    SOURCE = "SOURCE"
    ARCH_DETERMINISTIC = "ARCH_DETERMINISTIC"
    ARCH_SEMANTIC = "ARCH_SEMANTIC"


class EnforcementLevel(str, Enum):
    BLOCK = "block"
    WARN = "warn"


KNOWN_LANGUAGES = ("python", "typescript", "javascript", "go", "rust")

# Header-path elements are joined with the unit separator and fenced from the
# content with the record separator so (path, text) pairs cannot collide.
_PATH_SEP = "\x1f"
_CONTENT_SEP = "\x1e"
ID_HEX_LENGTH = 16


def compute_constraint_id(header_path: list[str], content_text: str) -> str:
    data = _PATH_SEP.join(header_path) + _CONTENT_SEP + content_text
    return hashlib.sha256(data.encode("utf-8")).hexdigest()[:ID_HEX_LENGTH]


@dataclass(frozen=True)
class ProcessRule:
    """Block or warn on invocations of the named binaries.

    argv_pattern uses prefix semantics over raw argv tokens: "*" matches any
    single token, a trailing "**" matches any remaining suffix (including an
    empty one), and an empty pattern matches every invocation.
    """

    binaries: tuple[str, ...]
    argv_pattern: tuple[str, ...]
    action: EnforcementLevel
    message: str = ""
    suggestion: str = ""

    kind = "process"


@dataclass(frozen=True)
class SourceRule:
    """An S-expression tree query run against each listed language.

    capture_predicates are (capture name, regex) pairs applied with
    re.search on the captured byte text; a match survives only when every
    predicate passes. found_format/suggestion are str.format templates over
    capture names, used for the Found:/Suggestion: report lines.
    """

    languages: tuple[str, ...]
    query: str
    capture_predicates: tuple[tuple[str, str], ...]
    message: str
    severity: EnforcementLevel
    found_format: str = ""
    suggestion: str = ""

    kind = "source"


@dataclass(frozen=True)
class LayerOrderRule:
    """Dependencies may only flow from later layers to earlier or same."""

    layers: tuple[str, ...]

    kind = "arch_layer_order"


@dataclass(frozen=True)
class AllowedSubdirsRule:
    """Files under parent_prefix must live inside one of the allowed dirs."""

    parent_prefix: str
    allowed: tuple[str, ...]

    kind = "arch_allowed_subdirs"


@dataclass(frozen=True)
class ForbiddenEdgeRule:
    from_glob: str
    to_glob: str

    kind = "arch_forbidden_edge"


@dataclass(frozen=True)
class NoCyclesRule:
    scope_glob: str

    kind = "arch_no_cycles"


@dataclass(frozen=True)
class SemanticRule:
    principle_text: str
    context_hints: tuple[str, ...] = ()

    kind = "semantic"


ArchRule = Union[LayerOrderRule, AllowedSubdirsRule, ForbiddenEdgeRule, NoCyclesRule]
CheckDescriptor = Union[ProcessRule, SourceRule, ArchRule, SemanticRule]

ARCH_KINDS = (
    "arch_layer_order",
    "arch_allowed_subdirs",
    "arch_forbidden_edge",
    "arch_no_cycles",
)

_DOMAIN_KINDS = {
    Domain.PROCESS: ("process",),
    Domain.SOURCE: ("source",),
    Domain.ARCH_DETERMINISTIC: ARCH_KINDS,
    Domain.ARCH_SEMANTIC: ("semantic",),
}


@dataclass
class Constraint:
    id: str
    domain: Domain
    original_text: str
    refined_text: str
    source_file: str
    header_path: list[str]
    enforcement_level: EnforcementLevel
    check: CheckDescriptor
    disabled: bool = False

    def __post_init__(self) -> None:
        if self.check.kind not in _DOMAIN_KINDS[self.domain]:
            raise ValueError(
                f"check kind {self.check.kind!r} does not match domain {self.domain.value}"
            )
        if self.domain is Domain.ARCH_SEMANTIC and self.enforcement_level is not EnforcementLevel.WARN:
            raise ValueError("ARCH_SEMANTIC constraints are always WARN")


def make_constraint(
    *,
    domain: Domain,
    original_text: str,
    refined_text: str,
    source_file: str,
    header_path: list[str],
    enforcement_level: EnforcementLevel,
    check: CheckDescriptor,
) -> Constraint:
    if domain is Domain.ARCH_SEMANTIC:
        enforcement_level = EnforcementLevel.WARN
    return Constraint(
        id=compute_constraint_id(header_path, original_text),
        domain=domain,
        original_text=original_text,
        refined_text=refined_text,
        source_file=source_file,
        header_path=list(header_path),
        enforcement_level=enforcement_level,
        check=check,
    )


def descriptor_to_dict(check: CheckDescriptor) -> dict[str, Any]:
    if isinstance(check, ProcessRule):
        return {
            "kind": check.kind,
            "binaries": list(check.binaries),
            "argv_pattern": list(check.argv_pattern),
            "action": check.action.value,
            "message": check.message,
            "suggestion": check.suggestion,
        }
    if isinstance(check, SourceRule):
        return {
            "kind": check.kind,
            "languages": list(check.languages),
            "query": check.query,
            "capture_predicates": [list(p) for p in check.capture_predicates],
            "message": check.message,
            "severity": check.severity.value,
            "found_format": check.found_format,
            "suggestion": check.suggestion,
        }
    if isinstance(check, LayerOrderRule):
        return {"kind": check.kind, "layers": list(check.layers)}
    if isinstance(check, AllowedSubdirsRule):
        return {
            "kind": check.kind,
            "parent_prefix": check.parent_prefix,
            "allowed": sorted(check.allowed),
        }
    if isinstance(check, ForbiddenEdgeRule):
        return {"kind": check.kind, "from_glob": check.from_glob, "to_glob": check.to_glob}
    if isinstance(check, NoCyclesRule):
        return {"kind": check.kind, "scope_glob": check.scope_glob}
    if isinstance(check, SemanticRule):
        return {
            "kind": check.kind,
            "principle_text": check.principle_text,
            "context_hints": list(check.context_hints),
        }
    raise TypeError(f"unknown descriptor type: {type(check)!r}")


def descriptor_from_dict(data: dict[str, Any]) -> CheckDescriptor:
    kind = data.get("kind")
    if kind == "process":
        return ProcessRule(
            binaries=tuple(data["binaries"]),
            argv_pattern=tuple(data["argv_pattern"]),
            action=EnforcementLevel(data["action"]),
            message=data.get("message", ""),
            suggestion=data.get("suggestion", ""),
        )
    if kind == "source":
        return SourceRule(
            languages=tuple(data["languages"]),
            query=data["query"],
            capture_predicates=tuple((p[0], p[1]) for p in data["capture_predicates"]),
            message=data.get("message", ""),
            severity=EnforcementLevel(data["severity"]),
            found_format=data.get("found_format", ""),
            suggestion=data.get("suggestion", ""),
        )
    if kind == "arch_layer_order":
        return LayerOrderRule(layers=tuple(data["layers"]))
    if kind == "arch_allowed_subdirs":
        return AllowedSubdirsRule(
            parent_prefix=data["parent_prefix"], allowed=tuple(data["allowed"])
        )
    if kind == "arch_forbidden_edge":
        return ForbiddenEdgeRule(from_glob=data["from_glob"], to_glob=data["to_glob"])
    if kind == "arch_no_cycles":
        return NoCyclesRule(scope_glob=data["scope_glob"])
    if kind == "semantic":
        return SemanticRule(
            principle_text=data["principle_text"],
            context_hints=tuple(data.get("context_hints", ())),
        )
    raise ValueError(f"unknown check kind: {kind!r}")


def constraint_to_dict(c: Constraint) -> dict[str, Any]:
    out: dict[str, Any] = {
        "domain": c.domain.value,
        "original_text": c.original_text,
        "refined_text": c.refined_text,
        "source_file": c.source_file,
        "header_path": list(c.header_path),
        "enforcement_level": c.enforcement_level.value,
        "check": descriptor_to_dict(c.check),
    }
    if c.disabled:
        out["disabled"] = True
    return out


def constraint_from_dict(constraint_id: str, data: dict[str, Any]) -> Constraint:
    return Constraint(
        id=constraint_id,
        domain=Domain(data["domain"]),
        original_text=data["original_text"],
        refined_text=data["refined_text"],
        source_file=data["source_file"],
        header_path=list(data["header_path"]),
        enforcement_level=EnforcementLevel(data["enforcement_level"]),
        check=descriptor_from_dict(data["check"]),
        disabled=bool(data.get("disabled", False)),
    )
