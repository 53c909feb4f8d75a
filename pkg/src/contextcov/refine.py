"""Refine raw slices into standalone statements and route them to a domain.

Both stages have deterministic behavior that remote mode can only override
in safe ways: filtering (is_constraint) is always the lexicon, remote refine
may rewrite the text, and remote routing replies must pass a strict schema
or the keyword cascade decides. The cascade is fail-closed: anything it
cannot place lands in ARCH_SEMANTIC, which is WARN-only by construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .instructions import Slice
from .model import Domain, EnforcementLevel
from .provider import ProviderConfig, complete_json

# Imperative/modal markers that make a slice a candidate constraint.
CONSTRAINT_MARKERS = (
    "must not",
    "must",
    "never",
    "always",
    "use",
    "prefer",
    "avoid",
    "do not",
    "don't",
    "only",
    "mandatory",
    "required",
    "forbid",
    "block",
)
_MARKER_RE = re.compile(
    r"\b(?:" + "|".join(re.escape(m) for m in CONSTRAINT_MARKERS) + r")\b",
    re.IGNORECASE,
)

# BLOCK level comes only from these tokens; everything else is WARN.
_BLOCK_RE = re.compile(r"\b(?:mandatory|never|must\s+not)\b", re.IGNORECASE)

# "`src/vs/base/` - Foundation utilities" style listing items.
_PATH_LISTING_RE = re.compile(
    r"^[*_]*`?(?P<path>[A-Za-z0-9_.~@-]+(?:/[A-Za-z0-9_.~@-]+)*/)`?[*_]*\s*[-–—:]\s+\S"
)

_ARCH_HEADING_RE = re.compile(r"architecture|structure", re.IGNORECASE)
_ARCH_TOPIC_RE = re.compile(
    r"\b(?:layers?|layered|architecture|depends?|dependency|dependencies|imports?|circular)\b",
    re.IGNORECASE,
)

# Binary names said plainly in prose. Names that collide with common English
# ("make", "go") or with prose-y nouns ("node", "cargo", "poetry", "uv") are
# recognized only inside backticks to avoid misrouting design principles.
UNAMBIGUOUS_BINARIES = frozenset(
    {
        "npm",
        "pnpm",
        "yarn",
        "bun",
        "pip",
        "pip3",
        "npx",
        "tsc",
        "pytest",
        "jest",
        "mocha",
        "vitest",
        "tox",
        "webpack",
        "vite",
        "gradle",
        "mvn",
        "bazel",
        "cmake",
        "docker",
        "git",
        "eslint",
        "prettier",
    }
)
BACKTICK_ONLY_BINARIES = frozenset(
    {"make", "go", "node", "cargo", "poetry", "uv", "python", "python3", "sh", "bash"}
)
KNOWN_BINARIES = UNAMBIGUOUS_BINARIES | BACKTICK_ONLY_BINARIES

# Fail-closed known-alternatives families: "use X" blocks the rest of X's family.
ALTERNATIVE_FAMILIES = (
    frozenset({"npm", "pnpm", "yarn", "bun"}),
    frozenset({"pip", "pip3", "uv", "poetry"}),
)

_SOURCE_TOKEN_RE = re.compile(
    r"\b(?:functions?|class(?:es)?|types?|naming|names?|style|variables?|const|let|"
    r"await|async|promises?|callbacks?|arrow|parameters?|annotations?|syntax|"
    r"python|typescript|javascript|golang|rust)\b",
    re.IGNORECASE,
)

_BACKTICK_RE = re.compile(r"`([^`]+)`")


@dataclass
class RefinedSlice:
    slice: Slice
    refined_text: str
    is_constraint: bool


@dataclass
class ProcessMeta:
    binaries: list[str]
    level: EnforcementLevel
    scope: str = "global"


@dataclass
class SourceMeta:
    languages: list[str]
    pattern_kind: str
    severity: EnforcementLevel


@dataclass
class ArchDetMeta:
    rule_kind: str  # dependency_direction | cycle_detection | boundary_enforcement


@dataclass
class ArchSemMeta:
    principle_text: str


RoutingMeta = Union[ProcessMeta, SourceMeta, ArchDetMeta, ArchSemMeta]


@dataclass
class RoutingDecision:
    domain: Domain
    metadata: RoutingMeta


def extract_level(text: str) -> EnforcementLevel:
    return EnforcementLevel.BLOCK if _BLOCK_RE.search(text) else EnforcementLevel.WARN


def path_listing_path(text: str) -> str | None:
    """The trailing-slash path of a "<path/> - description" listing item."""
    m = _PATH_LISTING_RE.match(text)
    return m.group("path") if m else None


def _under_arch_heading(header_path: list[str]) -> bool:
    return any(_ARCH_HEADING_RE.search(h) for h in header_path)


def is_constraint_text(content_text: str, header_path: list[str]) -> bool:
    if _MARKER_RE.search(content_text):
        return True
    if _under_arch_heading(header_path):
        if path_listing_path(content_text):
            return True
        if _ARCH_TOPIC_RE.search(content_text):
            return True
    return False


def deterministic_refined_text(slc: Slice) -> str:
    if not slc.header_path:
        return slc.content_text
    return f"In the context of '{' > '.join(slc.header_path)}': {slc.content_text}"


def refine(
    slc: Slice, cfg: ProviderConfig, diagnostics: list[str] | None = None
) -> RefinedSlice:
    refined = deterministic_refined_text(slc)
    is_constraint = is_constraint_text(slc.content_text, slc.header_path)
    if cfg.is_remote and is_constraint:
        reply = complete_json(
            cfg,
            "Rewrite the instruction as one standalone, unambiguous constraint "
            'statement. Reply with exactly {"refined_text": "..."}.',
            f"Header path: {slc.header_path}\nInstruction: {slc.content_text}",
            lambda obj: isinstance(obj.get("refined_text"), str)
            and bool(obj["refined_text"].strip()),
        )
        if reply is not None:
            refined = reply["refined_text"].strip()
        elif diagnostics is not None:
            diagnostics.append(
                f"provider refine failed; deterministic fallback used for: "
                f"{slc.content_text[:60]!r}"
            )
    return RefinedSlice(slice=slc, refined_text=refined, is_constraint=is_constraint)


def _backtick_commands(text: str) -> list[list[str]]:
    """Backticked strings that look like shell commands (first token is a
    known binary name)."""
    commands = []
    for snippet in _BACKTICK_RE.findall(text):
        tokens = snippet.split()
        if tokens and tokens[0] in KNOWN_BINARIES:
            commands.append(tokens)
    return commands


def mentioned_binaries(text: str) -> list[str]:
    found: list[str] = []
    for cmd in _backtick_commands(text):
        if cmd[0] not in found:
            found.append(cmd[0])
    without_ticks = _BACKTICK_RE.sub(" ", text)
    for word in re.findall(r"[A-Za-z0-9_.-]+", without_ticks.lower()):
        if word in UNAMBIGUOUS_BINARIES and word not in found:
            found.append(word)
    return found


def _looks_like_code(snippet: str) -> bool:
    if " " not in snippet.strip():
        return True
    return any(ch in snippet for ch in "(){}[]=>;")


def _has_source_signal(text: str) -> bool:
    if _SOURCE_TOKEN_RE.search(text):
        return True
    return any(_looks_like_code(s) for s in _BACKTICK_RE.findall(text))


def _source_languages(text: str) -> list[str]:
    lowered = text.lower()
    if "python" in lowered or "pytest" in lowered:
        return ["python"]
    if "rust" in lowered:
        return ["rust"]
    if "golang" in lowered or re.search(r"\bGo\b", text):
        return ["go"]
    js_signals = (
        "typescript",
        "javascript",
        "promise",
        "async",
        "await",
        "arrow",
        "=>",
        "then",
        "const",
        "let",
        "var",
    )
    if any(s in lowered for s in js_signals):
        return ["typescript", "javascript"]
    return list(("python", "typescript", "javascript", "go", "rust"))


def _arch_rule_kind(text: str, is_listing: bool) -> str:
    lowered = text.lower()
    if "circular" in lowered or "cycle" in lowered:
        return "cycle_detection"
    if re.search(r"\b(?:must not|may not|cannot|never|don't|do not)\b[^.]*\bimport", lowered):
        return "boundary_enforcement"
    if is_listing:
        return "boundary_enforcement"
    if "layer" in lowered:
        return "dependency_direction"
    return "boundary_enforcement"


def deterministic_route(refined: RefinedSlice) -> RoutingDecision:
    slc = refined.slice
    text = slc.content_text
    level = extract_level(text)

    binaries = mentioned_binaries(text)
    if binaries:
        return RoutingDecision(
            domain=Domain.PROCESS,
            metadata=ProcessMeta(binaries=binaries, level=level),
        )

    listing_path = (
        path_listing_path(text) if _under_arch_heading(slc.header_path) else None
    )
    if _ARCH_TOPIC_RE.search(text) or re.search(
        r"\bdirector(?:y|ies)\b|\bmodules?\b", text, re.IGNORECASE
    ) or listing_path:
        return RoutingDecision(
            domain=Domain.ARCH_DETERMINISTIC,
            metadata=ArchDetMeta(
                rule_kind=_arch_rule_kind(text, listing_path is not None)
            ),
        )

    if _has_source_signal(text):
        return RoutingDecision(
            domain=Domain.SOURCE,
            metadata=SourceMeta(
                languages=_source_languages(text), pattern_kind="", severity=level
            ),
        )

    return RoutingDecision(
        domain=Domain.ARCH_SEMANTIC,
        metadata=ArchSemMeta(principle_text=refined.refined_text),
    )


def route(
    refined: RefinedSlice, cfg: ProviderConfig, diagnostics: list[str] | None = None
) -> RoutingDecision:
    decision = deterministic_route(refined)
    if not cfg.is_remote:
        return decision
    reply = complete_json(
        cfg,
        "Classify the constraint into one of PROCESS, SOURCE, "
        "ARCH_DETERMINISTIC, ARCH_SEMANTIC. Reply with exactly "
        '{"domain": "..."}.',
        refined.refined_text,
        lambda obj: obj.get("domain") in {d.value for d in Domain},
    )
    if reply is None:
        if diagnostics is not None:
            diagnostics.append(
                f"provider route failed; deterministic cascade used for: "
                f"{refined.slice.content_text[:60]!r}"
            )
        return decision
    domain = Domain(reply["domain"])
    if domain == decision.domain:
        return decision
    # Remote override keeps deterministic metadata extraction for its domain.
    text = refined.slice.content_text
    level = extract_level(text)
    if domain is Domain.PROCESS:
        binaries = mentioned_binaries(text)
        if not binaries:
            return decision  # schema-valid but unusable; fall back
        return RoutingDecision(domain, ProcessMeta(binaries=binaries, level=level))
    if domain is Domain.SOURCE:
        return RoutingDecision(
            domain,
            SourceMeta(languages=_source_languages(text), pattern_kind="", severity=level),
        )
    if domain is Domain.ARCH_DETERMINISTIC:
        return RoutingDecision(
            domain, ArchDetMeta(rule_kind=_arch_rule_kind(text, False))
        )
    return RoutingDecision(domain, ArchSemMeta(principle_text=refined.refined_text))
