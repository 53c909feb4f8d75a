"""Turn routed constraints into validated declarative check descriptors.

One expert generator per domain. Deterministic mode draws from a bundled
pattern library keyed by canonical constraint shapes; a remote provider can
supply source queries (with one compiler-diagnostic repair round). Anything
no generator can express degrades to a semantic WARN rule instead of being
dropped. validate_descriptor gates everything admitted to the store.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import engine
from .instructions import Slice
from .model import (
    AllowedSubdirsRule,
    ArchRule,
    CheckDescriptor,
    EnforcementLevel,
    ForbiddenEdgeRule,
    KNOWN_LANGUAGES,
    LayerOrderRule,
    NoCyclesRule,
    ProcessRule,
    SemanticRule,
    SourceRule,
)
from .provider import ProviderConfig, complete_json
from .refine import (
    ALTERNATIVE_FAMILIES,
    KNOWN_BINARIES,
    ArchDetMeta,
    ProcessMeta,
    SourceMeta,
    path_listing_path,
)

_NEGATION_RE = re.compile(
    r"\b(?:never|must not|do not|don't|avoid|forbid(?:den)?|block)\b", re.IGNORECASE
)
_POSITIVE_USE_RE = re.compile(
    r"\b(?:use|prefer|using)\s+`?([A-Za-z0-9_.-]+)`?", re.IGNORECASE
)
_BACKTICK_RE = re.compile(r"`([^`]+)`")
_CAPTURE_RE = re.compile(r"@([A-Za-z_][A-Za-z0-9_.]*)")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")


@dataclass
class ValidationResult:
    ok: bool
    diagnostics: list[str] = field(default_factory=list)


def _fail(*diagnostics: str) -> ValidationResult:
    return ValidationResult(ok=False, diagnostics=list(diagnostics))


def grammar_targets(language: str) -> tuple[str, ...]:
    """Grammars a rule language must compile under (.tsx uses its own)."""
    if language == "typescript":
        return ("typescript", "tsx")
    return (language,)


def validate_descriptor(check: CheckDescriptor) -> ValidationResult:
    if isinstance(check, ProcessRule):
        if not check.binaries:
            return _fail("process rule has no binaries")
        if any(not b or not isinstance(b, str) for b in check.binaries):
            return _fail("process rule has an empty binary name")
        if any(not tok for tok in check.argv_pattern):
            return _fail("process rule has an empty argv token")
        return ValidationResult(ok=True)
    if isinstance(check, SourceRule):
        if not check.languages:
            return _fail("source rule lists no languages")
        unknown = [l for l in check.languages if l not in KNOWN_LANGUAGES]
        if unknown:
            return _fail(f"source rule lists unknown languages: {unknown}")
        diagnostics: list[str] = []
        for language in check.languages:
            for grammar in grammar_targets(language):
                err = engine.query_compile_error(grammar, check.query)
                if err is not None:
                    diagnostics.append(f"query does not compile for {grammar}: {err}")
        query_captures = set(_CAPTURE_RE.findall(check.query))
        for name, pattern in check.capture_predicates:
            if name not in query_captures:
                diagnostics.append(f"predicate names unknown capture @{name}")
            try:
                re.compile(pattern)
            except re.error as exc:
                diagnostics.append(f"predicate regex invalid for @{name}: {exc}")
        if diagnostics:
            return ValidationResult(ok=False, diagnostics=diagnostics)
        return ValidationResult(ok=True)
    if isinstance(check, LayerOrderRule):
        if len(check.layers) < 2:
            return _fail("layer order needs at least 2 layers")
        if len(set(check.layers)) != len(check.layers):
            return _fail("layer prefixes must be unique")
        if any(not l for l in check.layers):
            return _fail("layer prefix is empty")
        return ValidationResult(ok=True)
    if isinstance(check, AllowedSubdirsRule):
        if not check.parent_prefix:
            return _fail("allowed-subdirs rule has no parent prefix")
        if not check.allowed:
            return _fail("allowed-subdirs rule allows nothing")
        if any(not a or "/" in a for a in check.allowed):
            return _fail("allowed subdirectory names must be plain names")
        return ValidationResult(ok=True)
    if isinstance(check, ForbiddenEdgeRule):
        if not check.from_glob or not check.to_glob:
            return _fail("forbidden-edge rule needs both globs")
        return ValidationResult(ok=True)
    if isinstance(check, NoCyclesRule):
        if not check.scope_glob:
            return _fail("no-cycles rule needs a scope glob")
        return ValidationResult(ok=True)
    if isinstance(check, SemanticRule):
        if not check.principle_text.strip():
            return _fail("semantic rule has empty principle text")
        return ValidationResult(ok=True)
    return _fail(f"unknown descriptor type: {type(check)!r}")


# ---------------------------------------------------------------------------
# Process expert


def _backtick_commands(text: str) -> list[list[str]]:
    commands = []
    for snippet in _BACKTICK_RE.findall(text):
        tokens = snippet.split()
        if tokens and tokens[0] in KNOWN_BINARIES:
            commands.append(tokens)
    return commands


def derive_suggestion(text: str) -> str:
    """First sentence carrying "instead" becomes the actionable hint."""
    for sentence in _SENTENCE_SPLIT_RE.split(text):
        if re.search(r"\binstead\b", sentence, re.IGNORECASE):
            sentence = " ".join(sentence.split()).strip()
            if sentence and sentence[-1] not in ".!?":
                sentence += "."
            return sentence
    return ""


def synthesize_process(
    original_text: str, meta: ProcessMeta, cfg: ProviderConfig
) -> ProcessRule | None:
    """None when no enforceable binary set can be derived (caller reroutes)."""
    text = original_text
    negated = bool(_NEGATION_RE.search(text))
    commands = _backtick_commands(text)
    suggestion = derive_suggestion(text)

    if negated and commands:
        binary, *argv = commands[0]
        return ProcessRule(
            binaries=(binary,),
            argv_pattern=tuple(argv),
            action=meta.level,
            message=original_text,
            suggestion=suggestion,
        )

    blocked: set[str] = set()
    for m in _POSITIVE_USE_RE.finditer(text):
        preceding = text[max(0, m.start() - 24) : m.start()]
        if _NEGATION_RE.search(preceding):
            continue
        name = m.group(1).lower()
        for family in ALTERNATIVE_FAMILIES:
            if name in family:
                blocked |= family - {name}
    if negated:
        negation_positions = [m.start() for m in _NEGATION_RE.finditer(text)]
        lowered = text.lower()
        for binary in meta.binaries:
            for occurrence in re.finditer(rf"\b{re.escape(binary)}\b", lowered):
                if any(pos < occurrence.start() for pos in negation_positions):
                    blocked.add(binary)
                    break
    if not blocked:
        return None
    return ProcessRule(
        binaries=tuple(sorted(blocked)),
        argv_pattern=(),
        action=meta.level,
        message=original_text,
        suggestion=suggestion,
    )


# ---------------------------------------------------------------------------
# Source expert: bundled deterministic pattern library

_JS_TS = ("typescript", "javascript")

_THEN_QUERY = """\
(call_expression
  function: (member_expression
    property: (property_identifier) @method)
  (#match? @method "^then$"))"""

_SINGLE_PARAM_QUERY = """\
(arrow_function
  parameters: (formal_parameters
    . (_) @param .) @param_list)"""

_IDENT_PREDICATE = r"^[A-Za-z_$][A-Za-z0-9_$]*$"

_FUNCTION_EXPR_QUERY = "(function_expression) @fn"

_ANY_TYPE_QUERY = "(predefined_type) @t"

_VAR_DECL_QUERY = "(variable_declaration) @decl"


def _build_then_rule(severity: EnforcementLevel) -> SourceRule:
    return SourceRule(
        languages=_JS_TS,
        query=_THEN_QUERY,
        capture_predicates=(),
        message="Use async/await instead of .then()",
        severity=severity,
        found_format="{method}() call",
        suggestion="Rewrite the promise chain with async/await.",
    )


def _build_single_param_rule(severity: EnforcementLevel) -> SourceRule:
    return SourceRule(
        languages=_JS_TS,
        query=_SINGLE_PARAM_QUERY,
        capture_predicates=(("param", _IDENT_PREDICATE),),
        message="Unnecessary parentheses around a single arrow-function parameter",
        severity=severity,
        found_format="{param_list} => {{...}}",
        suggestion="Remove parentheses: {param} => {{...}}",
    )


def _build_function_expr_rule(severity: EnforcementLevel) -> SourceRule:
    return SourceRule(
        languages=_JS_TS,
        query=_FUNCTION_EXPR_QUERY,
        capture_predicates=(("fn", r"^function\s*\("),),
        message="Use an arrow function instead of an anonymous function expression",
        severity=severity,
        found_format="",
        suggestion="Rewrite as an arrow function.",
    )


def _build_any_type_rule(severity: EnforcementLevel) -> SourceRule:
    return SourceRule(
        languages=("typescript",),
        query=_ANY_TYPE_QUERY,
        capture_predicates=(("t", "^any$"),),
        message="Do not use the any type",
        severity=severity,
        found_format="",
        suggestion="Declare a precise type.",
    )


def _build_var_rule(severity: EnforcementLevel) -> SourceRule:
    return SourceRule(
        languages=_JS_TS,
        query=_VAR_DECL_QUERY,
        capture_predicates=(),
        message="Use let or const instead of var",
        severity=severity,
        found_format="",
        suggestion="Replace var with let or const.",
    )


def _forbidden_callee(text: str) -> str | None:
    for snippet in _BACKTICK_RE.findall(text):
        m = re.fullmatch(r"([A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*)\s*\(\s*\)?", snippet)
        if m:
            return m.group(1)
    return None


def _build_forbidden_call_rule(
    callee: str, languages: list[str], severity: EnforcementLevel
) -> SourceRule:
    is_member = "." in callee
    if "python" in languages:
        node = "attribute" if is_member else "identifier"
        query = f"(call function: ({node}) @callee)"
        langs: tuple[str, ...] = ("python",)
    else:
        node = "member_expression" if is_member else "identifier"
        query = f"(call_expression function: ({node}) @callee)"
        langs = _JS_TS
    return SourceRule(
        languages=langs,
        query=query,
        capture_predicates=(("callee", f"^{re.escape(callee)}$"),),
        message=f"Do not call {callee}()",
        severity=severity,
        found_format="{callee}(...)",
        suggestion="",
    )


def _forbidden_identifier(text: str) -> str | None:
    if not _NEGATION_RE.search(text):
        return None
    for snippet in _BACKTICK_RE.findall(text):
        token = snippet.strip()
        if re.fullmatch(r"[a-zA-Z_$][\w$]*", token) and token not in KNOWN_BINARIES:
            return token
    return None


def _build_forbidden_identifier_rule(
    name: str, languages: list[str], severity: EnforcementLevel
) -> SourceRule:
    langs = tuple(l for l in languages if l in KNOWN_LANGUAGES) or _JS_TS
    return SourceRule(
        languages=langs,
        query="(identifier) @id",
        capture_predicates=(("id", f"^{re.escape(name)}$"),),
        message=f"Do not use {name}",
        severity=severity,
        found_format="",
        suggestion="",
    )


def deterministic_source_rule(
    original_text: str, meta: SourceMeta
) -> SourceRule | None:
    text = original_text
    lowered = text.lower()
    severity = meta.severity

    if re.search(r"\bthen\b", lowered) and (
        "promise" in lowered or "async" in lowered
    ):
        return _build_then_rule(severity)
    if re.search(r"surround|parenthes|\bparens?\b", lowered) and re.search(
        r"arrow|parameters?", lowered
    ):
        return _build_single_param_rule(severity)
    if "arrow" in lowered and ("function expression" in lowered or "anonymous" in lowered):
        return _build_function_expr_rule(severity)
    if _NEGATION_RE.search(text) or re.search(r"\bonly\b|\bprefer\b|\buse\b", lowered):
        backticked = _BACKTICK_RE.findall(text)
        if "`any`" in text and "type" in lowered:
            return _build_any_type_rule(severity)
        if "var" in (s.strip() for s in backticked) and _NEGATION_RE.search(text):
            return _build_var_rule(severity)
        if "type" in lowered and _NEGATION_RE.search(text):
            for snippet in backticked:
                if re.fullmatch(r"[A-Za-z_$][\w$]*", snippet.strip()):
                    return SourceRule(
                        languages=("typescript",),
                        query="[(predefined_type) (type_identifier)] @t",
                        capture_predicates=(("t", f"^{re.escape(snippet.strip())}$"),),
                        message=f"Do not use the {snippet.strip()} type",
                        severity=severity,
                        found_format="",
                        suggestion="",
                    )
        callee = _forbidden_callee(text)
        if callee and _NEGATION_RE.search(text):
            return _build_forbidden_call_rule(callee, meta.languages, severity)
        name = _forbidden_identifier(text)
        if name:
            return _build_forbidden_identifier_rule(name, meta.languages, severity)
    return None


def _remote_source_rule(
    original_text: str, meta: SourceMeta, cfg: ProviderConfig
) -> SourceRule | None:
    def valid_shape(obj: dict) -> bool:
        return isinstance(obj.get("query"), str) and isinstance(obj.get("message"), str)

    prompt = (
        "Write one tree-sitter S-expression query detecting violations of the "
        "constraint. Reply with exactly "
        '{"query": "...", "message": "...", "capture_predicates": [["name", "regex"]]}.'
    )
    payload = f"Languages: {meta.languages}\nConstraint: {original_text}"
    for _ in range(2):  # initial attempt plus one repair round
        reply = complete_json(cfg, prompt, payload, valid_shape)
        if reply is None:
            return None
        rule = SourceRule(
            languages=tuple(meta.languages),
            query=reply["query"],
            capture_predicates=tuple(
                (p[0], p[1]) for p in reply.get("capture_predicates", [])
            ),
            message=reply["message"],
            severity=meta.severity,
        )
        result = validate_descriptor(rule)
        if result.ok:
            return rule
        payload += f"\nPrevious query failed validation: {'; '.join(result.diagnostics)}"
    return None


def synthesize_source(
    original_text: str, meta: SourceMeta, cfg: ProviderConfig
) -> SourceRule | None:
    """None when no pattern fits (caller reroutes to a semantic WARN)."""
    rule = deterministic_source_rule(original_text, meta)
    if rule is not None:
        return rule
    if cfg.is_remote:
        return _remote_source_rule(original_text, meta, cfg)
    return None


# ---------------------------------------------------------------------------
# Architecture expert: grouping of path listings plus per-shape rules


@dataclass
class ArchPlan:
    """One arch rule to store.

    grouped_members are slices whose outcome this plan is (absorbed into a
    synthetic grouped constraint). A slice contributing text to two rules
    (a layer member that also parents a sub-listing) is a grouped member of
    only the first. origin_slice is set instead for single-slice rules that
    store the slice under its own identity.
    """

    source_file: str
    header_path: list[str]
    original_text: str
    refined_text: str
    rule: ArchRule
    grouped_members: list[Slice] = field(default_factory=list)
    origin_slice: Slice | None = None


def _basename(path: str) -> str:
    return path.rstrip("/").rsplit("/", 1)[-1]


def _common_parent(paths: list[str]) -> str:
    split = [p.rstrip("/").split("/") for p in paths]
    prefix: list[str] = []
    for parts in zip(*split):
        if all(p == parts[0] for p in parts):
            prefix.append(parts[0])
        else:
            break
    # The shared prefix must be a proper parent, not one of the paths itself.
    if prefix and any(len(s) <= len(prefix) for s in split):
        prefix = prefix[: min(len(s) for s in split) - 1]
    return "/".join(prefix) + "/" if prefix else ""


_FORBIDDEN_EDGE_RE = re.compile(
    r"^(?P<from>.+?)\s+(?:must not|may not|cannot|never|do(?:es)? not|don't|shall not)\s+"
    r"(?:be\s+)?import(?:s|ed)?\s*(?:anything\s+)?(?:from\s+)?(?P<to>.+?)\s*[.!]?$",
    re.IGNORECASE,
)

_STOPWORDS = frozenset(
    {"the", "a", "an", "layer", "layers", "module", "modules", "code", "files", "any"}
)


def _resolve_dir_phrase(phrase: str, listings: list[tuple[str, str]]) -> str:
    """Map a prose phrase like "the database layer" to a directory glob base.

    listings carry (path, description) pairs from sibling path-listing items.
    """
    words = [w for w in re.findall(r"[a-z0-9_./-]+", phrase.lower()) if w not in _STOPWORDS]
    for word in words:
        if "/" in word:
            return word if word.endswith("/") else word + "/"
    for path, _description in listings:
        if _basename(path).lower() in words:
            return path
    for path, description in listings:
        description_words = set(re.findall(r"[a-z0-9_-]+", description.lower()))
        if any(w in description_words for w in words):
            return path
    if words:
        return words[0] + "/"
    return phrase.strip().lower().replace(" ", "-") + "/"


def _scope_from_text(text: str) -> str:
    m = re.search(r"`?([A-Za-z0-9_.-]+(?:/[A-Za-z0-9_.-]+)*/)`?", text)
    if m:
        return m.group(1) + "**"
    return "**"


def plan_arch_rules(
    routed: list[tuple[Slice, ArchDetMeta]],
) -> tuple[list[ArchPlan], list[Slice]]:
    """Group routed ARCH_DETERMINISTIC slices into rules.

    Returns (plans, rerouted) where rerouted slices had no expressible shape
    and should fall back to semantic WARN rules.
    """
    plans: list[ArchPlan] = []
    rerouted: list[Slice] = []

    buckets: dict[tuple[str, tuple[str, ...]], list[tuple[Slice, ArchDetMeta]]] = {}
    order: list[tuple[str, tuple[str, ...]]] = []
    for slc, meta in routed:
        key = (slc.source_file, tuple(slc.header_path))
        if key not in buckets:
            buckets[key] = []
            order.append(key)
        buckets[key].append((slc, meta))

    for key in order:
        source_file, header_path = key
        entries = buckets[key]

        listing_items: list[tuple[Slice, str]] = []
        direction_bullets: list[Slice] = []
        cycle_slices: list[Slice] = []
        edge_slices: list[Slice] = []
        leftovers: list[Slice] = []
        for slc, meta in entries:
            path = path_listing_path(slc.content_text)
            if path is not None:
                listing_items.append((slc, path))
            elif meta.rule_kind == "cycle_detection":
                cycle_slices.append(slc)
            elif _FORBIDDEN_EDGE_RE.match(slc.content_text):
                edge_slices.append(slc)
            elif "layer" in slc.content_text.lower():
                direction_bullets.append(slc)
            else:
                leftovers.append(slc)

        listings_context = [
            (path, slc.content_text) for slc, path in listing_items
        ]

        min_depth = min((s.list_depth for s, _ in listing_items), default=0)
        top_items = [(s, p) for s, p in listing_items if s.list_depth == min_depth]
        sub_items: dict[int, list[tuple[Slice, str]]] = {
            i: [] for i in range(len(top_items))
        }
        current_top = -1
        for slc, path in listing_items:
            if slc.list_depth == min_depth:
                current_top += 1
            elif current_top >= 0:
                sub_items[current_top].append((slc, path))

        # Every slice belongs to at most one plan for accounting, first
        # claimant wins; a slice may still contribute text to later plans.
        claimed: set[int] = set()

        def claim(slices: list[Slice]) -> list[Slice]:
            fresh = [s for s in slices if id(s) not in claimed]
            claimed.update(id(s) for s in fresh)
            return fresh

        def joined(members: list[Slice]) -> str:
            ordered = sorted(members, key=lambda s: s.span[0])
            return "\n".join(s.content_text for s in ordered)

        if direction_bullets and len(top_items) >= 2:
            text_members = [s for s, _ in top_items] + direction_bullets
            layers = tuple(p for _, p in top_items)
            plans.append(
                ArchPlan(
                    source_file=source_file,
                    header_path=list(header_path),
                    original_text=joined(text_members),
                    refined_text=(
                        "Dependencies may only point from later to earlier layers, "
                        f"ordered: {', '.join(layers)}."
                    ),
                    rule=LayerOrderRule(layers=layers),
                    grouped_members=claim(text_members),
                )
            )
        elif len(top_items) >= 2:
            parent = _common_parent([p for _, p in top_items])
            if parent:
                text_members = [s for s, _ in top_items]
                allowed = tuple(sorted({_basename(p) for _, p in top_items}))
                plans.append(
                    ArchPlan(
                        source_file=source_file,
                        header_path=list(header_path),
                        original_text=joined(text_members),
                        refined_text=(
                            f"Files under {parent} must be placed in one of: "
                            f"{', '.join(allowed)}."
                        ),
                        rule=AllowedSubdirsRule(parent_prefix=parent, allowed=allowed),
                        grouped_members=claim(text_members),
                    )
                )

        for idx, (parent_slice, parent_path) in enumerate(top_items):
            children = sub_items.get(idx, [])
            if not children:
                continue
            text_members = [parent_slice] + [s for s, _ in children]
            allowed = tuple(sorted({_basename(p) for _, p in children}))
            plans.append(
                ArchPlan(
                    source_file=source_file,
                    header_path=list(header_path),
                    original_text=joined(text_members),
                    refined_text=(
                        f"Files under {parent_path} must be placed in one of: "
                        f"{', '.join(allowed)}."
                    ),
                    rule=AllowedSubdirsRule(parent_prefix=parent_path, allowed=allowed),
                    grouped_members=claim(text_members),
                )
            )

        for slc in cycle_slices:
            claim([slc])
            scope = _scope_from_text(slc.content_text)
            plans.append(
                ArchPlan(
                    source_file=source_file,
                    header_path=list(header_path),
                    original_text=slc.content_text,
                    refined_text=f"No circular dependencies within {scope}.",
                    rule=NoCyclesRule(scope_glob=scope),
                    origin_slice=slc,
                )
            )

        for slc in edge_slices:
            claim([slc])
            m = _FORBIDDEN_EDGE_RE.match(slc.content_text)
            assert m is not None
            from_dir = _resolve_dir_phrase(m.group("from"), listings_context)
            to_dir = _resolve_dir_phrase(m.group("to"), listings_context)
            plans.append(
                ArchPlan(
                    source_file=source_file,
                    header_path=list(header_path),
                    original_text=slc.content_text,
                    refined_text=(
                        f"Files matching {from_dir}** must not import files "
                        f"matching {to_dir}**."
                    ),
                    rule=ForbiddenEdgeRule(
                        from_glob=from_dir + "**", to_glob=to_dir + "**"
                    ),
                    origin_slice=slc,
                )
            )

        for slc, _path in listing_items:
            if id(slc) not in claimed:
                rerouted.append(slc)
        for slc in direction_bullets:
            if id(slc) not in claimed:
                rerouted.append(slc)
        rerouted.extend(leftovers)

    return plans, rerouted


# ---------------------------------------------------------------------------
# Semantic expert


def synthesize_semantic(principle_text: str, context_hints: list[str]) -> SemanticRule:
    return SemanticRule(
        principle_text=principle_text, context_hints=tuple(context_hints)
    )
