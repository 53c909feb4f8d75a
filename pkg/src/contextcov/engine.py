"""Access to the compiled tree-sitter core, with a degraded fallback.

The native module embeds the five bundled grammars. When it is missing
(source checkout without the built extension), query validation degrades to
an S-expression well-formedness check and query execution reports the
capability gap to the caller instead of crashing.
"""

from __future__ import annotations

from dataclasses import dataclass

try:
    from . import _treesitter as _native
except ImportError:  # pragma: no cover - exercised only in degraded installs
    _native = None

# Grammar names the native module understands. "typescript" rules also run
# under the "tsx" grammar for .tsx files.
GRAMMARS = ("python", "javascript", "typescript", "tsx", "go", "rust")


class EngineError(RuntimeError):
    pass


class NativeUnavailableError(EngineError):
    pass


@dataclass(frozen=True)
class QueryMatch:
    pattern_index: int
    captures: tuple[tuple[str, int, int], ...]  # (name, start_byte, end_byte)


def native_available() -> bool:
    return _native is not None


def _sexpr_well_formed(query: str) -> str | None:
    depth = 0
    in_string = False
    escaped = False
    for ch in query:
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "(" or ch == "[":
            depth += 1
        elif ch == ")" or ch == "]":
            depth -= 1
            if depth < 0:
                return "unbalanced parentheses"
    if in_string:
        return "unterminated string"
    if depth != 0:
        return "unbalanced parentheses"
    if not query.strip():
        return "empty query"
    return None


def query_compile_error(grammar: str, query: str) -> str | None:
    """None when the query is acceptable for the grammar."""
    if grammar not in GRAMMARS:
        return f"unknown language: {grammar}"
    if _native is None:
        return _sexpr_well_formed(query)
    return _native.query_error(grammar, query)


def run_query(grammar: str, source: bytes, query: str) -> list[QueryMatch]:
    """All matches with capture byte spans. Inline #match?/#eq? predicates
    are already applied. Raises NativeUnavailableError when the core is
    missing, EngineError when the query is rejected at run time."""
    if _native is None:
        raise NativeUnavailableError(
            "native parsing core unavailable; source lint skipped"
        )
    try:
        raw = _native.query_matches(grammar, source, query)
    except (ValueError, RuntimeError) as exc:
        raise EngineError(str(exc)) from exc
    return [QueryMatch(idx, tuple((n, s, e) for n, s, e in caps)) for idx, caps in raw]


def top_level_ranges(grammar: str, source: bytes) -> list[tuple[int, int]]:
    if _native is None:
        return []
    return _native.top_level_ranges(grammar, source)
