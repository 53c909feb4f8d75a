"""Repository dependency graphs and architectural rule checking.

Nodes are repo-relative file paths; an edge A -> B means A imports B. Import
extraction is per language: Python uses the ast module, JS/TS uses native
tree-sitter queries with a regex fallback, Go resolves module paths through
go.mod to package directories, Rust resolves mod declarations and crate::
paths. Only edges that land on files inside the repository are kept; external
packages never appear.
"""

from __future__ import annotations

import ast
import os
import re
from collections import deque
from fnmatch import fnmatchcase
from dataclasses import dataclass

import networkx as nx

from . import engine
from .model import (
    AllowedSubdirsRule,
    Constraint,
    EnforcementLevel,
    ForbiddenEdgeRule,
    LayerOrderRule,
    NoCyclesRule,
)

_JS_EXTS = (".ts", ".tsx", ".js", ".jsx", ".mjs", ".cjs")
_JS_INDEX_BASES = ("index.ts", "index.tsx", "index.js", "index.jsx")

_JS_IMPORT_QUERY = """\
(import_statement source: (string (string_fragment) @path))
(export_statement source: (string (string_fragment) @path))
(call_expression
  function: (identifier) @fn
  arguments: (arguments . (string (string_fragment) @path))
  (#eq? @fn "require"))
(call_expression
  function: (import)
  arguments: (arguments . (string (string_fragment) @path)))"""

_JS_IMPORT_FALLBACK_RE = re.compile(
    r"""(?:\bimport|\bexport)\s+[^;'"]*?\bfrom\s+['"]([^'"]+)['"]"""
    r"""|\bimport\s*\(\s*['"]([^'"]+)['"]"""
    r"""|\brequire\s*\(\s*['"]([^'"]+)['"]"""
    r"""|\bimport\s+['"]([^'"]+)['"]"""
)

_GO_BLOCK_RE = re.compile(r"^import\s*\((.*?)^\)", re.MULTILINE | re.DOTALL)
_GO_SINGLE_RE = re.compile(r'^import\s+(?:[\w.]+\s+)?"([^"]+)"', re.MULTILINE)
_GO_BLOCK_LINE_RE = re.compile(r'^\s*(?:[\w.]+\s+|_\s+)?"([^"]+)"', re.MULTILINE)
_GO_MODULE_RE = re.compile(r"^module\s+(\S+)", re.MULTILINE)

_RUST_MOD_RE = re.compile(
    r"^\s*(?:pub(?:\([^)]*\))?\s+)?mod\s+([A-Za-z_][A-Za-z0-9_]*)\s*;", re.MULTILINE
)
_RUST_USE_RE = re.compile(
    r"^\s*(?:pub(?:\([^)]*\))?\s+)?use\s+crate::([A-Za-z0-9_:]+)", re.MULTILINE
)


@dataclass
class ArchViolation:
    rule_id: str
    source: str
    target: str
    severity: EnforcementLevel
    message: str
    original_text: str
    suggestion: str = ""
    cycle_members: tuple[str, ...] = ()


def _read_bytes(root: str, rel: str) -> bytes:
    try:
        with open(os.path.join(root, rel), "rb") as fh:
            return fh.read()
    except OSError:
        return b""


def _norm(path: str) -> str:
    return os.path.normpath(path).replace(os.sep, "/")


# ---------------------------------------------------------------------------
# Python


def _python_module_imports(tree: ast.Module) -> list[tuple[str, int]]:
    """(dotted_name, relative_level) for module-level imports, descending
    into conditional and try blocks but not into function or class bodies."""
    found: list[tuple[str, int]] = []
    stack: list[ast.stmt] = list(tree.body)
    while stack:
        node = stack.pop(0)
        if isinstance(node, ast.Import):
            found.extend((alias.name, 0) for alias in node.names)
        elif isinstance(node, ast.ImportFrom):
            base = node.module or ""
            for alias in node.names:
                name = f"{base}.{alias.name}" if base else alias.name
                found.append((name, node.level))
        elif isinstance(node, (ast.If, ast.While, ast.For, ast.AsyncFor)):
            stack.extend(node.body)
            stack.extend(node.orelse)
        elif isinstance(node, ast.Try):
            stack.extend(node.body)
            stack.extend(node.orelse)
            stack.extend(node.finalbody)
            for handler in node.handlers:
                stack.extend(handler.body)
        elif isinstance(node, (ast.With, ast.AsyncWith)):
            stack.extend(node.body)
    return found


def _resolve_python(rel: str, name: str, level: int, files: frozenset[str]) -> list[str]:
    segments = [s for s in name.split(".") if s]
    if level > 0:
        base_parts = rel.split("/")[:-1]
        for _ in range(level - 1):
            if base_parts:
                base_parts.pop()
        prefix = "/".join(base_parts)
        candidates_base = [prefix] if prefix else [""]
    else:
        candidates_base = [""]
    resolved: list[str] = []
    for base in candidates_base:
        for take in range(len(segments), 0, -1):
            stem = "/".join(segments[:take])
            path = f"{base}/{stem}" if base else stem
            for candidate in (path + ".py", path + "/__init__.py"):
                candidate = _norm(candidate)
                if candidate in files:
                    resolved.append(candidate)
            if resolved:
                return resolved
    return resolved


def _python_edges(root: str, rel: str, files: frozenset[str]) -> set[str]:
    source = _read_bytes(root, rel)
    try:
        tree = ast.parse(source)
    except SyntaxError:
        return set()
    targets: set[str] = set()
    for name, level in _python_module_imports(tree):
        targets.update(_resolve_python(rel, name, level, files))
    return targets


# ---------------------------------------------------------------------------
# JavaScript / TypeScript


def js_import_specifiers_native(source: bytes, grammar: str) -> list[str]:
    specifiers = []
    for match in engine.run_query(grammar, source, _JS_IMPORT_QUERY):
        for name, start, end in match.captures:
            if name == "path":
                specifiers.append(source[start:end].decode("utf-8", errors="replace"))
    return specifiers


def js_import_specifiers_regex(source: bytes) -> list[str]:
    text = source.decode("utf-8", errors="replace")
    found = []
    for match in _JS_IMPORT_FALLBACK_RE.finditer(text):
        spec = next(g for g in match.groups() if g is not None)
        found.append(spec)
    return found


def _js_import_specifiers(source: bytes, grammar: str) -> list[str]:
    if engine.native_available():
        try:
            return js_import_specifiers_native(source, grammar)
        except engine.EngineError:
            pass
    return js_import_specifiers_regex(source)


def _resolve_js(rel: str, spec: str, files: frozenset[str]) -> list[str]:
    if spec.startswith("."):
        base = _norm(os.path.join(os.path.dirname(rel), spec))
        bases = [base]
    else:
        # Bare specifiers are usually external packages, but repo-rooted
        # paths (path-mapped imports) are worth one resolution attempt.
        bases = [_norm(spec)]
    for base in bases:
        if base in files:
            return [base]
        for ext in _JS_EXTS:
            if base + ext in files:
                return [base + ext]
        for index in _JS_INDEX_BASES:
            candidate = f"{base}/{index}"
            if candidate in files:
                return [candidate]
    return []


def _js_edges(root: str, rel: str, files: frozenset[str]) -> set[str]:
    grammar = "tsx" if rel.endswith(".tsx") else (
        "typescript" if rel.endswith(".ts") else "javascript"
    )
    source = _read_bytes(root, rel)
    targets: set[str] = set()
    for spec in _js_import_specifiers(source, grammar):
        targets.update(_resolve_js(rel, spec, files))
    return targets


# ---------------------------------------------------------------------------
# Go


def _go_module_path(root: str, rel: str, cache: dict[str, str]) -> str:
    directory = os.path.dirname(rel)
    while True:
        if directory in cache:
            return cache[directory]
        gomod = os.path.join(root, directory, "go.mod") if directory else os.path.join(
            root, "go.mod"
        )
        if os.path.isfile(gomod):
            with open(gomod, "r", encoding="utf-8", errors="replace") as fh:
                m = _GO_MODULE_RE.search(fh.read())
            module = m.group(1) if m else ""
            cache[directory] = module
            return module
        if not directory:
            cache[directory] = ""
            return ""
        directory = os.path.dirname(directory)


def _go_edges(
    root: str, rel: str, files: frozenset[str], module_cache: dict[str, str]
) -> set[str]:
    text = _read_bytes(root, rel).decode("utf-8", errors="replace")
    specs: list[str] = []
    for block in _GO_BLOCK_RE.findall(text):
        specs.extend(_GO_BLOCK_LINE_RE.findall(block))
    specs.extend(_GO_SINGLE_RE.findall(text))
    module = _go_module_path(root, rel, module_cache)
    targets: set[str] = set()
    for spec in specs:
        if module and spec.startswith(module):
            subpath = spec[len(module) :].lstrip("/")
        elif "/" not in spec or "." in spec.split("/")[0]:
            continue  # stdlib or external host-qualified import
        else:
            subpath = spec
        # A Go import names a package directory: depend on each file in it.
        prefix = subpath + "/" if subpath else ""
        for candidate in files:
            if candidate.endswith(".go") and candidate.startswith(prefix):
                if "/" not in candidate[len(prefix) :]:
                    targets.add(candidate)
    return targets


# ---------------------------------------------------------------------------
# Rust


def _rust_src_base(rel: str) -> str:
    parts = rel.split("/")
    for i in range(len(parts) - 1, -1, -1):
        if parts[i] == "src":
            return "/".join(parts[: i + 1])
    return ""


def _rust_edges(root: str, rel: str, files: frozenset[str]) -> set[str]:
    text = _read_bytes(root, rel).decode("utf-8", errors="replace")
    targets: set[str] = set()
    basename = os.path.basename(rel)
    if basename in ("lib.rs", "main.rs", "mod.rs"):
        mod_base = os.path.dirname(rel)
    else:
        mod_base = rel[: -len(".rs")]
    for name in _RUST_MOD_RE.findall(text):
        for candidate in (f"{mod_base}/{name}.rs", f"{mod_base}/{name}/mod.rs"):
            candidate = _norm(candidate)
            if candidate in files:
                targets.add(candidate)
    src_base = _rust_src_base(rel)
    for dotted in _RUST_USE_RE.findall(text):
        segments = [s for s in dotted.split("::") if s]
        for take in range(len(segments), 0, -1):
            stem = "/".join(segments[:take])
            path = f"{src_base}/{stem}" if src_base else stem
            hit = False
            for candidate in (path + ".rs", path + "/mod.rs"):
                candidate = _norm(candidate)
                if candidate in files:
                    targets.add(candidate)
                    hit = True
            if hit:
                break
    return targets


# ---------------------------------------------------------------------------
# Graph assembly


def build_graph(root: str, files: list[str]) -> nx.DiGraph:
    """Dependency graph over the given repo-relative files."""
    file_set = frozenset(files)
    graph = nx.DiGraph()
    graph.add_nodes_from(files)
    go_module_cache: dict[str, str] = {}
    for rel in files:
        if rel.endswith(".py"):
            targets = _python_edges(root, rel, file_set)
        elif rel.endswith(_JS_EXTS):
            targets = _js_edges(root, rel, file_set)
        elif rel.endswith(".go"):
            targets = _go_edges(root, rel, file_set, go_module_cache)
        elif rel.endswith(".rs"):
            targets = _rust_edges(root, rel, file_set)
        else:
            targets = set()
        for target in targets:
            if target != rel:
                graph.add_edge(rel, target)
    return graph


# ---------------------------------------------------------------------------
# Rule evaluation


def _ensure_slash(prefix: str) -> str:
    return prefix if prefix.endswith("/") else prefix + "/"


def _layer_index(path: str, layers: tuple[str, ...]) -> int | None:
    for i, layer in enumerate(layers):
        if path.startswith(_ensure_slash(layer)):
            return i
    return None


def cycle_walk(graph: nx.DiGraph, scc: set[str]) -> tuple[str, ...]:
    """Deterministic closed walk through every node of a strongly connected
    component, starting at the lexicographically smallest node. Consecutive
    members (and last back to first) are always edges of the graph."""
    nodes = sorted(scc)
    start = nodes[0]
    adjacency = {n: sorted(m for m in graph.successors(n) if m in scc) for n in nodes}

    def shortest_path(src: str, targets: set[str]) -> list[str]:
        parent: dict[str, str | None] = {src: None}
        queue = deque([src])
        while queue:
            current = queue.popleft()
            if current in targets and current != src:
                path = [current]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])  # type: ignore[arg-type]
                path.reverse()
                return path
            for nxt in adjacency[current]:
                if nxt not in parent:
                    parent[nxt] = current
                    queue.append(nxt)
        return []

    walk = [start]
    unvisited = set(nodes) - {start}
    while unvisited:
        path = shortest_path(walk[-1], unvisited)
        if not path:
            break  # not reachable; SCC guarantee makes this unreachable
        walk.extend(path[1:])
        unvisited -= set(path)
    if walk[-1] != start:
        back = shortest_path(walk[-1], {start})
        walk.extend(back[1:])
    if len(walk) > 1 and walk[-1] == walk[0]:
        walk.pop()
    return tuple(walk)


def check_arch(
    graph: nx.DiGraph, constraints: dict[str, Constraint]
) -> list[ArchViolation]:
    violations: list[ArchViolation] = []
    for rule_id in sorted(constraints):
        constraint = constraints[rule_id]
        if constraint.disabled:
            continue
        rule = constraint.check
        original = constraint.original_text
        severity = constraint.enforcement_level
        if isinstance(rule, LayerOrderRule):
            for source, target in graph.edges:
                i = _layer_index(source, rule.layers)
                j = _layer_index(target, rule.layers)
                if i is None or j is None or j <= i:
                    continue
                violations.append(
                    ArchViolation(
                        rule_id=rule_id,
                        source=source,
                        target=target,
                        severity=severity,
                        message=(
                            f"{source} (layer {rule.layers[i]}) depends on "
                            f"{target} (layer {rule.layers[j]}); dependencies "
                            "must flow toward earlier layers"
                        ),
                        original_text=original,
                        suggestion=(
                            f"Move the shared code into {rule.layers[i]} or an "
                            "earlier layer."
                        ),
                    )
                )
        elif isinstance(rule, AllowedSubdirsRule):
            parent = _ensure_slash(rule.parent_prefix)
            for node in graph.nodes:
                if not node.startswith(parent):
                    continue
                remainder = node[len(parent) :]
                if "/" not in remainder:
                    message = (
                        f"{node} sits directly under {parent}; files must live "
                        f"in one of: {', '.join(rule.allowed)}"
                    )
                elif remainder.split("/", 1)[0] not in rule.allowed:
                    subdir = remainder.split("/", 1)[0]
                    message = (
                        f"{node} is under {parent}{subdir}/, which is not an "
                        f"allowed subdirectory of {parent} "
                        f"(allowed: {', '.join(rule.allowed)})"
                    )
                else:
                    continue
                violations.append(
                    ArchViolation(
                        rule_id=rule_id,
                        source=node,
                        target="",
                        severity=severity,
                        message=message,
                        original_text=original,
                        suggestion=(
                            f"Move the file into one of: "
                            f"{', '.join(parent + a + '/' for a in rule.allowed)}"
                        ),
                    )
                )
        elif isinstance(rule, ForbiddenEdgeRule):
            for source, target in graph.edges:
                if fnmatchcase(source, rule.from_glob) and fnmatchcase(
                    target, rule.to_glob
                ):
                    violations.append(
                        ArchViolation(
                            rule_id=rule_id,
                            source=source,
                            target=target,
                            severity=severity,
                            message=(
                                f"{source} imports {target}, crossing the "
                                f"forbidden boundary {rule.from_glob} -> "
                                f"{rule.to_glob}"
                            ),
                            original_text=original,
                            suggestion=(
                                "Route this dependency through an allowed "
                                "interface instead of importing directly."
                            ),
                        )
                    )
        elif isinstance(rule, NoCyclesRule):
            scoped = [n for n in graph.nodes if fnmatchcase(n, rule.scope_glob)]
            subgraph = graph.subgraph(scoped)
            components = [
                scc for scc in nx.strongly_connected_components(subgraph)
                if len(scc) >= 2
            ]
            for scc in sorted(components, key=lambda s: min(s)):
                members = cycle_walk(subgraph, scc)
                loop = " -> ".join(members + (members[0],))
                violations.append(
                    ArchViolation(
                        rule_id=rule_id,
                        source=members[0],
                        target=members[1] if len(members) > 1 else members[0],
                        severity=severity,
                        message=f"circular dependency: {loop}",
                        original_text=original,
                        suggestion=(
                            "Break the cycle by extracting the shared piece "
                            "into a module both sides can import."
                        ),
                        cycle_members=members,
                    )
                )
    violations.sort(key=lambda v: (v.rule_id, v.source, v.target))
    return violations
