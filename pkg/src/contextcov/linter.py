"""Multi-language static lint driven by stored source rules.

Files are selected by scope (whole repo, diff against a base, or unstaged
changes), parsed with tree-sitter grammars, and matched against each rule's
query. Capture predicates filter matches; the first capture named in the
query text anchors the reported line and column, both derived from byte
offsets so results are stable across platforms.
"""

from __future__ import annotations

import os
import re
import subprocess
from dataclasses import dataclass, field

from . import engine
from .model import Constraint, Domain, EnforcementLevel, SourceRule

# Extension to (language id, grammar name). The .tsx dialect parses with its
# own grammar but participates in rules listed under "typescript".
EXTENSIONS: dict[str, tuple[str, str]] = {
    ".py": ("python", "python"),
    ".ts": ("typescript", "typescript"),
    ".tsx": ("typescript", "tsx"),
    ".js": ("javascript", "javascript"),
    ".jsx": ("javascript", "javascript"),
    ".mjs": ("javascript", "javascript"),
    ".cjs": ("javascript", "javascript"),
    ".go": ("go", "go"),
    ".rs": ("rust", "rust"),
}

IGNORED_DIRS = frozenset(
    {"node_modules", "target", "dist", "build", "vendor", ".git", ".contextcov"}
)

_CAPTURE_RE = re.compile(r"@([A-Za-z_][A-Za-z0-9_.]*)")


@dataclass
class Violation:
    rule_id: str
    file: str
    line: int
    column: int
    severity: EnforcementLevel
    message: str
    original_text: str
    found: str = ""
    suggestion: str = ""


@dataclass
class LintReport:
    violations: list[Violation] = field(default_factory=list)
    skipped_files: list[str] = field(default_factory=list)


def _git(root: str, *args: str) -> list[str] | None:
    try:
        proc = subprocess.run(
            ["git", *args],
            cwd=root,
            capture_output=True,
            text=True,
            check=False,
        )
    except OSError:
        return None
    if proc.returncode != 0:
        return None
    return [line for line in proc.stdout.splitlines() if line.strip()]


def _walk_files(root: str) -> list[str]:
    found: list[str] = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in IGNORED_DIRS)
        for name in sorted(filenames):
            rel = os.path.relpath(os.path.join(dirpath, name), root)
            found.append(rel.replace(os.sep, "/"))
    return found


def resolve_scope(root: str, scope: str, base: str | None = None) -> list[str]:
    """Relative paths of lintable files for a scope: repo, diff, or unstaged."""
    if scope == "repo":
        files = _git(root, "ls-files", "--cached", "--others", "--exclude-standard")
        if files is None:
            files = _walk_files(root)
    elif scope == "diff":
        args = ["diff", "--name-only", "--relative"]
        if base:
            args.append(base)
        files = _git(root, *args)
        if files is None:
            files = []
    elif scope == "unstaged":
        files = _git(root, "diff", "--name-only", "--relative") or []
    else:
        raise ValueError(f"unknown scope: {scope}")
    selected = []
    for path in files:
        path = path.replace(os.sep, "/")
        parts = path.split("/")
        if any(part in IGNORED_DIRS for part in parts[:-1]):
            continue
        _, ext = os.path.splitext(path)
        if ext in EXTENSIONS and os.path.isfile(os.path.join(root, path)):
            selected.append(path)
    return sorted(set(selected))


def line_and_column(source: bytes, offset: int) -> tuple[int, int]:
    """1-based line and column for a byte offset."""
    line = source.count(b"\n", 0, offset) + 1
    last_newline = source.rfind(b"\n", 0, offset)
    column = offset - (last_newline + 1) + 1
    return line, column


def _primary_capture(query: str) -> str:
    names = _CAPTURE_RE.findall(query)
    return names[0] if names else ""


def _capture_texts(
    source: bytes, captures: tuple[tuple[str, int, int], ...]
) -> dict[str, str]:
    texts: dict[str, str] = {}
    for name, start, end in captures:
        if name not in texts:
            texts[name] = source[start:end].decode("utf-8", errors="replace")
    return texts


def _passes_predicates(rule: SourceRule, texts: dict[str, str]) -> bool:
    for name, pattern in rule.capture_predicates:
        text = texts.get(name)
        if text is None:
            return False
        if not re.search(pattern, text):
            return False
    return True


def _format_extra(template: str, texts: dict[str, str]) -> str:
    if not template:
        return ""

    def repl(m: re.Match) -> str:
        return texts.get(m.group(1), "")

    out = re.sub(r"\{([A-Za-z_][A-Za-z0-9_.]*)\}", repl, template)
    return out.replace("{{", "{").replace("}}", "}")


def lint_file(
    root: str, rel_path: str, rules: list[tuple[str, Constraint, SourceRule]]
) -> list[Violation]:
    _, ext = os.path.splitext(rel_path)
    language_id, grammar = EXTENSIONS[ext]
    try:
        with open(os.path.join(root, rel_path), "rb") as fh:
            source = fh.read()
    except OSError:
        return []
    violations: list[Violation] = []
    for rule_id, constraint, rule in rules:
        if language_id not in rule.languages:
            continue
        primary = _primary_capture(rule.query)
        try:
            matches = engine.run_query(grammar, source, rule.query)
        except engine.NativeUnavailableError:
            raise
        except engine.EngineError:
            continue
        for match in matches:
            texts = _capture_texts(source, match.captures)
            if not _passes_predicates(rule, texts):
                continue
            anchor = next(
                ((s, e) for n, s, e in match.captures if n == primary), None
            )
            if anchor is None:
                if not match.captures:
                    continue
                anchor = (match.captures[0][1], match.captures[0][2])
            line, column = line_and_column(source, anchor[0])
            violations.append(
                Violation(
                    rule_id=rule_id,
                    file=rel_path,
                    line=line,
                    column=column,
                    severity=rule.severity,
                    message=rule.message,
                    original_text=constraint.original_text,
                    found=_format_extra(rule.found_format, texts),
                    suggestion=_format_extra(rule.suggestion, texts),
                )
            )
    return violations


def lint(
    root: str,
    constraints: dict[str, Constraint],
    scope: str = "repo",
    base: str | None = None,
) -> LintReport:
    rules: list[tuple[str, Constraint, SourceRule]] = []
    for rule_id in sorted(constraints):
        constraint = constraints[rule_id]
        if constraint.disabled:
            continue
        if constraint.domain is Domain.SOURCE and isinstance(
            constraint.check, SourceRule
        ):
            rules.append((rule_id, constraint, constraint.check))
    report = LintReport()
    if not rules:
        return report
    for rel_path in resolve_scope(root, scope, base):
        try:
            report.violations.extend(lint_file(root, rel_path, rules))
        except engine.NativeUnavailableError:
            report.skipped_files.append(rel_path)
    report.violations.sort(key=lambda v: (v.file, v.line, v.rule_id, v.column))
    return report
