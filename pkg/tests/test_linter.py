"""Static lint: byte-offset positions, predicates, scopes, and ordering."""

from __future__ import annotations

import random
import subprocess

import pytest

from contextcov import engine
from contextcov.linter import (
    lint,
    lint_file,
    line_and_column,
    resolve_scope,
)
from contextcov.model import Domain, EnforcementLevel, SourceRule, make_constraint
from contextcov.provider import ProviderConfig
from contextcov.refine import SourceMeta
from contextcov.synthesis import deterministic_source_rule

from conftest import WATCHER_TS

pytestmark = pytest.mark.skipif(
    not engine.native_available(), reason="tree-sitter native core unavailable"
)


def oracle_position(source: bytes, offset: int) -> tuple[int, int]:
    before = source[:offset]
    line = before.count(b"\n") + 1
    column = len(before) - (before.rfind(b"\n") + 1) + 1
    return line, column


def test_line_and_column_against_oracle():
    rng = random.Random(42)
    alphabet = b"ab\ncd\n\n e"
    for _ in range(300):
        source = bytes(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
        for offset in range(len(source) + 1):
            assert line_and_column(source, offset) == oracle_position(source, offset)
    assert line_and_column(b"", 0) == (1, 1)
    assert line_and_column(b"a\nbc", 3) == (2, 2)


def source_constraint(text: str, severity=EnforcementLevel.WARN, languages=None):
    rule = deterministic_source_rule(
        text,
        SourceMeta(
            languages=list(languages or ["typescript", "javascript"]),
            pattern_kind="",
            severity=severity,
        ),
    )
    assert rule is not None
    return make_constraint(
        domain=Domain.SOURCE,
        original_text=text,
        refined_text=text,
        source_file="AGENTS.md",
        header_path=["Style"],
        enforcement_level=severity,
        check=rule,
    )


PAREN_TEXT = "MANDATORY: Only surround arrow function parameters when necessary."
THEN_TEXT = "Prefer `async/await` over `Promise` and `then` calls"


@pytest.fixture
def style_constraints():
    paren = source_constraint(PAREN_TEXT, EnforcementLevel.BLOCK)
    then = source_constraint(THEN_TEXT)
    return {paren.id: paren, then.id: then}


def write(root, rel, text):
    path = root / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def test_watcher_fixture_flags_only_parenthesized_param(tmp_path, style_constraints):
    write(tmp_path, "watcher.ts", WATCHER_TS)
    report = lint(str(tmp_path), style_constraints)
    assert report.skipped_files == []
    assert len(report.violations) == 1
    v = report.violations[0]
    assert (v.file, v.line) == ("watcher.ts", 3)
    source = WATCHER_TS.encode()
    # The capture anchors on the parameter name inside the parentheses.
    expected = oracle_position(source, source.index(b"(event)") + 1)
    assert (v.line, v.column) == expected
    assert v.severity is EnforcementLevel.BLOCK
    assert v.found == "(event) => {...}"
    assert v.suggestion == "Remove parentheses: event => {...}"
    assert v.original_text == PAREN_TEXT


def test_predicate_excludes_nonidentifier_parameters(tmp_path, style_constraints):
    write(
        tmp_path,
        "ok.ts",
        "const a = (event: Event) => event;\n"
        "const b = ({ x }) => x;\n"
        "const c = ([head]) => head;\n"
        "const d = (x, y) => x + y;\n"
        "const e = event => event;\n",
    )
    report = lint(str(tmp_path), style_constraints)
    assert report.violations == []


def test_then_rule_matches_only_then_member_calls(tmp_path, style_constraints):
    write(
        tmp_path,
        "promises.js",
        "fetchThing().then(render);\n"
        "strengthen(value);\n"
        "obj.thentime();\n"
        "queue.then(go).then(stop);\n",
    )
    report = lint(str(tmp_path), style_constraints)
    positions = [(v.file, v.line, v.column) for v in report.violations]
    src = open(tmp_path / "promises.js", "rb").read()
    assert len(positions) == 3
    assert all(line in (1, 4) for _, line, _ in positions)
    assert all(src.splitlines()[line - 1].count(b"then") for _, line, _ in positions)


def test_results_sorted_by_file_line_rule_column(tmp_path, style_constraints):
    write(tmp_path, "b.ts", "emitter.on((x) => x).then(done);\n")
    write(tmp_path, "a.ts", "p.then((v) => v);\n")
    report = lint(str(tmp_path), style_constraints)
    keys = [(v.file, v.line, v.rule_id, v.column) for v in report.violations]
    assert keys == sorted(keys)
    assert [v.file for v in report.violations] == ["a.ts", "a.ts", "b.ts", "b.ts"]


def test_rules_filter_by_language(tmp_path):
    constraint = source_constraint(
        "Do not call `exec()` anywhere.", languages=["python"]
    )
    write(tmp_path, "script.py", "exec('code')\nprint('ok')\n")
    write(tmp_path, "script.ts", "exec('code');\n")
    report = lint(str(tmp_path), {constraint.id: constraint})
    assert [(v.file, v.line) for v in report.violations] == [("script.py", 1)]


def test_ignored_directories_are_not_linted(tmp_path, style_constraints):
    write(tmp_path, "node_modules/dep/index.js", "p.then(go);\n")
    write(tmp_path, "dist/out.js", "p.then(go);\n")
    write(tmp_path, "src/app.js", "p.then(go);\n")
    report = lint(str(tmp_path), style_constraints)
    assert [v.file for v in report.violations] == ["src/app.js"]


def test_unknown_node_type_skips_rule_not_file(tmp_path, style_constraints):
    bad_rule = make_constraint(
        domain=Domain.SOURCE,
        original_text="broken",
        refined_text="broken",
        source_file="AGENTS.md",
        header_path=["Style"],
        enforcement_level=EnforcementLevel.WARN,
        check=SourceRule(
            languages=("javascript",),
            query="(nonexistent_node_kind) @x",
            capture_predicates=(),
            message="broken",
            severity=EnforcementLevel.WARN,
        ),
    )
    constraints = dict(style_constraints)
    constraints[bad_rule.id] = bad_rule
    write(tmp_path, "app.js", "p.then(go);\n")
    report = lint(str(tmp_path), constraints)
    assert [v.original_text for v in report.violations] == [THEN_TEXT]
    assert report.skipped_files == []


def test_missing_native_core_records_skipped_files(tmp_path, style_constraints, monkeypatch):
    def raiser(*_args, **_kwargs):
        raise engine.NativeUnavailableError("no native core")

    monkeypatch.setattr(engine, "run_query", raiser)
    write(tmp_path, "app.js", "p.then(go);\n")
    report = lint(str(tmp_path), style_constraints)
    assert report.violations == []
    assert report.skipped_files == ["app.js"]


# ---------------------------------------------------------------------------
# Scope resolution


def git(root, *args):
    subprocess.run(
        ["git", "-c", "user.email=t@example.com", "-c", "user.name=t", *args],
        cwd=root,
        check=True,
        capture_output=True,
    )


@pytest.fixture
def git_repo(tmp_path):
    write(tmp_path, "a.ts", "export const a = 1;\n")
    write(tmp_path, "b.ts", "export const b = 1;\n")
    write(tmp_path, "d.py", "D = 1\n")
    write(tmp_path, "README.md", "# docs\n")
    git(tmp_path, "init", "-q")
    git(tmp_path, "add", ".")
    git(tmp_path, "commit", "-qm", "base")
    # a.ts: modified, unstaged. b.ts: modified and staged. c.ts: untracked.
    write(tmp_path, "a.ts", "export const a = 2;\n")
    write(tmp_path, "b.ts", "export const b = 2;\n")
    git(tmp_path, "add", "b.ts")
    write(tmp_path, "c.ts", "export const c = 1;\n")
    write(tmp_path, "node_modules/x/y.ts", "export const y = 1;\n")
    return tmp_path


def test_scope_repo_lists_tracked_and_untracked(git_repo):
    assert resolve_scope(str(git_repo), "repo") == ["a.ts", "b.ts", "c.ts", "d.py"]


def test_scope_diff_against_base(git_repo):
    assert resolve_scope(str(git_repo), "diff", base="HEAD") == ["a.ts", "b.ts"]


def test_scope_unstaged_only(git_repo):
    assert resolve_scope(str(git_repo), "unstaged") == ["a.ts"]


def test_scope_without_git_falls_back_to_walk(tmp_path):
    write(tmp_path, "x.ts", "export const x = 1;\n")
    write(tmp_path, "vendor/skip.ts", "export const s = 1;\n")
    assert resolve_scope(str(tmp_path), "repo") == ["x.ts"]
    assert resolve_scope(str(tmp_path), "diff", base="HEAD") == []


def test_scope_rejects_unknown_name(tmp_path):
    with pytest.raises(ValueError):
        resolve_scope(str(tmp_path), "everything")
