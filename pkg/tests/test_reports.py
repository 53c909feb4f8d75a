"""Violation message templates and the machine-readable run report."""

from __future__ import annotations

import json

from contextcov.graphs import ArchViolation
from contextcov.judge import Judgment, JudgmentRequest
from contextcov.linter import Violation
from contextcov.model import (
    Domain,
    EnforcementLevel,
    ProcessRule,
    SemanticRule,
    make_constraint,
)
from contextcov.reports import (
    build_run_report,
    render_arch_violation,
    render_process_block,
    render_semantic_warning,
    render_source_violation,
    report_to_json,
    report_to_text,
)


def process_constraint(text: str, suggestion: str = ""):
    return make_constraint(
        domain=Domain.PROCESS,
        original_text=text,
        refined_text=text,
        source_file="AGENTS.md",
        header_path=["Build"],
        enforcement_level=EnforcementLevel.BLOCK,
        check=ProcessRule(
            binaries=("npm",),
            argv_pattern=("run", "compile"),
            action=EnforcementLevel.BLOCK,
            message=text,
            suggestion=suggestion,
        ),
    )


def source_violation(found: str = "(event) => {...}", suggestion: str = "") -> Violation:
    return Violation(
        rule_id="aa" * 8,
        file="src/watcher.ts",
        line=42,
        column=9,
        severity=EnforcementLevel.BLOCK,
        message="Do not parenthesize single arrow parameters",
        original_text="Only surround arrow function parameters when necessary.",
        found=found,
        suggestion=suggestion,
    )


def arch_violation(cycle_members=()) -> ArchViolation:
    return ArchViolation(
        rule_id="bb" * 8,
        source="src/vs/workbench/myNewUtility.ts",
        target="",
        severity=EnforcementLevel.BLOCK,
        message="file sits outside the allowed subdirectories",
        original_text="`src/vs/workbench/` - Main application workbench",
        suggestion="Move the file into an allowed subdirectory.",
        cycle_members=tuple(cycle_members),
    )


def semantic_pair():
    rule = SemanticRule(principle_text="Do not touch another component's storage keys.")
    request = JudgmentRequest(
        rule_id="cc" * 8,
        rule=rule,
        file="src/vs/workbench/contrib/files/x.ts",
        snippet="storageService.store('terminal.integrated.fontSize', 1)",
    )
    judgment = Judgment(
        verdict="warning",
        explanation=(
            "Appears to access 'terminal.integrated.fontSize' which belongs "
            "to the terminal component."
        ),
        suggestion="Define an API in the terminal component instead.",
    )
    return request, judgment


def test_process_block_template():
    c = process_constraint(
        "NEVER use `npm run compile` to compile TypeScript files. "
        "Check the build watch task output instead.",
        suggestion="Check the build watch task output instead.",
    )
    assert render_process_block(c) == (
        "[ContextCov] BLOCKED: Process constraint violated\n"
        '  Rule: "NEVER use `npm run compile` to compile TypeScript files. '
        'Check the build watch task output instead."\n'
        "  Action: Check the build watch task output instead."
    )


def test_process_block_omits_empty_action_and_collapses_newlines():
    c = process_constraint("NEVER use `npm run compile`\nto compile files.")
    assert render_process_block(c) == (
        "[ContextCov] BLOCKED: Process constraint violated\n"
        '  Rule: "NEVER use `npm run compile`; to compile files."'
    )


def test_source_violation_template():
    v = source_violation(suggestion="Remove parentheses: event => {...}")
    assert render_source_violation(v) == (
        "[ContextCov] Source violation: src/watcher.ts:42\n"
        '  Rule: "Only surround arrow function parameters when necessary."\n'
        "  Found: (event) => {...}\n"
        "  Suggestion: Remove parentheses: event => {...}"
    )


def test_source_violation_omits_empty_optional_lines():
    v = source_violation(found="", suggestion="")
    assert render_source_violation(v) == (
        "[ContextCov] Source violation: src/watcher.ts:42\n"
        '  Rule: "Only surround arrow function parameters when necessary."'
    )


def test_arch_violation_template():
    assert render_arch_violation(arch_violation()) == (
        "[ContextCov] Architectural violation: src/vs/workbench/myNewUtility.ts\n"
        '  Rule: "`src/vs/workbench/` - Main application workbench"\n'
        "  Suggestion: Move the file into an allowed subdirectory."
    )


def test_semantic_warning_template():
    request, judgment = semantic_pair()
    assert render_semantic_warning(request, judgment) == (
        "[ContextCov] WARNING: Possible architectural violation\n"
        '  Rule: "Do not touch another component\'s storage keys."\n'
        "  File: src/vs/workbench/contrib/files/x.ts\n"
        "  Concern: Appears to access 'terminal.integrated.fontSize' which "
        "belongs to the terminal component.\n"
        "  Suggestion: Define an API in the terminal component instead."
    )


def build_fixture_report():
    c = process_constraint("NEVER use `npm run compile`.")
    request, judgment = semantic_pair()
    semantic_constraint = make_constraint(
        domain=Domain.ARCH_SEMANTIC,
        original_text=request.rule.principle_text,
        refined_text=request.rule.principle_text,
        source_file="AGENTS.md",
        header_path=["Quality"],
        enforcement_level=EnforcementLevel.WARN,
        check=request.rule,
    )
    constraints = {c.id: c, semantic_constraint.id: semantic_constraint}
    return (
        build_run_report(
            constraints,
            [source_violation()],
            [arch_violation(cycle_members=("a.ts", "b.ts"))],
            [(request, judgment)],
            diagnostics=["note: one file skipped"],
            elapsed_ms=123,
        ),
        [source_violation()],
        [arch_violation(cycle_members=("a.ts", "b.ts"))],
        [(request, judgment)],
    )


def test_run_report_counts_and_findings():
    report, *_ = build_fixture_report()
    assert report.block_findings == 2
    assert report.warn_findings == 1
    kinds = sorted(f["kind"] for f in report.findings)
    assert kinds == ["arch", "semantic", "source"]

    source = next(f for f in report.findings if f["kind"] == "source")
    assert source["file"] == "src/watcher.ts"
    assert source["line"] == 42 and source["column"] == 9
    assert "original_text" not in source

    arch = next(f for f in report.findings if f["kind"] == "arch")
    assert arch["cycle_members"] == ["a.ts", "b.ts"]
    assert arch["original_text"].startswith("`src/vs/workbench/`")

    semantic = next(f for f in report.findings if f["kind"] == "semantic")
    assert semantic["severity"] == "warn"
    assert semantic["message"].startswith("Appears to access")

    domains = report.domains
    assert domains["PROCESS"]["checks_total"] == 1
    assert domains["ARCH_SEMANTIC"]["violations"] == 1


def test_semantic_ok_results_are_not_findings():
    request, _ = semantic_pair()
    ok = Judgment(verdict="ok", explanation="")
    report = build_run_report({}, [], [], [(request, ok)], diagnostics=[])
    assert report.findings == []
    assert report.warn_findings == 0


def test_report_json_is_stable_and_omits_timing():
    report, *_ = build_fixture_report()
    first = report_to_json(report)
    second = report_to_json(report)
    assert first == second
    assert first.endswith("\n")
    payload = json.loads(first)
    assert "elapsed_ms" not in first
    assert set(payload) == {"domains", "findings", "summary", "diagnostics"}
    assert payload["summary"] == {"block_findings": 2, "warn_findings": 1}

    # Key order inside the serialized text is sorted for byte stability.
    findings_keys = [list(f) for f in payload["findings"]]
    assert all(keys == sorted(keys) for keys in findings_keys)


def test_report_text_joins_blocks_with_summary():
    report, sources, archs, semantics = build_fixture_report()
    text = report_to_text(report, sources, archs, semantics)
    blocks = text.rstrip("\n").split("\n\n")
    assert len(blocks) == 4  # three findings plus the summary line
    assert blocks[0].startswith("[ContextCov] Source violation:")
    assert blocks[-1] == "3 finding(s): 2 blocking, 1 warning(s)"


def test_report_text_clean_run():
    report = build_run_report({}, [], [], [], diagnostics=[])
    assert report_to_text(report, [], [], []) == "No violations found.\n"
