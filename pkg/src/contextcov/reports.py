"""Rendering of findings and the aggregate run report.

The four text templates are load-bearing: downstream tooling matches them
literally, so their shapes are fixed and tested byte-for-byte. JSON output
must be byte-stable across identical runs, so the report serializer sorts
keys and excludes wall-clock timing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .graphs import ArchViolation
from .judge import VERDICT_WARNING, Judgment, JudgmentRequest
from .linter import Violation
from .model import Constraint, Domain


def _collapse(text: str) -> str:
    return "; ".join(line.strip() for line in text.splitlines() if line.strip())


def render_process_block(constraint: Constraint) -> str:
    lines = [
        "[ContextCov] BLOCKED: Process constraint violated",
        f'  Rule: "{_collapse(constraint.original_text)}"',
    ]
    suggestion = getattr(constraint.check, "suggestion", "")
    if suggestion:
        lines.append(f"  Action: {suggestion}")
    return "\n".join(lines)


def render_source_violation(violation: Violation) -> str:
    lines = [
        f"[ContextCov] Source violation: {violation.file}:{violation.line}",
        f'  Rule: "{_collapse(violation.original_text)}"',
    ]
    if violation.found:
        lines.append(f"  Found: {violation.found}")
    if violation.suggestion:
        lines.append(f"  Suggestion: {violation.suggestion}")
    return "\n".join(lines)


def render_arch_violation(violation: ArchViolation) -> str:
    lines = [
        f"[ContextCov] Architectural violation: {violation.source}",
        f'  Rule: "{_collapse(violation.original_text)}"',
    ]
    if violation.suggestion:
        lines.append(f"  Suggestion: {violation.suggestion}")
    return "\n".join(lines)


def render_semantic_warning(request: JudgmentRequest, judgment: Judgment) -> str:
    lines = [
        "[ContextCov] WARNING: Possible architectural violation",
        f'  Rule: "{_collapse(request.rule.principle_text)}"',
        f"  File: {request.file}",
        f"  Concern: {judgment.explanation}",
    ]
    if judgment.suggestion:
        lines.append(f"  Suggestion: {judgment.suggestion}")
    return "\n".join(lines)


@dataclass
class RunReport:
    domains: dict[str, dict[str, int]] = field(default_factory=dict)
    findings: list[dict] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    elapsed_ms: int = 0

    @property
    def block_findings(self) -> int:
        return sum(1 for f in self.findings if f.get("severity") == "block")

    @property
    def warn_findings(self) -> int:
        return sum(1 for f in self.findings if f.get("severity") != "block")


def _source_finding(violation: Violation) -> dict:
    return {
        "kind": "source",
        "rule_id": violation.rule_id,
        "file": violation.file,
        "line": violation.line,
        "column": violation.column,
        "severity": violation.severity.value,
        "message": violation.message,
        "suggestion": violation.suggestion,
    }


def _arch_finding(violation: ArchViolation) -> dict:
    return {
        "kind": "arch",
        "rule_id": violation.rule_id,
        "source": violation.source,
        "target": violation.target,
        "severity": violation.severity.value,
        "message": violation.message,
        "original_text": violation.original_text,
        "suggestion": violation.suggestion,
        "cycle_members": list(violation.cycle_members),
    }


def _semantic_finding(request: JudgmentRequest, judgment: Judgment) -> dict:
    return {
        "kind": "semantic",
        "rule_id": request.rule_id,
        "file": request.file,
        "severity": "warn",
        "message": judgment.explanation,
        "suggestion": judgment.suggestion,
    }


def build_run_report(
    constraints: dict[str, Constraint],
    source_violations: list[Violation],
    arch_violations: list[ArchViolation],
    semantic_results: list[tuple[JudgmentRequest, Judgment]],
    diagnostics: list[str],
    elapsed_ms: int = 0,
) -> RunReport:
    report = RunReport(diagnostics=list(diagnostics), elapsed_ms=elapsed_ms)

    triggered: dict[str, set[str]] = {d.value: set() for d in Domain}
    counts: dict[str, int] = {d.value: 0 for d in Domain}
    for violation in source_violations:
        report.findings.append(_source_finding(violation))
        triggered[Domain.SOURCE.value].add(violation.rule_id)
        counts[Domain.SOURCE.value] += 1
    for violation in arch_violations:
        report.findings.append(_arch_finding(violation))
        triggered[Domain.ARCH_DETERMINISTIC.value].add(violation.rule_id)
        counts[Domain.ARCH_DETERMINISTIC.value] += 1
    for request, judgment in semantic_results:
        if judgment.verdict == VERDICT_WARNING:
            report.findings.append(_semantic_finding(request, judgment))
            triggered[Domain.ARCH_SEMANTIC.value].add(request.rule_id)
            counts[Domain.ARCH_SEMANTIC.value] += 1

    for domain in Domain:
        total = sum(
            1
            for c in constraints.values()
            if c.domain is domain and not c.disabled
        )
        report.domains[domain.value] = {
            "checks_total": total,
            "checks_triggered": len(triggered[domain.value]),
            "violations": counts[domain.value],
        }
    return report


def report_to_json(report: RunReport) -> str:
    # elapsed_ms stays out: identical runs must serialize identically.
    payload = {
        "domains": report.domains,
        "findings": report.findings,
        "summary": {
            "block_findings": report.block_findings,
            "warn_findings": report.warn_findings,
        },
        "diagnostics": report.diagnostics,
    }
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def report_to_text(
    report: RunReport,
    source_violations: list[Violation],
    arch_violations: list[ArchViolation],
    semantic_results: list[tuple[JudgmentRequest, Judgment]],
) -> str:
    blocks: list[str] = []
    for violation in source_violations:
        blocks.append(render_source_violation(violation))
    for violation in arch_violations:
        blocks.append(render_arch_violation(violation))
    for request, judgment in semantic_results:
        if judgment.verdict == VERDICT_WARNING:
            blocks.append(render_semantic_warning(request, judgment))
    if not blocks:
        return "No violations found.\n"
    summary = (
        f"{len(blocks)} finding(s): {report.block_findings} blocking, "
        f"{report.warn_findings} warning(s)"
    )
    return "\n\n".join(blocks) + "\n\n" + summary + "\n"
