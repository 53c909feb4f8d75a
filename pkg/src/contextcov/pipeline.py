"""Check generation: instruction files in, validated check store out.

The stages run parse -> slice -> refine -> route -> synthesize -> validate,
then merge into any existing store so unchanged sections keep their IDs and
check objects. Every constraint-bearing slice ends in exactly one bucket:
stored under its own ID, absorbed into a grouped architecture rule, rerouted
to a semantic WARN rule, or dropped as invalid (with a diagnostic). A final
accounting assertion enforces that totality.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .instructions import (
    Slice,
    discover_instruction_files,
    enumerate_slices,
    parse_document,
    read_instruction_text,
)
from .model import (
    Constraint,
    Domain,
    compute_constraint_id,
    make_constraint,
)
from .provider import ProviderConfig
from .refine import (
    ArchDetMeta,
    ProcessMeta,
    RefinedSlice,
    SourceMeta,
    deterministic_refined_text,
    extract_level,
    refine,
    route,
)
from .store import (
    CheckStore,
    ChangeReport,
    StoreNotFoundError,
    load_store,
    merge_incremental,
    save_store,
)
from .synthesis import (
    plan_arch_rules,
    synthesize_process,
    synthesize_semantic,
    synthesize_source,
    validate_descriptor,
)


class GenerationError(Exception):
    pass


@dataclass
class GenerationReport:
    instruction_files: list[str] = field(default_factory=list)
    slices_total: int = 0
    constraints_detected: int = 0
    stored_direct: int = 0
    grouped: int = 0
    rerouted: int = 0
    dropped: int = 0
    changes: ChangeReport = field(
        default_factory=lambda: ChangeReport(added=[], removed=[], retained=[])
    )
    diagnostics: list[str] = field(default_factory=list)


def _semantic_constraint(slc: Slice, refined_text: str) -> Constraint:
    return make_constraint(
        domain=Domain.ARCH_SEMANTIC,
        original_text=slc.content_text,
        refined_text=refined_text,
        source_file=slc.source_file,
        header_path=list(slc.header_path),
        enforcement_level=extract_level(slc.content_text),
        check=synthesize_semantic(slc.content_text, list(slc.header_path)),
    )


def generate(
    root: str,
    instruction_paths: list[str] | None,
    store_path: str,
    cfg: ProviderConfig,
) -> GenerationReport:
    report = GenerationReport()
    diagnostics = report.diagnostics

    paths = [str(p) for p in (instruction_paths or discover_instruction_files(root))]
    if not paths:
        raise GenerationError(
            "no instruction files found (looked for AGENTS.md, CLAUDE.md, "
            ".github/copilot-instructions.md)"
        )
    report.instruction_files = paths

    try:
        old_store = load_store(store_path)
    except StoreNotFoundError:
        old_store = CheckStore()

    fresh: list[Constraint] = []
    arch_routed: list[tuple[Slice, ArchDetMeta]] = []
    arch_refined: dict[tuple[str, tuple[str, ...], str], str] = {}

    def reroute(slc: Slice, refined_text: str, reason: str) -> None:
        constraint = _semantic_constraint(slc, refined_text)
        fresh.append(constraint)
        report.rerouted += 1
        diagnostics.append(
            f"rerouted to semantic ({reason}): {slc.content_text[:72]!r}"
        )

    for path in paths:
        full = path if os.path.isabs(path) else os.path.join(root, path)
        rel = os.path.relpath(full, root).replace(os.sep, "/")
        text = read_instruction_text(full)
        tree = parse_document(rel, text)
        for slc in enumerate_slices(tree):
            report.slices_total += 1
            slice_id = compute_constraint_id(list(slc.header_path), slc.content_text)

            if cfg.is_remote and slice_id in old_store.constraints:
                # Routing must still see arch slices so grouping stays whole;
                # other domains reuse the retained object without provider calls.
                cheap = RefinedSlice(
                    slice=slc,
                    refined_text=deterministic_refined_text(slc),
                    is_constraint=True,
                )
                decision = route(cheap, ProviderConfig(mode="deterministic"))
                if decision.domain is not Domain.ARCH_DETERMINISTIC:
                    old = old_store.constraints[slice_id]
                    if old.domain is not Domain.ARCH_DETERMINISTIC:
                        report.constraints_detected += 1
                        fresh.append(old)
                        report.stored_direct += 1
                        continue

            refined = refine(slc, cfg, diagnostics)
            if not refined.is_constraint:
                continue
            report.constraints_detected += 1

            decision = route(refined, cfg, diagnostics)
            meta = decision.metadata

            if decision.domain is Domain.PROCESS:
                assert isinstance(meta, ProcessMeta)
                rule = synthesize_process(slc.content_text, meta, cfg)
                if rule is None:
                    reroute(slc, refined.refined_text, "no enforceable binaries")
                    continue
                constraint = make_constraint(
                    domain=Domain.PROCESS,
                    original_text=slc.content_text,
                    refined_text=refined.refined_text,
                    source_file=slc.source_file,
                    header_path=list(slc.header_path),
                    enforcement_level=rule.action,
                    check=rule,
                )
            elif decision.domain is Domain.SOURCE:
                assert isinstance(meta, SourceMeta)
                rule = synthesize_source(slc.content_text, meta, cfg)
                if rule is None:
                    reroute(slc, refined.refined_text, "no matching source pattern")
                    continue
                constraint = make_constraint(
                    domain=Domain.SOURCE,
                    original_text=slc.content_text,
                    refined_text=refined.refined_text,
                    source_file=slc.source_file,
                    header_path=list(slc.header_path),
                    enforcement_level=rule.severity,
                    check=rule,
                )
            elif decision.domain is Domain.ARCH_DETERMINISTIC:
                assert isinstance(meta, ArchDetMeta)
                arch_routed.append((slc, meta))
                arch_refined[
                    (slc.source_file, tuple(slc.header_path), slc.content_text)
                ] = refined.refined_text
                continue
            else:
                fresh.append(_semantic_constraint(slc, refined.refined_text))
                report.stored_direct += 1
                continue

            result = validate_descriptor(constraint.check)
            if not result.ok:
                reroute(
                    slc,
                    refined.refined_text,
                    f"descriptor invalid: {'; '.join(result.diagnostics)}",
                )
                continue
            fresh.append(constraint)
            report.stored_direct += 1

    plans, arch_rerouted = plan_arch_rules(arch_routed)
    for plan in plans:
        constraint = make_constraint(
            domain=Domain.ARCH_DETERMINISTIC,
            original_text=plan.original_text,
            refined_text=plan.refined_text,
            source_file=plan.source_file,
            header_path=list(plan.header_path),
            enforcement_level=extract_level(plan.original_text),
            check=plan.rule,
        )
        result = validate_descriptor(constraint.check)
        if not result.ok:
            members = plan.grouped_members or (
                [plan.origin_slice] if plan.origin_slice else []
            )
            for member in members:
                key = (member.source_file, tuple(member.header_path), member.content_text)
                reroute(
                    member,
                    arch_refined.get(key, deterministic_refined_text(member)),
                    f"arch rule invalid: {'; '.join(result.diagnostics)}",
                )
            if not members:
                report.dropped += 1
                diagnostics.append(
                    f"dropped invalid arch rule: {'; '.join(result.diagnostics)}"
                )
            continue
        fresh.append(constraint)
        if plan.grouped_members:
            report.grouped += len(plan.grouped_members)
            for member in plan.grouped_members:
                diagnostics.append(
                    f"grouped into {constraint.id}: {member.content_text[:72]!r}"
                )
        else:
            report.stored_direct += 1

    for slc in arch_rerouted:
        key = (slc.source_file, tuple(slc.header_path), slc.content_text)
        reroute(
            slc,
            arch_refined.get(key, deterministic_refined_text(slc)),
            "no deterministic architecture shape",
        )

    accounted = report.stored_direct + report.grouped + report.rerouted + report.dropped
    assert accounted == report.constraints_detected, (
        f"slice accounting broken: {accounted} outcomes for "
        f"{report.constraints_detected} detected constraints"
    )

    merged, changes = merge_incremental(old_store, fresh)
    report.changes = changes
    save_store(merged, store_path)
    return report
