"""Command-line surface: generate, check, validate, shim management.

Exit codes are part of the contract: 0 clean (or WARN-only), 1 at least one
blocking finding, 2 usage or store errors. WARN findings never change the
exit code unless --strict promotes them.
"""

from __future__ import annotations

import json
import os
import sys

import click

from .graphs import ArchViolation, build_graph, check_arch
from .judge import JudgmentRequest, clip_snippet, judge
from .linter import lint, resolve_scope
from .model import Domain, SemanticRule
from .pipeline import GenerationError, generate
from .provider import config_from_env
from .reports import (
    build_run_report,
    render_process_block,
    report_to_json,
    report_to_text,
)
from .shims import (
    ShimError,
    install_shims,
    resolve_shim_dir,
    run_shim,
    shim_status,
    uninstall_shims,
)
from .store import StoreError, load_store, resolve_store_path

# Judged files per run are capped to bound provider cost.
JUDGE_FILE_CAP = 20


@click.group()
def cli() -> None:
    """Compile agent instruction files into enforceable checks."""


@cli.command(name="generate")
@click.option(
    "--instructions",
    "instruction_paths",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Instruction file(s); default: auto-discover at the repo root.",
)
@click.option("--store", "store_opt", default=None, help="Check store path.")
@click.option("--provider-url", default=None, help="Remote provider endpoint.")
@click.option("--model", default=None, help="Remote provider model name.")
@click.option("--root", "root", default=".", help="Repository root.")
def cmd_generate(
    instruction_paths: tuple[str, ...],
    store_opt: str | None,
    provider_url: str | None,
    model: str | None,
    root: str,
) -> None:
    """Compile instruction files into the check store."""
    cfg = config_from_env(provider_url, model)
    store_path = str(resolve_store_path(store_opt))
    try:
        report = generate(root, list(instruction_paths) or None, store_path, cfg)
    except GenerationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    changes = report.changes
    click.echo(
        f"Processed {len(report.instruction_files)} instruction file(s), "
        f"{report.slices_total} slices, "
        f"{report.constraints_detected} constraints."
    )
    click.echo(
        f"Added {len(changes.added)}, removed {len(changes.removed)}, "
        f"retained {len(changes.retained)}. Store: {store_path}"
    )
    for line in report.diagnostics:
        click.echo(f"  note: {line}", err=True)


def _load_store_or_exit(store_opt: str | None):
    store_path = str(resolve_store_path(store_opt))
    try:
        return store_path, load_store(store_path)
    except StoreError as exc:
        click.echo(f"error: {exc}; run `contextcov generate` first", err=True)
        sys.exit(2)


def _scoped_arch_violations(
    violations: list[ArchViolation], scope_files: set[str], scope: str
) -> list[ArchViolation]:
    if scope == "repo":
        return violations
    kept = []
    for violation in violations:
        if violation.source in scope_files or any(
            member in scope_files for member in violation.cycle_members
        ):
            kept.append(violation)
    return kept


@cli.command(name="check")
@click.option(
    "--scope",
    type=click.Choice(["repo", "diff", "unstaged"]),
    default="repo",
    show_default=True,
)
@click.option("--base", default=None, help="Base revision for --scope diff.")
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["text", "json"]),
    default="text",
    show_default=True,
)
@click.option("--store", "store_opt", default=None, help="Check store path.")
@click.option("--root", default=".", help="Repository root.")
@click.option(
    "--judge/--no-judge",
    "judge_flag",
    default=None,
    help="Run semantic judgment (default: only when a provider is configured).",
)
@click.option(
    "--judge-full",
    is_flag=True,
    help="Allow semantic judgment over the whole repo scope.",
)
@click.option("--strict", is_flag=True, help="WARN findings also exit 1.")
@click.option(
    "--graph-out",
    default=None,
    type=click.Path(dir_okay=False),
    help="Dump the dependency graph as a JSON adjacency list.",
)
def cmd_check(
    scope: str,
    base: str | None,
    output_format: str,
    store_opt: str | None,
    root: str,
    judge_flag: bool | None,
    judge_full: bool,
    strict: bool,
    graph_out: str | None,
) -> None:
    """Run source, architecture, and semantic checks over a scope."""
    store_path, store = _load_store_or_exit(store_opt)
    cfg = config_from_env()

    try:
        scope_files = resolve_scope(root, scope, base)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)

    lint_report = lint(root, store.constraints, scope, base)

    # The graph always covers the whole repository; a changed file's edges
    # can land anywhere. Findings are then filtered down to the scope.
    repo_files = resolve_scope(root, "repo")
    graph = build_graph(root, repo_files)
    arch_violations = _scoped_arch_violations(
        check_arch(graph, store.constraints), set(scope_files), scope
    )

    if graph_out:
        adjacency = {
            node: sorted(graph.successors(node)) for node in sorted(graph.nodes)
        }
        with open(graph_out, "w", encoding="utf-8") as fh:
            json.dump(
                {"nodes": sorted(graph.nodes), "edges": adjacency}, fh, indent=2
            )
            fh.write("\n")

    judge_enabled = cfg.is_remote if judge_flag is None else judge_flag
    if scope == "repo" and not judge_full:
        judge_enabled = False
    semantic_results = []
    if judge_enabled:
        requests = []
        for rule_id in sorted(store.constraints):
            constraint = store.constraints[rule_id]
            if constraint.disabled or constraint.domain is not Domain.ARCH_SEMANTIC:
                continue
            rule = constraint.check
            if not isinstance(rule, SemanticRule):
                continue
            for rel in scope_files[:JUDGE_FILE_CAP]:
                try:
                    with open(os.path.join(root, rel), "r", encoding="utf-8") as fh:
                        snippet = clip_snippet(fh.read())
                except (OSError, UnicodeDecodeError):
                    continue
                requests.append(
                    JudgmentRequest(
                        rule_id=rule_id, rule=rule, file=rel, snippet=snippet
                    )
                )
        semantic_results = judge(requests, cfg)

    diagnostics = [f"skipped (no parser): {path}" for path in lint_report.skipped_files]
    report = build_run_report(
        store.constraints,
        lint_report.violations,
        arch_violations,
        semantic_results,
        diagnostics,
    )

    if output_format == "json":
        click.echo(report_to_json(report), nl=False)
    else:
        click.echo(
            report_to_text(
                report, lint_report.violations, arch_violations, semantic_results
            ),
            nl=False,
        )

    if report.block_findings > 0:
        sys.exit(1)
    if strict and report.warn_findings > 0:
        sys.exit(1)
    sys.exit(0)


@cli.command(name="validate")
@click.option("--store", "store_opt", default=None, help="Check store path.")
def cmd_validate(store_opt: str | None) -> None:
    """Validate every stored check descriptor."""
    from .synthesis import validate_descriptor

    store_path, store = _load_store_or_exit(store_opt)
    totals: dict[str, list[int]] = {d.value: [0, 0] for d in Domain}
    failures: list[tuple[str, list[str]]] = []
    for rule_id in sorted(store.constraints):
        constraint = store.constraints[rule_id]
        counts = totals[constraint.domain.value]
        counts[1] += 1
        result = validate_descriptor(constraint.check)
        if result.ok:
            counts[0] += 1
        else:
            failures.append((rule_id, result.diagnostics))
    for domain in Domain:
        valid, total = totals[domain.value]
        pct = 100.0 if total == 0 else 100.0 * valid / total
        click.echo(f"{domain.value}: {valid}/{total} valid ({pct:.1f}%)")
    for rule_id, diags in failures:
        click.echo(f"invalid {rule_id}: {'; '.join(diags)}", err=True)
    sys.exit(1 if failures else 0)


@cli.group(name="shim")
def cmd_shim() -> None:
    """Manage PATH shims for process checks."""


@cmd_shim.command(name="install")
@click.option("--store", "store_opt", default=None, help="Check store path.")
@click.option("--dir", "dir_opt", default=None, help="Shim directory.")
def shim_install(store_opt: str | None, dir_opt: str | None) -> None:
    store_path, store = _load_store_or_exit(store_opt)
    shim_dir = resolve_shim_dir(dir_opt, store_path)
    try:
        names = install_shims(store, store_path, shim_dir)
    except (OSError, ShimError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if not names:
        click.echo("No process checks in store; nothing to wrap.")
        return
    click.echo(f"Installed {len(names)} wrapper(s) in {shim_dir}: {', '.join(names)}")
    click.echo(f'export PATH="{os.path.abspath(shim_dir)}:$PATH"')


@cmd_shim.command(name="uninstall")
@click.option("--store", "store_opt", default=None, help="Check store path.")
@click.option("--dir", "dir_opt", default=None, help="Shim directory.")
def shim_uninstall(store_opt: str | None, dir_opt: str | None) -> None:
    store_path = str(resolve_store_path(store_opt))
    shim_dir = resolve_shim_dir(dir_opt, store_path)
    removed = uninstall_shims(shim_dir)
    if removed:
        click.echo(f"Removed {len(removed)} wrapper(s): {', '.join(removed)}")
    else:
        click.echo("Nothing to remove.")


@cmd_shim.command(name="status")
@click.option("--store", "store_opt", default=None, help="Check store path.")
@click.option("--dir", "dir_opt", default=None, help="Shim directory.")
def shim_status_cmd(store_opt: str | None, dir_opt: str | None) -> None:
    store_path = str(resolve_store_path(store_opt))
    shim_dir = resolve_shim_dir(dir_opt, store_path)
    status = shim_status(shim_dir, store_path)
    drifted = [w["name"] for w in status.wrappers if not (w["present"] and w["intact"])]
    click.echo(f"Shim dir: {status.shim_dir} ({'on' if status.on_path else 'not on'} PATH)")
    click.echo(f"Store: {status.store_path} ({'present' if status.store_exists else 'missing'})")
    if not status.wrappers:
        click.echo("No wrappers installed.")
        return
    if drifted:
        click.echo(f"Drift detected: {', '.join(drifted)}", err=True)
        sys.exit(1)
    click.echo(f"ok, {len(status.wrappers)} wrapper(s)")


@cli.command(
    name="shim-exec",
    context_settings={"ignore_unknown_options": True},
    hidden=True,
)
@click.argument("binary")
@click.argument("args", nargs=-1, type=click.UNPROCESSED)
def cmd_shim_exec(binary: str, args: tuple[str, ...]) -> None:
    """Internal entry used by wrapper scripts."""
    sys.exit(run_shim(binary, list(args)))


def main() -> None:
    cli(prog_name="contextcov")


if __name__ == "__main__":
    main()
