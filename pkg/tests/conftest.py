"""Shared fixtures: an instruction document plus a matching source tree.

The instruction excerpt exercises all four check domains: process rules
(the npm bullet), source style rules (the arrow-function bullets), a
directory layout with layering and cycle guidance, and a cross-component
principle that only a reviewer can weigh.
"""

from __future__ import annotations

import os
import stat
import subprocess
import sys
from pathlib import Path

import pytest

from contextcov.pipeline import generate
from contextcov.provider import ProviderConfig
from contextcov.store import load_store

INSTRUCTIONS = """\
## Validating TypeScript changes

MANDATORY: Always check the `VS Code - Build` watch task
output for compilation errors before running ANY script.

- NEVER run tests if there are compilation errors
- NEVER use `npm run compile` to compile TypeScript files. Check the build watch task output instead.

## Coding Guidelines

### Style

- Use arrow functions `=>` over anonymous function expressions
- MANDATORY: Only surround arrow function parameters when necessary.
  For example, `(x) => x + x` is wrong but these are correct:

      x => x + x
      (x, y) => x + y

- Prefer `async/await` over `Promise` and `then` calls

### Core Architecture (`src/` folder)

- `src/vs/base/` - Foundation utilities
- `src/vs/platform/` - Platform services and DI
- `src/vs/editor/` - Text editor implementation
- `src/vs/workbench/` - Main application workbench
  - `workbench/browser/` - Core workbench UI components
  - `workbench/services/` - Service implementations
  - `workbench/contrib/` - Feature contributions
  - `workbench/api/` - Extension host and VS Code API
- **Layered architecture** - from `base` to `workbench`
- Avoid circular dependencies between modules.

### Code Quality

- You MUST NOT use storage keys of another component only
  to make changes to that component. You MUST come up with
  proper API to change another component.
"""

# Line 3 wraps its arrow parameter in parentheses; line 6 does not.
WATCHER_TS = """\
export class Watcher {
    register(watcher: Emitter): void {
        watcher.onDidChange((event) => {
            this.handleChange(event);
        });
        watcher.onDidDelete(event => {
            this.handleChange(event);
        });
    }
    handleChange(event: unknown): void {}
}
"""

WATCHER_TS_FIXED = WATCHER_TS.replace("((event) =>", "(event =>")

PATHS_TS = 'export const join = (a: string, b: string): string => a + "/" + b;\n'

STRAY_UTILITY_TS = "export const normalize = (p: string): string => p;\n"

LAYER_BREAK_TS = """\
import { Watcher } from "../../workbench/browser/watcher";
export const w = new Watcher();
"""

CYCLE_TS = {
    "src/vs/platform/cycle/a.ts": 'import { b } from "./b";\nexport const a = b + 1;\n',
    "src/vs/platform/cycle/b.ts": 'import { c } from "./c";\nexport const b = c + 1;\n',
    "src/vs/platform/cycle/c.ts": 'import { a } from "./a";\nexport const c = a + 1;\n',
}

FAKE_NPM = '#!/bin/sh\necho "fake npm ran: $@"\nexit 7\n'


def write_instructions(root: Path, text: str = INSTRUCTIONS) -> Path:
    path = root / "AGENTS.md"
    path.write_text(text, encoding="utf-8")
    return path


def write_source_tree(
    root: Path,
    *,
    paren_violation: bool = True,
    stray_utility: bool = False,
    layer_break: bool = False,
    cycle: bool = False,
) -> None:
    files = {
        "src/vs/workbench/browser/watcher.ts": (
            WATCHER_TS if paren_violation else WATCHER_TS_FIXED
        ),
        "src/vs/base/common/paths.ts": PATHS_TS,
    }
    if stray_utility:
        files["src/vs/workbench/myNewUtility.ts"] = STRAY_UTILITY_TS
    if layer_break:
        files["src/vs/base/common/bad.ts"] = LAYER_BREAK_TS
    if cycle:
        files.update(CYCLE_TS)
    for rel, content in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")


def generate_store(root: Path, store_path: Path | None = None) -> Path:
    store_path = store_path or root / ".contextcov" / "checks.json"
    generate(str(root), None, str(store_path), ProviderConfig())
    return store_path


def write_fake_npm(directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    script = directory / "npm"
    script.write_text(FAKE_NPM, encoding="utf-8")
    script.chmod(script.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    return script


def run_cli(
    args: list[str],
    cwd: Path,
    env_extra: dict[str, str] | None = None,
    path_prepend: list[Path] | None = None,
) -> subprocess.CompletedProcess:
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    if path_prepend:
        env["PATH"] = os.pathsep.join(
            [str(p) for p in path_prepend] + [env.get("PATH", "")]
        )
    return subprocess.run(
        [sys.executable, "-m", "contextcov", *args],
        cwd=cwd,
        env=env,
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="session")
def generated_constraints(tmp_path_factory):
    """One generated store, shared read-only across tests."""
    root = tmp_path_factory.mktemp("genstore")
    write_instructions(root)
    store_path = generate_store(root)
    return load_store(store_path).constraints


def constraints_of_domain(constraints: dict, domain) -> dict:
    return {cid: c for cid, c in constraints.items() if c.domain is domain}
