"""Markdown instruction parsing: heading hierarchy, slices, discovery."""

from __future__ import annotations

import random

from contextcov.instructions import (
    discover_instruction_files,
    enumerate_slices,
    normalize_heading_text,
    parse_document,
    read_instruction_text,
)

from conftest import INSTRUCTIONS


def slices_of(text: str):
    return enumerate_slices(parse_document("AGENTS.md", text))


def test_fixture_slice_inventory():
    slices = slices_of(INSTRUCTIONS)
    assert len(slices) == 17
    assert [s.kind for s in slices] == ["paragraph"] + ["list_item"] * 16


def test_header_paths_follow_heading_levels():
    slices = slices_of(INSTRUCTIONS)
    assert slices[0].header_path == ["Validating TypeScript changes"]
    assert slices[3].header_path == ["Coding Guidelines", "Style"]
    assert slices[6].header_path == [
        "Coding Guidelines",
        "Core Architecture (src/ folder)",
    ]
    assert slices[-1].header_path == ["Coding Guidelines", "Code Quality"]


def test_heading_text_drops_inline_code_markers():
    assert (
        normalize_heading_text("Core Architecture (`src/` folder)")
        == "Core Architecture (src/ folder)"
    )


def test_prose_whitespace_collapses_but_code_lines_survive():
    slices = slices_of(INSTRUCTIONS)
    paren = slices[4].content_text
    # The two-line prose part joins with single spaces; the indented code
    # examples keep their own lines verbatim.
    assert paren.startswith(
        "MANDATORY: Only surround arrow function parameters when necessary. "
        "For example, `(x) => x + x` is wrong but these are correct:"
    )
    assert "\nx => x + x\n(x, y) => x + y" in paren

    wrapped = slices[0].content_text
    assert "\n" not in wrapped
    assert "watch task output" in wrapped


def test_nested_list_items_carry_depth():
    slices = slices_of(INSTRUCTIONS)
    depths = {s.content_text.split("`")[1]: s.list_depth for s in slices[6:14]}
    assert depths["src/vs/base/"] == 0
    assert depths["workbench/browser/"] == 1
    assert depths["workbench/api/"] == 1


def test_slices_arrive_in_document_order():
    slices = slices_of(INSTRUCTIONS)
    spans = [s.span for s in slices]
    assert spans == sorted(spans)
    assert all(a < b for a, b in spans)


def test_setext_and_deep_headings():
    text = "Top\n===\n\npara one\n\n#### Deep\n\n- bullet\n"
    slices = slices_of(text)
    assert slices[0].header_path == ["Top"]
    assert slices[1].header_path == ["Top", "Deep"]


def test_empty_document_yields_no_slices():
    assert slices_of("") == []
    assert slices_of("# Just a heading\n\n## And another\n") == []


def _random_document(rng: random.Random) -> tuple[str, dict[str, list[str]]]:
    """A random heading/bullet document plus a line-scanner oracle.

    The oracle tracks the ATX heading stack by hand: a level-n heading pops
    every entry of level >= n. Each content line carries a unique token so
    slices map back to source lines unambiguously.
    """
    lines: list[str] = []
    expected: dict[str, list[str]] = {}
    stack: list[tuple[int, str]] = []
    serial = 0
    for _ in range(rng.randint(4, 18)):
        roll = rng.random()
        if roll < 0.45:
            level = rng.randint(1, 4)
            serial += 1
            title = f"Heading {serial}"
            while stack and stack[-1][0] >= level:
                stack.pop()
            stack.append((level, title))
            lines += [f"{'#' * level} {title}", ""]
        else:
            serial += 1
            token = f"item-{serial}"
            expected[token] = [title for _, title in stack]
            if roll < 0.75:
                lines += [f"- bullet {token}", ""]
            else:
                lines += [f"paragraph {token}", ""]
    return "\n".join(lines) + "\n", expected


def test_header_paths_match_line_scanner_oracle():
    rng = random.Random(20260815)
    for _ in range(150):
        text, expected = _random_document(rng)
        found = {}
        for s in slices_of(text):
            token = s.content_text.split()[-1]
            found[token] = s.header_path
        assert found == expected


def test_discovery_order_and_reading(tmp_path):
    assert discover_instruction_files(tmp_path) == []
    (tmp_path / ".github").mkdir()
    (tmp_path / ".github" / "copilot-instructions.md").write_text("# c\n")
    (tmp_path / "CLAUDE.md").write_text("# b\n")
    (tmp_path / "AGENTS.md").write_text("# a\n")
    names = [p.relative_to(tmp_path).as_posix() for p in discover_instruction_files(tmp_path)]
    assert names == ["AGENTS.md", "CLAUDE.md", ".github/copilot-instructions.md"]
    assert read_instruction_text(tmp_path / "AGENTS.md") == "# a\n"
