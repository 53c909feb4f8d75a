"""Parse agent instruction Markdown into a heading tree and content slices.

The tree has heading internal nodes (H1-H6) and content leaves (paragraph,
list_item, code_block, other). Each slice carries the ordered heading texts
of its ancestors (the header path) so downstream stages can scope rules.

Structural choices that affect constraint identity:
- Nested list items are flattened to sibling leaves; the parent item keeps
  only its own text and its span is trimmed to end where the sublist starts.
  The nesting depth survives on the slice as list_depth.
- Multi-line list items (lazy continuations plus embedded code examples)
  stay one slice; an embedded code block's text is kept verbatim while
  surrounding prose has its whitespace collapsed.
- Code blocks directly under a heading become their own code_block leaves.
- Tables, HTML blocks, and blockquotes become single "other" leaves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from markdown_it import MarkdownIt

INSTRUCTION_FILENAMES = (
    "AGENTS.md",
    "CLAUDE.md",
    ".github/copilot-instructions.md",
)

_LEAF_KINDS = ("paragraph", "list_item", "code_block", "other")


@dataclass
class DocumentNode:
    kind: str
    text: str
    span: tuple[int, int]
    children: list["DocumentNode"] = field(default_factory=list)
    level: int | None = None
    list_depth: int = 0
    # (part kind, part text) pieces for list items; lets normalization keep
    # embedded code verbatim while collapsing prose whitespace.
    parts: tuple[tuple[str, str], ...] | None = None


@dataclass
class DocumentTree:
    source_file: str
    root: DocumentNode


@dataclass
class Slice:
    source_file: str
    header_path: list[str]
    content_text: str
    kind: str
    span: tuple[int, int]
    list_depth: int = 0


def _markdown() -> MarkdownIt:
    return MarkdownIt("commonmark").enable("table").enable("strikethrough")


def normalize_heading_text(raw: str) -> str:
    return " ".join(raw.replace("`", "").split())


def _collapse(text: str) -> str:
    return " ".join(text.split())


class _TokNode:
    __slots__ = ("type", "token", "children")

    def __init__(self, type_: str, token, children) -> None:
        self.type = type_
        self.token = token
        self.children = children


def _nest_tokens(tokens) -> list[_TokNode]:
    stack: list[list[_TokNode]] = [[]]
    for tok in tokens:
        if tok.type.endswith("_open"):
            node = _TokNode(tok.type[: -len("_open")], tok, [])
            stack[-1].append(node)
            stack.append(node.children)
        elif tok.type.endswith("_close"):
            if len(stack) > 1:
                stack.pop()
        else:
            stack[-1].append(_TokNode(tok.type, tok, []))
    return stack[0]


def parse_document(source_file: str, text: str | bytes) -> DocumentTree:
    """Build the heading tree. Total over any Markdown; only invalid UTF-8
    raises (UnicodeDecodeError, whose .start names the byte offset)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    data = text.encode("utf-8")
    line_offsets = [0] + [i + 1 for i, b in enumerate(data) if b == 0x0A]

    def line_start(n: int) -> int:
        if n < len(line_offsets):
            return line_offsets[n]
        return len(data)

    def span_of(token_map) -> tuple[int, int]:
        if not token_map:
            return (0, 0)
        return (line_start(token_map[0]), line_start(token_map[1]))

    events: list[DocumentNode] = []

    def raw_source(token_map) -> str:
        start, end = span_of(token_map)
        return data[start:end].decode("utf-8")

    def emit_blocks(nodes: list[_TokNode], depth: int) -> None:
        for n in nodes:
            if n.type == "heading":
                inline = n.children[0] if n.children else None
                raw = inline.token.content if inline is not None else ""
                events.append(
                    DocumentNode(
                        kind="heading",
                        text=raw,
                        span=span_of(n.token.map),
                        level=int(n.token.tag[1]),
                    )
                )
            elif n.type == "paragraph":
                inline = n.children[0] if n.children else None
                raw = inline.token.content if inline is not None else ""
                events.append(
                    DocumentNode(
                        kind="paragraph",
                        text=raw,
                        span=span_of(n.token.map),
                        list_depth=depth,
                    )
                )
            elif n.type in ("fence", "code_block"):
                events.append(
                    DocumentNode(
                        kind="code_block",
                        text=n.token.content,
                        span=span_of(n.token.map),
                        list_depth=depth,
                    )
                )
            elif n.type in ("bullet_list", "ordered_list"):
                for item in n.children:
                    if item.type == "list_item":
                        emit_item(item, depth)
            elif n.type in ("table", "blockquote"):
                events.append(
                    DocumentNode(
                        kind="other",
                        text=raw_source(n.token.map),
                        span=span_of(n.token.map),
                        list_depth=depth,
                    )
                )
            elif n.type == "html_block":
                events.append(
                    DocumentNode(
                        kind="other",
                        text=n.token.content,
                        span=span_of(n.token.map),
                        list_depth=depth,
                    )
                )
            elif n.type == "hr":
                continue
            elif n.token is not None and n.token.map:
                events.append(
                    DocumentNode(
                        kind="other",
                        text=raw_source(n.token.map),
                        span=span_of(n.token.map),
                        list_depth=depth,
                    )
                )

    def emit_item(item: _TokNode, depth: int) -> None:
        own_parts: list[tuple[str, str]] = []
        sublists: list[_TokNode] = []
        for child in item.children:
            if child.type in ("bullet_list", "ordered_list"):
                sublists.append(child)
            elif child.type == "paragraph":
                inline = child.children[0] if child.children else None
                own_parts.append(("prose", inline.token.content if inline else ""))
            elif child.type in ("fence", "code_block"):
                own_parts.append(("code", child.token.content))
            elif child.token is not None and child.token.map:
                own_parts.append(("prose", raw_source(child.token.map)))
        start, end = span_of(item.token.map)
        if sublists and sublists[0].token.map:
            end = min(end, line_start(sublists[0].token.map[0]))
        events.append(
            DocumentNode(
                kind="list_item",
                text="\n".join(p[1] for p in own_parts),
                span=(start, end),
                list_depth=depth,
                parts=tuple(own_parts),
            )
        )
        for sub in sublists:
            for subitem in sub.children:
                if subitem.type == "list_item":
                    emit_item(subitem, depth + 1)

    emit_blocks(_nest_tokens(_markdown().parse(text)), 0)

    root = DocumentNode(kind="root", text="", span=(0, len(data)))
    stack: list[tuple[int, DocumentNode]] = [(0, root)]
    for node in events:
        if node.kind == "heading":
            while stack[-1][0] >= (node.level or 1):
                stack.pop()
            stack[-1][1].children.append(node)
            stack.append((node.level or 1, node))
        else:
            stack[-1][1].children.append(node)
    return DocumentTree(source_file=source_file, root=root)


def _normalize_content(node: DocumentNode) -> str:
    if node.kind == "code_block":
        return node.text
    if node.kind == "list_item" and node.parts is not None:
        rendered = [
            part_text if part_kind == "code" else _collapse(part_text)
            for part_kind, part_text in node.parts
        ]
        return "\n".join(r for r in rendered if r.strip()).strip()
    return _collapse(node.text)


def enumerate_slices(tree: DocumentTree) -> list[Slice]:
    """One slice per non-empty content leaf, in document order."""
    slices: list[Slice] = []

    def walk(node: DocumentNode, path: list[str]) -> None:
        for child in node.children:
            if child.kind == "heading":
                walk(child, path + [normalize_heading_text(child.text)])
            elif child.kind in _LEAF_KINDS:
                content = _normalize_content(child)
                if content.strip():
                    slices.append(
                        Slice(
                            source_file=tree.source_file,
                            header_path=list(path),
                            content_text=content,
                            kind=child.kind,
                            span=child.span,
                            list_depth=child.list_depth,
                        )
                    )

    walk(tree.root, [])
    return slices


def discover_instruction_files(root: str | Path) -> list[Path]:
    """Known instruction files present at the repo root, in discovery order."""
    root = Path(root)
    return [root / name for name in INSTRUCTION_FILENAMES if (root / name).is_file()]


def read_instruction_text(path: str | Path) -> str:
    """Read as UTF-8; a UnicodeDecodeError identifies the offending offset."""
    return Path(path).read_bytes().decode("utf-8")
