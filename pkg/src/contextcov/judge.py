"""Provider-backed judgment of semantic design principles, WARN-only.

Requests pair a stored semantic rule with a file snippet. Replies are
validated against a strict schema; anything unusable after one retry
degrades to an OK verdict with a diagnostic, because WARN-capped rules must
never fail a run on provider flakiness. A deterministic offline stub covers
storage-key encapsulation principles so the default configuration works
without network access.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .model import SemanticRule
from .provider import ProviderConfig, complete_json

# Lines of context retained around the area of interest when trimming.
CONTEXT_LINES = 20
# Judged snippets are capped to keep provider payloads bounded.
MAX_SNIPPET_LINES = 240

VERDICT_OK = "ok"
VERDICT_WARNING = "warning"

_DOTTED_KEY_RE = re.compile(r"['\"]([A-Za-z_][\w-]*(?:\.[\w-]+){2,})['\"]")
_STORAGE_TOPIC_RE = re.compile(r"\bstorage\b|\bkeys?\b", re.IGNORECASE)


@dataclass(frozen=True)
class JudgmentRequest:
    rule_id: str
    rule: SemanticRule
    file: str
    snippet: str


@dataclass(frozen=True)
class Judgment:
    verdict: str  # VERDICT_OK | VERDICT_WARNING
    explanation: str
    suggestion: str = ""

    def __post_init__(self) -> None:
        if self.verdict not in (VERDICT_OK, VERDICT_WARNING):
            raise ValueError(f"invalid verdict: {self.verdict!r}")
        if self.verdict == VERDICT_WARNING and not self.explanation:
            raise ValueError("warning verdicts need an explanation")


def clip_snippet(text: str, max_lines: int = MAX_SNIPPET_LINES) -> str:
    lines = text.splitlines()
    if len(lines) <= max_lines:
        return text
    return "\n".join(lines[:max_lines])


def _file_component(path: str) -> str:
    """Owning component of a file: the segment after contrib/, else the
    parent directory name."""
    parts = path.replace("\\", "/").split("/")
    if "contrib" in parts[:-1]:
        idx = parts.index("contrib")
        if idx + 1 < len(parts) - 1:
            return parts[idx + 1]
    if len(parts) >= 2:
        return parts[-2]
    return ""


def stub_judge(request: JudgmentRequest) -> Judgment:
    """Deterministic offline judgment for storage-key encapsulation rules.

    Warns iff the snippet reads a dotted storage key whose first segment
    names a different component than the file's own. Other principles are
    passed as OK; this stub is a test convenience, not an authority.
    """
    if not _STORAGE_TOPIC_RE.search(request.rule.principle_text):
        return Judgment(verdict=VERDICT_OK, explanation="")
    own = _file_component(request.file).lower()
    for match in _DOTTED_KEY_RE.finditer(request.snippet):
        key = match.group(1)
        owner = key.split(".")[0].lower()
        if owner and owner != own:
            return Judgment(
                verdict=VERDICT_WARNING,
                explanation=(
                    f"Appears to access '{key}' which belongs to the "
                    f"{owner} component."
                ),
                suggestion=f"Define an API in the {owner} component instead.",
            )
    return Judgment(verdict=VERDICT_OK, explanation="")


def _valid_reply(obj: dict) -> bool:
    if obj.get("verdict") not in (VERDICT_OK, VERDICT_WARNING):
        return False
    if not isinstance(obj.get("explanation"), str):
        return False
    if obj["verdict"] == VERDICT_WARNING and not obj["explanation"]:
        return False
    if "suggestion" in obj and not isinstance(obj["suggestion"], str):
        return False
    return True


_JUDGE_PROMPT = (
    "You review a code snippet against one design principle. Reply with "
    'exactly {"verdict": "ok"|"warning", "explanation": "...", '
    '"suggestion": "..."}. Use "warning" only for a concrete concern.'
)


def _remote_judge(request: JudgmentRequest, cfg: ProviderConfig) -> Judgment:
    payload = (
        f"Principle: {request.rule.principle_text}\n"
        f"File: {request.file}\n"
        f"Snippet:\n{request.snippet}"
    )
    reply = complete_json(cfg, _JUDGE_PROMPT, payload, _valid_reply)
    if reply is None:
        return Judgment(
            verdict=VERDICT_OK,
            explanation="judgment unavailable (provider error)",
        )
    return Judgment(
        verdict=reply["verdict"],
        explanation=reply["explanation"],
        suggestion=reply.get("suggestion", ""),
    )


def judge(
    requests: list[JudgmentRequest], cfg: ProviderConfig
) -> list[tuple[JudgmentRequest, Judgment]]:
    results = []
    for request in requests:
        if cfg.is_remote:
            judgment = _remote_judge(request, cfg)
        else:
            judgment = stub_judge(request)
        results.append((request, judgment))
    results.sort(key=lambda pair: (pair[0].file, pair[0].rule_id))
    return results
