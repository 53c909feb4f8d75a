"""Compile agent instruction Markdown into enforceable, reviewable checks.

Instruction files (AGENTS.md and friends) are sliced along their heading
hierarchy, routed into four enforcement domains, and synthesized into
declarative check descriptors stored as JSON. Enforcement runs through PATH
shims (process rules), a tree-sitter lint pass (source rules), dependency
graph validation (deterministic architecture rules), and provider-backed
judgment (semantic rules, WARN-only).
"""

from .model import (
    Constraint,
    Domain,
    EnforcementLevel,
    compute_constraint_id,
    make_constraint,
)
from .store import CheckStore, load_store, merge_incremental, save_store

__version__ = "0.1.0"

__all__ = [
    "Constraint",
    "Domain",
    "EnforcementLevel",
    "CheckStore",
    "compute_constraint_id",
    "make_constraint",
    "load_store",
    "merge_incremental",
    "save_store",
    "__version__",
]
