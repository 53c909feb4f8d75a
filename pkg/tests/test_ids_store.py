"""Content-addressed constraint IDs and the JSON check store."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import random
import string

import pytest

from contextcov.model import (
    Domain,
    EnforcementLevel,
    NoCyclesRule,
    ProcessRule,
    SemanticRule,
    compute_constraint_id,
    constraint_to_dict,
    make_constraint,
)
from contextcov.store import (
    CheckStore,
    ExtractionCollisionError,
    StoreFormatError,
    StoreNotFoundError,
    UnsupportedVersionError,
    load_store,
    merge_incremental,
    resolve_store_path,
    save_store,
    store_to_json,
)


def oracle_id(header_path: list[str], content: str) -> str:
    digest = hashlib.sha256(
        ("\x1f".join(header_path) + "\x1e" + content).encode("utf-8")
    ).hexdigest()
    return digest[:16]


def make_process(
    header_path: list[str], text: str, tokens: tuple[str, ...] = ("run", "compile")
):
    return make_constraint(
        domain=Domain.PROCESS,
        original_text=text,
        refined_text=text,
        source_file="AGENTS.md",
        header_path=header_path,
        enforcement_level=EnforcementLevel.BLOCK,
        check=ProcessRule(
            binaries=("npm",),
            argv_pattern=tokens,
            action=EnforcementLevel.BLOCK,
            message=text,
        ),
    )


def test_id_matches_independent_hash():
    rng = random.Random(99)
    for _ in range(200):
        depth = rng.randint(0, 4)
        header = [
            "".join(rng.choices(string.printable, k=rng.randint(0, 12)))
            for _ in range(depth)
        ]
        content = "".join(rng.choices(string.printable, k=rng.randint(0, 40)))
        computed = compute_constraint_id(header, content)
        assert computed == oracle_id(header, content)
        assert len(computed) == 16
        assert set(computed) <= set("0123456789abcdef")


def test_id_separators_prevent_boundary_collisions():
    assert compute_constraint_id(["a", "b"], "c") != compute_constraint_id(["a"], "bc")
    assert compute_constraint_id(["ab"], "c") != compute_constraint_id(["a", "b"], "c")
    assert compute_constraint_id([], "ab") != compute_constraint_id(["a"], "b")


def test_id_ignores_refinement_and_domain():
    a = make_process(["Build"], "NEVER use `npm run compile`.")
    b = dataclasses.replace(a, refined_text="Do not invoke the compile script.")
    assert a.id == b.id
    semantic = make_constraint(
        domain=Domain.ARCH_SEMANTIC,
        original_text="NEVER use `npm run compile`.",
        refined_text="anything",
        source_file="AGENTS.md",
        header_path=["Build"],
        enforcement_level=EnforcementLevel.BLOCK,
        check=SemanticRule(principle_text="NEVER use `npm run compile`."),
    )
    assert semantic.id == a.id


def test_semantic_constraints_are_forced_to_warn():
    c = make_constraint(
        domain=Domain.ARCH_SEMANTIC,
        original_text="principle",
        refined_text="principle",
        source_file="AGENTS.md",
        header_path=[],
        enforcement_level=EnforcementLevel.BLOCK,
        check=SemanticRule(principle_text="principle"),
    )
    assert c.enforcement_level is EnforcementLevel.WARN


def test_store_json_shape(tmp_path):
    c = make_process(["Build"], "NEVER use `npm run compile` in the café.")
    store = CheckStore(constraints={c.id: c})
    text = store_to_json(store)
    assert text.endswith("\n")
    assert "café" in text  # ensure_ascii=False keeps the character literal
    payload = json.loads(text)
    assert payload["version"] == 1
    assert list(payload["constraints"]) == [c.id]
    entry = payload["constraints"][c.id]
    assert entry["domain"] == "PROCESS"
    assert list(entry) == sorted(entry)

    path = tmp_path / "sub" / "checks.json"
    save_store(store, path)  # creates the parent directory
    assert path.read_text(encoding="utf-8") == text


def test_store_round_trip(generated_constraints, tmp_path):
    store = CheckStore(constraints=dict(generated_constraints))
    path = tmp_path / "checks.json"
    save_store(store, path)
    loaded = load_store(path)
    assert set(loaded.constraints) == set(store.constraints)
    for cid, c in store.constraints.items():
        assert constraint_to_dict(loaded.constraints[cid]) == constraint_to_dict(c)
        assert loaded.constraints[cid].id == cid


def test_store_key_must_match_id(tmp_path):
    c = make_process(["Build"], "NEVER use `npm run compile`.")
    store = CheckStore(constraints={"0" * 16: c})
    with pytest.raises(StoreFormatError):
        save_store(store, tmp_path / "checks.json")


def test_load_errors(tmp_path):
    with pytest.raises(StoreNotFoundError):
        load_store(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(StoreFormatError):
        load_store(bad)
    versioned = tmp_path / "versioned.json"
    versioned.write_text('{"version": 99, "constraints": {}}')
    with pytest.raises(UnsupportedVersionError):
        load_store(versioned)
    no_version = tmp_path / "no_version.json"
    no_version.write_text('{"constraints": {}}')
    with pytest.raises(StoreFormatError):
        load_store(no_version)


def test_disabled_flag_round_trips(tmp_path):
    c = dataclasses.replace(make_process(["Build"], "NEVER use `npm x`."), disabled=True)
    path = tmp_path / "checks.json"
    save_store(CheckStore(constraints={c.id: c}), path)
    assert json.loads(path.read_text())["constraints"][c.id]["disabled"] is True
    assert load_store(path).constraints[c.id].disabled is True


def test_resolve_store_path_precedence(monkeypatch):
    monkeypatch.delenv("CONTEXTCOV_STORE", raising=False)
    assert str(resolve_store_path(None)) == ".contextcov/checks.json"
    monkeypatch.setenv("CONTEXTCOV_STORE", "/elsewhere/checks.json")
    assert str(resolve_store_path(None)) == "/elsewhere/checks.json"
    assert str(resolve_store_path("explicit.json")) == "explicit.json"


def test_merge_keeps_old_objects_for_retained_ids():
    old_a = make_process(["Build"], "NEVER use `npm run compile`.")
    old_a = dataclasses.replace(old_a, refined_text="refined by an earlier run")
    old_b = make_process(["Build"], "NEVER use `npm run watch`.", tokens=("run", "watch"))
    old = CheckStore(constraints={old_a.id: old_a, old_b.id: old_b})

    fresh_a = make_process(["Build"], "NEVER use `npm run compile`.")
    fresh_c = make_process(["Build"], "NEVER use `npm pack`.", tokens=("pack",))
    merged, changes = merge_incremental(old, [fresh_a, fresh_c])

    assert set(merged.constraints) == {fresh_a.id, fresh_c.id}
    assert merged.constraints[fresh_a.id] is old_a  # retained object, not re-synthesized
    assert merged.constraints[fresh_a.id].refined_text == "refined by an earlier run"
    assert changes.added == [fresh_c.id]
    assert changes.removed == [old_b.id]
    assert changes.retained == [fresh_a.id]


def test_merge_of_empty_extraction_empties_store():
    old_a = make_process(["Build"], "NEVER use `npm run compile`.")
    merged, changes = merge_incremental(CheckStore(constraints={old_a.id: old_a}), [])
    assert merged.constraints == {}
    assert changes.removed == [old_a.id]
    assert changes.added == [] and changes.retained == []


def test_merge_rejects_duplicate_fresh_ids():
    c = make_process(["Build"], "NEVER use `npm run compile`.")
    twin = dataclasses.replace(c)
    with pytest.raises(ExtractionCollisionError):
        merge_incremental(CheckStore(), [c, twin])


def test_save_rejects_invalid_descriptor(tmp_path):
    c = make_constraint(
        domain=Domain.ARCH_DETERMINISTIC,
        original_text="no cycles",
        refined_text="no cycles",
        source_file="AGENTS.md",
        header_path=[],
        enforcement_level=EnforcementLevel.WARN,
        check=NoCyclesRule(scope_glob=""),
    )
    with pytest.raises(StoreFormatError):
        save_store(CheckStore(constraints={c.id: c}), tmp_path / "checks.json")
