from collections import Counter

import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from cardgauge.errors import (
    AliasCollision,
    DepthExceeded,
    DuplicateId,
    ModuleCountViolation,
    SchemaError,
    UnknownModule,
)
from cardgauge.taxonomy import (
    ResolutionKind,
    default_taxonomy_text,
    dump_taxonomy,
    fold_name,
    load_taxonomy,
    module_parameters,
    resolve_field,
)

from conftest import taxonomy_text

EIGHT = {f"m{i}": [f"m{i}_a"] for i in range(1, 9)}


def test_default_taxonomy_shape(default_taxonomy):
    assert len(default_taxonomy.modules) == 8
    assert [m.display_name for m in default_taxonomy.modules] == [
        "Model Details", "Model Use", "Data", "Training", "Performance & Limitations",
        "Feedback", "Broader Implications", "More Info",
    ]
    assert [m.ordinal for m in default_taxonomy.modules] == list(range(1, 9))
    # leaf count equals what the file declares
    raw = yaml.safe_load(default_taxonomy_text())

    def count(nodes):
        return sum(count(n["children"]) if "children" in n else 1 for n in nodes)

    assert len(default_taxonomy) == sum(count(m["children"]) for m in raw["modules"])


def test_partition_property(default_taxonomy):
    seen = Counter()
    for mid in default_taxonomy.module_ids:
        params = module_parameters(default_taxonomy, mid)
        assert params
        assert all(p.module_id == mid for p in params)
        seen.update(p.id for p in params)
    assert set(seen) == set(default_taxonomy.parameter_ids)
    assert max(seen.values()) == 1


def test_alias_compound_and_irrelevant_resolution(default_taxonomy):
    r = resolve_field("model_title", default_taxonomy)
    assert r.kind is ResolutionKind.ATOMIC and r.parameter_ids == ("model_name",)
    assert resolve_field("display_name", default_taxonomy).parameter_ids == ("model_name",)
    r = resolve_field("citation_info", default_taxonomy)
    assert r.kind is ResolutionKind.COMPOUND
    assert r.parameter_ids == ("citation_authors", "citation_title", "citation_year")
    assert resolve_field("star_count", default_taxonomy).kind is ResolutionKind.IRRELEVANT
    assert resolve_field("ci_badge", default_taxonomy).kind is ResolutionKind.IRRELEVANT
    assert resolve_field("favourite_colour", default_taxonomy).kind is ResolutionKind.UNKNOWN


@pytest.mark.parametrize("raw", ["Model Title", "MODEL-TITLE", " model__title ", "model - title"])
def test_name_folding(default_taxonomy, raw):
    assert resolve_field(raw, default_taxonomy).parameter_ids == ("model_name",)


def test_resolution_idempotent_on_ids(default_taxonomy):
    for pid in default_taxonomy.parameter_ids:
        r = resolve_field(pid, default_taxonomy)
        assert r.kind is ResolutionKind.ATOMIC and r.parameter_ids == (pid,)


def test_empty_raw_name_rejected(default_taxonomy):
    with pytest.raises(ValueError):
        resolve_field("  ", default_taxonomy)


def test_module_parameters_file_order():
    text = """
version: "1"
modules:
  - id: data
    name: Data
    children:
      - id: zeta
      - name: Group
        children:
          - id: alpha
      - id: mid
  - id: other
    name: Other
    children:
      - id: other_a
"""
    tax = load_taxonomy(text, strict_modules=False)
    # depth-first, file order: zeta, then the group's alpha, then mid
    assert [p.id for p in module_parameters(tax, "data")] == ["zeta", "alpha", "mid"]
    assert module_parameters(tax, "data")[1].path == ("Group",)
    with pytest.raises(UnknownModule):
        module_parameters(tax, "nope")


def test_alias_collision():
    text = taxonomy_text({"m1": ["license_type", "data_license"]})
    doc = yaml.safe_load(text)
    doc["modules"][0]["children"][0]["aliases"] = ["license"]
    doc["modules"][0]["children"][1]["aliases"] = ["License"]
    with pytest.raises(AliasCollision) as exc:
        load_taxonomy(yaml.safe_dump(doc), strict_modules=False)
    assert exc.value.location == "modules[0]"


def test_alias_clashing_with_compound_key_is_rejected():
    text = taxonomy_text({"m1": ["a", "b"]}, compounds=[{"name": "a_and_b", "targets": ["a", "b"]}])
    doc = yaml.safe_load(text)
    doc["modules"][0]["children"][0]["aliases"] = ["a and b"]
    with pytest.raises(AliasCollision):
        load_taxonomy(yaml.safe_dump(doc), strict_modules=False)


def test_alias_restating_own_id_is_allowed():
    doc = yaml.safe_load(taxonomy_text({"m1": ["model_name"]}))
    doc["modules"][0]["children"][0]["aliases"] = ["Model Name", "model-name"]
    load_taxonomy(yaml.safe_dump(doc), strict_modules=False)


def test_module_count_strict():
    nine = {f"m{i}": [f"m{i}_a"] for i in range(1, 10)}
    with pytest.raises(ModuleCountViolation):
        load_taxonomy(taxonomy_text(nine))
    assert len(load_taxonomy(taxonomy_text(nine), strict_modules=False).modules) == 9
    with pytest.raises(ModuleCountViolation):
        load_taxonomy(taxonomy_text({"m1": ["a"]}))
    assert len(load_taxonomy(taxonomy_text(EIGHT)).modules) == 8


def test_duplicate_id():
    with pytest.raises(DuplicateId):
        load_taxonomy(taxonomy_text({"m1": ["a"], "m2": ["a"]}), strict_modules=False)
    with pytest.raises(DuplicateId):
        load_taxonomy(taxonomy_text({"m1": ["m2"], "m2": ["b"]}), strict_modules=False)


def test_depth_limit():
    def nested(depth):
        node = {"id": "leaf"}
        for i in range(depth):
            node = {"name": f"g{i}", "children": [node]}
        return {"version": "1", "modules": [{"id": "m", "name": "M", "children": [node]}]}

    tax = load_taxonomy(yaml.safe_dump(nested(4)), strict_modules=False)
    assert tax.parameter("leaf").level == 5
    with pytest.raises(DepthExceeded):
        load_taxonomy(yaml.safe_dump(nested(5)), strict_modules=False)


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d.pop("version"), "version"),
    (lambda d: d.update(modules=[]), "modules"),
    (lambda d: d["modules"][0]["children"][0].update(id="Bad Id"), "snake-case"),
    (lambda d: d.update(compounds=[{"name": "x", "targets": ["missing"]}]), "not a parameter"),
    (lambda d: d.update(irrelevant="star_count"), "irrelevant"),
    (lambda d: d["modules"][0]["children"][0].update(evidence_expected="yes"), "boolean"),
    (lambda d: d.update(extra=1), "unexpected"),
])
def test_schema_errors(mutate, message):
    doc = yaml.safe_load(taxonomy_text({"m1": ["a", "b"]}))
    mutate(doc)
    with pytest.raises(SchemaError, match=message):
        load_taxonomy(yaml.safe_dump(doc), strict_modules=False)


def test_malformed_yaml_has_line():
    with pytest.raises(SchemaError) as exc:
        load_taxonomy("version: '1'\nmodules: [\n  - id: x\n")
    assert exc.value.location and exc.value.location.startswith("line")


def test_load_is_deterministic_and_dump_round_trips(default_taxonomy):
    text = default_taxonomy_text()
    assert load_taxonomy(text) == load_taxonomy(text)
    assert load_taxonomy(dump_taxonomy(default_taxonomy)) == default_taxonomy


@given(st.text(alphabet=" _-aBc", min_size=1, max_size=12))
def test_fold_name_is_idempotent(raw):
    assert fold_name(fold_name(raw)) == fold_name(raw)
