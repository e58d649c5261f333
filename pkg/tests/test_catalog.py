"""Model spec file loading and validation."""

from __future__ import annotations

import json

import pytest

from memplan.catalog import load_model_specs, parse_model_specs
from memplan.errors import ModelNotFoundError, ParseError


GOOD_DOC = {
    "schema_version": 1,
    "models": [
        {
            "name": "tiny",
            "n_layers": 2,
            "n_kv_heads": 2,
            "d_head": 8,
            "n_params_quantizable": 1000,
            "n_params_unquantizable": 10,
        }
    ],
}


def test_bundled_fixture_has_six_models(models):
    assert models.names() == (
        "Qwen3-0.6B",
        "Qwen3-1.7B",
        "Qwen3-4B",
        "Qwen3-8B",
        "Qwen3-14B",
        "Qwen3-32B",
    )
    for spec in models:
        assert spec.native_precision_bits == 16
        assert spec.note  # provenance documented per fixture


def test_parse_good_doc():
    catalog = parse_model_specs(json.dumps(GOOD_DOC))
    assert len(catalog) == 1
    assert catalog.get("tiny").d_head == 8


def test_load_from_path(tmp_path):
    path = tmp_path / "specs.json"
    path.write_text(json.dumps(GOOD_DOC))
    assert load_model_specs(path).names() == ("tiny",)


def test_unknown_model_lookup(models):
    with pytest.raises(ModelNotFoundError) as exc:
        models.get("Qwen3-700B")
    assert "Qwen3-700B" in str(exc.value)


def test_rejects_bad_json():
    with pytest.raises(ParseError):
        parse_model_specs("{nope")


def test_rejects_wrong_schema_version():
    doc = dict(GOOD_DOC, schema_version=99)
    with pytest.raises(ParseError) as exc:
        parse_model_specs(json.dumps(doc))
    assert exc.value.field == "schema_version"


def test_rejects_missing_field():
    entry = dict(GOOD_DOC["models"][0])
    del entry["d_head"]
    with pytest.raises(ParseError) as exc:
        parse_model_specs(json.dumps({"schema_version": 1, "models": [entry]}))
    assert exc.value.field == "d_head"


def test_rejects_unknown_field():
    entry = dict(GOOD_DOC["models"][0], flux_capacitance=3)
    with pytest.raises(ParseError) as exc:
        parse_model_specs(json.dumps({"schema_version": 1, "models": [entry]}))
    assert "flux_capacitance" in str(exc.value)


def test_rejects_invalid_counts():
    entry = dict(GOOD_DOC["models"][0], n_layers=0)
    with pytest.raises(ParseError):
        parse_model_specs(json.dumps({"schema_version": 1, "models": [entry]}))


def test_rejects_duplicate_names():
    doc = {"schema_version": 1, "models": [GOOD_DOC["models"][0], GOOD_DOC["models"][0]]}
    with pytest.raises(Exception):
        parse_model_specs(json.dumps(doc))


def test_empty_model_list_is_valid():
    assert len(parse_model_specs(json.dumps({"schema_version": 1, "models": []}))) == 0
