import json
import logging

import pytest
from hypothesis import given
from hypothesis import strategies as st

from heritage_forge.errors import RecordError
from heritage_forge.records import Field, Record, load_records, normalize_value, parse_record, parse_records
from tests.conftest import DATA


def test_versailles_document(versailles_record):
    assert len(versailles_record.fields) == 5
    assert versailles_record.fields[0] == Field("title", "lé de tenture")
    assert versailles_record.institution == "versailles"


def test_empty_fields_warn(caplog):
    with caplog.at_level(logging.WARNING):
        rec = parse_record({"institution": "x", "id": "1", "fields": []})
    assert rec.fields == ()
    assert "no fields" in caplog.text


def test_empty_value_dropped_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        rec = parse_record({"institution": "x", "id": "1",
                            "fields": [{"label": "a", "value": "  "}, {"label": "b", "value": "v"}]})
    assert [f.label for f in rec.fields] == ["b"]
    assert "dropping empty field" in caplog.text


def test_whitespace_normalised():
    rec = parse_record({"institution": "x", "id": "1",
                        "fields": [{"label": "Date", "value": "  XVIIIe   siècle "}]})
    assert rec.fields[0].value == "XVIIIe siècle"


@pytest.mark.parametrize("raw, expected", [("VMB 14527", "VMB 14527"), ("", ""), ("a\t\tb\n", "a b")])
def test_normalize_value_examples(raw, expected):
    assert normalize_value(raw) == expected


def test_normalize_is_nfc_and_keeps_case():
    assert normalize_value("Lé") == "Lé"


@given(st.text())
def test_normalize_idempotent(s):
    assert normalize_value(normalize_value(s)) == normalize_value(s)


def test_missing_fields_array():
    with pytest.raises(RecordError) as exc:
        parse_record({"institution": "x", "id": "1"})
    assert exc.value.code == "MALFORMED_DOCUMENT"


def test_non_string_value():
    with pytest.raises(RecordError) as exc:
        parse_record({"institution": "x", "id": "1", "fields": [{"label": "a", "value": 3}]})
    assert exc.value.code == "MALFORMED_DOCUMENT"


def test_missing_identity():
    with pytest.raises(RecordError) as exc:
        parse_record({"id": "1", "fields": []})
    assert exc.value.code == "MISSING_IDENTITY"


def test_default_institution_fills_gap():
    assert parse_record({"id": "1", "fields": []}, default_institution="mad").institution == "mad"


def test_duplicate_labels_preserved():
    rec = parse_record({"institution": "x", "id": "1", "fields": [
        {"label": "Matière", "value": "soie"}, {"label": "Matière", "value": "or"}]})
    assert rec.values("Matière") == ["soie", "or"]


def test_array_document_and_file_errors(tmp_path):
    p = tmp_path / "recs.json"
    p.write_text(json.dumps([{"institution": "x", "id": "1", "fields": []},
                             {"institution": "x", "id": "2", "fields": []}]))
    assert [r.record_id for r in load_records(p)] == ["1", "2"]
    bad = tmp_path / "bad.json"
    bad.write_text('{"fields": [\n  oops]}')
    with pytest.raises(RecordError) as exc:
        load_records(bad)
    assert str(exc.value).startswith(f"{bad}:2:")


def test_array_error_names_entry():
    with pytest.raises(RecordError, match="record #1"):
        parse_records([{"institution": "x", "id": "1", "fields": []}, {"fields": []}])


labels = st.text(min_size=1).filter(lambda s: normalize_value(s))
values = st.text().filter(lambda s: normalize_value(s))


@given(st.lists(st.tuples(labels, values), max_size=8))
def test_document_round_trip(pairs):
    doc = {"institution": "inst", "id": "rec-1", "fields": [{"label": l, "value": v} for l, v in pairs]}
    rec = parse_record(doc)
    assert parse_record(rec.to_document()) == rec
