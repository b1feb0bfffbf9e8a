"""Catalog records in the intermediate label/value JSON format."""
from __future__ import annotations

import json
import logging
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import Problem, RecordError

logger = logging.getLogger(__name__)


def normalize_value(raw: str) -> str:
    """NFC-normalise, trim, and collapse internal whitespace runs to one space.

    Case and diacritics are left untouched.
    """
    return " ".join(unicodedata.normalize("NFC", raw).split())


@dataclass(frozen=True)
class Field:
    label: str
    value: str

    def __post_init__(self) -> None:
        if not self.label.strip():
            raise ValueError("field label must not be blank")


@dataclass(frozen=True)
class Record:
    institution: str
    record_id: str
    fields: tuple[Field, ...] = ()

    def __post_init__(self) -> None:
        if not self.institution or not self.record_id:
            raise ValueError("record needs a non-empty institution and record id")
        object.__setattr__(self, "fields", tuple(self.fields))

    def values(self, label: str) -> list[str]:
        return [f.value for f in self.fields if f.label == label]

    def to_document(self) -> dict[str, Any]:
        return {
            "institution": self.institution,
            "id": self.record_id,
            "fields": [{"label": f.label, "value": f.value} for f in self.fields],
        }


def parse_record(doc: Mapping[str, Any], default_institution: str | None = None) -> Record:
    """Parse one record document.

    Raises :class:`RecordError` with code ``MALFORMED_DOCUMENT`` or
    ``MISSING_IDENTITY``. Fields whose value normalises to the empty string
    are dropped with a logged warning.
    """
    if not isinstance(doc, Mapping):
        raise RecordError("record document must be a JSON object")
    raw_fields = doc.get("fields")
    if not isinstance(raw_fields, list):
        raise RecordError("record document has no 'fields' array")

    problems = []
    for key in ("institution", "id"):
        if key in doc and doc[key] is not None and not isinstance(doc[key], str):
            problems.append(Problem("MALFORMED_DOCUMENT", f"'{key}' must be a string"))
    if problems:
        raise RecordError(problems[0].message, problems=problems)

    institution = normalize_value(doc.get("institution") or "") or normalize_value(default_institution or "")
    record_id = normalize_value(doc.get("id") or "")
    if not institution or not record_id:
        missing = [k for k, v in (("institution", institution), ("id", record_id)) if not v]
        raise RecordError(f"record identity not resolvable: missing {', '.join(missing)}",
                          code="MISSING_IDENTITY")

    fields: list[Field] = []
    for i, entry in enumerate(raw_fields):
        if not isinstance(entry, Mapping) or not isinstance(entry.get("label"), str) \
                or not isinstance(entry.get("value"), str):
            raise RecordError(f"fields[{i}] of record {record_id!r} needs string 'label' and 'value'")
        label = normalize_value(entry["label"])
        if not label:
            raise RecordError(f"fields[{i}] of record {record_id!r} has a blank label")
        value = normalize_value(entry["value"])
        if not value:
            logger.warning("record %s: dropping empty field %r", record_id, label)
            continue
        fields.append(Field(label, value))
    if not fields:
        logger.warning("record %s has no fields", record_id)
    return Record(institution, record_id, tuple(fields))


def parse_records(doc: Any, default_institution: str | None = None) -> list[Record]:
    """Accept a single record document or a JSON array of them."""
    if isinstance(doc, list):
        out = []
        for i, item in enumerate(doc):
            try:
                out.append(parse_record(item, default_institution))
            except RecordError as exc:
                raise RecordError(f"record #{i}: {exc}", code=exc.code) from exc
        return out
    return [parse_record(doc, default_institution)]


def load_records(path: str | Path, default_institution: str | None = None) -> list[Record]:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RecordError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return parse_records(doc, default_institution)
    except RecordError as exc:
        raise RecordError(f"{path}: {exc}", code=exc.code) from exc
