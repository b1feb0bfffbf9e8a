"""Declarative field-to-triple mapping with deterministic IRI minting.

A rule matches a record field by label and emits triple templates whose
slots are bound per record:

``$object``                     the record's object node (role ``object``)
``$value``                      the field value as a literal
``node:<role>:<class>``         an intermediate node, typed with ``class``
``term:<class>[:<text>]``       a vocabulary node named after its text
                                (the field value when ``text`` is omitted)
``const:<iri>``                 a fixed IRI
``lit:<text>[@<lang>]``         a fixed literal

A node role used by several rules is shared by the whole record (one
production event serves the date, technique and place rules). A role used
by a single rule is scoped to the field occurrence, so a repeated label
gets its own intermediate nodes.

Fields no rule claims become an observation note: an S4 Observation that
observed the object, typed by the field label and carrying the value.
"""
from __future__ import annotations

import functools
import hashlib
import json
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Union
from urllib.parse import quote

from .errors import Problem, RuleError
from .ontology import Ontology, default_ontology
from .records import Record, normalize_value
from .store.graph import Graph
from .terms import RDF_TYPE, RDFS_LABEL, IRI, Literal, Term, Triple, is_absolute_iri, is_lang_tag

HASH_ALGORITHM = "blake2b-128"
OBJECT_ROLE = "object"
OBSERVATION_ROLE = "observation"
_RESERVED_ROLES = {OBJECT_ROLE, OBSERVATION_ROLE}


@dataclass(frozen=True)
class MintContext:
    base_namespace: str
    institution: str
    record_id: str

    def __post_init__(self) -> None:
        if not (self.base_namespace and self.institution and self.record_id):
            raise ValueError("MintContext fields must all be non-empty")
        if not is_absolute_iri(self.base_namespace):
            raise ValueError(f"base namespace is not an absolute IRI: {self.base_namespace!r}")

    @classmethod
    def for_record(cls, base_namespace: str, rec: Record) -> MintContext:
        return cls(base_namespace, rec.institution, rec.record_id)


def mint_iri(ctx: MintContext, role: str, discriminator: str = "") -> IRI:
    """Stable IRI for a node of ``role`` within the record identified by ``ctx``."""
    if not role:
        raise ValueError("role must be non-empty")
    key = "\x1f".join((ctx.institution, ctx.record_id, role, discriminator))
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=16).hexdigest()
    return IRI(f"{ctx.base_namespace}{role}/{digest}")


def fold_text(text: str) -> str:
    """Matching key: compatibility-decomposed, diacritics stripped, case-folded."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return " ".join(stripped.casefold().split())


@functools.lru_cache(maxsize=65536)
def slug(text: str) -> str:
    folded = fold_text(text)
    if not folded:
        # text made only of marks folds away; keep it verbatim rather than lose it
        folded = normalize_value(text)
    return quote("-".join(folded.split()), safe="-._~")


def term_iri(base_namespace: str, class_id: str, text: str) -> IRI:
    s = slug(text)
    if not s:
        raise ValueError("vocabulary term text is empty")
    return IRI(f"{base_namespace}vocab/{class_id}/{s}")


def label_key(label: str) -> str:
    # catalog labels often carry a trailing colon ("N° d'inventaire:")
    return normalize_value(label).casefold().rstrip(" :")


# -- slots and templates -----------------------------------------------------

@dataclass(frozen=True)
class ObjectSlot:
    def __str__(self) -> str:
        return "$object"


@dataclass(frozen=True)
class ValueSlot:
    def __str__(self) -> str:
        return "$value"


@dataclass(frozen=True)
class NodeSlot:
    role: str
    class_id: str

    def __str__(self) -> str:
        return f"node:{self.role}:{self.class_id}"


@dataclass(frozen=True)
class TermSlot:
    class_id: str
    text: str | None = None

    def __str__(self) -> str:
        return f"term:{self.class_id}" + (f":{self.text}" if self.text is not None else "")


@dataclass(frozen=True)
class ConstSlot:
    term: Term

    def __str__(self) -> str:
        if isinstance(self.term, Literal):
            return f"lit:{self.term.lexical}" + (f"@{self.term.lang}" if self.term.lang else "")
        return f"const:{self.term}"


Slot = Union[ObjectSlot, ValueSlot, NodeSlot, TermSlot, ConstSlot]


@dataclass(frozen=True)
class TripleTemplate:
    subject: Slot
    predicate: str
    object: Slot
    predicate_iri: IRI


@dataclass(frozen=True)
class MappingRule:
    label: str
    emit: tuple[TripleTemplate, ...]
    institution: str | None = None
    language: str | None = None

    @property
    def key(self) -> str:
        return label_key(self.label)

    def roles(self) -> dict[str, str]:
        out = {}
        for t in self.emit:
            for slot in (t.subject, t.object):
                if isinstance(slot, NodeSlot):
                    out.setdefault(slot.role, slot.class_id)
        return out


@dataclass
class RuleSet:
    rules: list[MappingRule]
    object_class: str = "E22"
    shared_roles: frozenset[str] = frozenset()
    _by_key: dict[str, list[MappingRule]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        _check_roles(self.rules)
        usage: dict[str, int] = defaultdict(int)
        for r in self.rules:
            for role in r.roles():
                usage[role] += 1
        self.shared_roles = frozenset(role for role, n in usage.items() if n > 1)
        by_key: dict[str, list[MappingRule]] = defaultdict(list)
        for r in self.rules:
            by_key[r.key].append(r)
        self._by_key = dict(by_key)

    def __len__(self) -> int:
        return len(self.rules)

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.rules]

    def lookup(self, label: str, institution: str) -> MappingRule | None:
        """Institution-specific rules win over generic ones; then file order."""
        candidates = self._by_key.get(label_key(label), ())
        for r in candidates:
            if r.institution == institution:
                return r
        for r in candidates:
            if r.institution is None:
                return r
        return None

    def merged(self, *others: RuleSet) -> RuleSet:
        rules = list(self.rules)
        for o in others:
            rules.extend(o.rules)
        return RuleSet(rules, self.object_class)


def _check_roles(rules: Iterable[MappingRule]) -> None:
    seen: dict[str, tuple[str, str]] = {}
    problems = []
    for r in rules:
        for role, cls in r.roles().items():
            if role in seen and seen[role][0] != cls:
                problems.append(Problem(
                    "INCONSISTENT_NODE_ROLE",
                    f"role {role!r} is {seen[role][0]} in rule {seen[role][1]!r} "
                    f"but {cls} in rule {r.label!r}"))
            seen.setdefault(role, (cls, r.label))
    if problems:
        raise RuleError(problems[0].message, code=problems[0].code, problems=problems)


def parse_slot(text: Any, ont: Ontology) -> Slot:
    if not isinstance(text, str) or not text:
        raise ValueError(f"slot must be a non-empty string, got {text!r}")
    if text == "$object":
        return ObjectSlot()
    if text == "$value":
        return ValueSlot()
    kind, _, rest = text.partition(":")
    if kind == "node":
        role, _, cls = rest.partition(":")
        if not role or not cls:
            raise ValueError(f"node slot needs role and class: {text!r}")
        if role in _RESERVED_ROLES:
            raise ValueError(f"role {role!r} is reserved")
        if cls not in ont.classes:
            raise ValueError(f"unknown class {cls!r} in slot {text!r}")
        return NodeSlot(role, cls)
    if kind == "term":
        if rest in ont.classes:
            return TermSlot(rest)
        # class ids may themselves contain a colon (prov:Agent)
        parts = rest.split(":")
        for i in range(1, len(parts)):
            cls = ":".join(parts[:i])
            if cls in ont.classes:
                body = normalize_value(":".join(parts[i:]))
                if not body:
                    raise ValueError(f"empty term text in slot {text!r}")
                return TermSlot(cls, body)
        raise ValueError(f"unknown class in slot {text!r}")
    if kind == "const":
        if not is_absolute_iri(rest):
            raise ValueError(f"const slot needs an absolute IRI: {text!r}")
        return ConstSlot(IRI(rest))
    if kind == "lit":
        lexical, at, lang = rest.rpartition("@")
        if at and is_lang_tag(lang):
            return ConstSlot(Literal(lexical, lang=lang))
        return ConstSlot(Literal(rest))
    raise ValueError(f"unrecognised slot syntax: {text!r}")


def parse_rules(doc: Mapping[str, Any] | str | Path, ont: Ontology | None = None) -> RuleSet:
    """Parse a rule document, reporting every defect found."""
    ont = ont or default_ontology()
    if isinstance(doc, (str, Path)):
        with open(doc, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise RuleError(f"{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, Mapping) or not isinstance(doc.get("rules"), list):
        raise RuleError("rule document needs a 'rules' array")
    institution = doc.get("institution")
    language = doc.get("language")
    object_class = doc.get("objectClass", "E22")
    problems: list[Problem] = []
    if institution is not None and (not isinstance(institution, str) or not institution.strip()):
        problems.append(Problem("MALFORMED_TEMPLATE", "'institution' must be a non-empty string or null"))
    if language is not None and (not isinstance(language, str) or not is_lang_tag(language)):
        problems.append(Problem("MALFORMED_TEMPLATE", f"'language' is not a language tag: {language!r}"))
    if object_class not in ont.classes:
        problems.append(Problem("MALFORMED_TEMPLATE", f"unknown objectClass {object_class!r}"))

    rules: list[MappingRule] = []
    for i, raw in enumerate(doc["rules"]):
        where = f"rules[{i}]"
        if not isinstance(raw, Mapping) or not isinstance(raw.get("label"), str) \
                or not normalize_value(raw["label"]):
            problems.append(Problem("MALFORMED_TEMPLATE", f"{where} needs a non-empty 'label'"))
            continue
        emit_raw = raw.get("emit")
        if not isinstance(emit_raw, list) or not emit_raw:
            problems.append(Problem("MALFORMED_TEMPLATE", f"{where} ({raw['label']}) needs a non-empty 'emit'"))
            continue
        templates = []
        for j, tpl in enumerate(emit_raw):
            at = f"{where}.emit[{j}]"
            if not isinstance(tpl, list) or len(tpl) != 3:
                problems.append(Problem("MALFORMED_TEMPLATE", f"{at} must be [subject, property, object]"))
                continue
            s_txt, p_id, o_txt = tpl
            if not isinstance(p_id, str) or p_id not in ont.properties:
                problems.append(Problem("UNKNOWN_PROPERTY_IN_RULE", f"{at}: undeclared property {p_id!r}"))
                continue
            try:
                s_slot = parse_slot(s_txt, ont)
                o_slot = parse_slot(o_txt, ont)
            except ValueError as exc:
                problems.append(Problem("MALFORMED_TEMPLATE", f"{at}: {exc}"))
                continue
            if isinstance(s_slot, ValueSlot) or (isinstance(s_slot, ConstSlot)
                                                 and isinstance(s_slot.term, Literal)):
                problems.append(Problem("MALFORMED_TEMPLATE", f"{at}: a literal cannot be a subject"))
                continue
            templates.append(TripleTemplate(s_slot, p_id, o_slot, ont.property_iri(p_id)))
        if len(templates) == len(emit_raw):
            rules.append(MappingRule(normalize_value(raw["label"]), tuple(templates),
                                     institution, language))
    if problems:
        raise RuleError("; ".join(str(p) for p in problems), code=problems[0].code, problems=problems)
    return RuleSet(rules, object_class)


def load_rules(paths: Iterable[str | Path], ont: Ontology | None = None) -> RuleSet:
    sets = []
    for p in paths:
        try:
            sets.append(parse_rules(p, ont))
        except RuleError as exc:
            raise RuleError(f"{p}: {exc}", code=exc.code, problems=exc.problems) from exc
    if not sets:
        return RuleSet([])
    return sets[0].merged(*sets[1:])


# -- application -------------------------------------------------------------

@dataclass(frozen=True)
class LogEntry:
    index: int
    label: str
    rule: str | None
    triples: int

    @property
    def fallback(self) -> bool:
        return self.rule is None


@dataclass
class MappingLog:
    record: tuple[str, str]
    entries: list[LogEntry] = field(default_factory=list)

    @property
    def fired(self) -> list[LogEntry]:
        return [e for e in self.entries if not e.fallback]

    @property
    def fallbacks(self) -> list[LogEntry]:
        return [e for e in self.entries if e.fallback]


class _Emitter:
    def __init__(self, g: Graph, ont: Ontology, ctx: MintContext):
        self.g, self.ont, self.ctx = g, ont, ctx
        self.type_iri = {}

    def cls(self, class_id: str) -> IRI:
        iri = self.type_iri.get(class_id)
        if iri is None:
            iri = self.type_iri[class_id] = self.ont.class_iri(class_id)
        return iri

    def node(self, role: str, class_id: str, discriminator: str) -> IRI:
        iri = mint_iri(self.ctx, role, discriminator)
        self.g.insert(Triple(iri, RDF_TYPE, self.cls(class_id)))
        return iri

    def term(self, class_id: str, text: str, lang: str | None) -> IRI:
        iri = term_iri(self.ctx.base_namespace, class_id, text)
        self.g.insert(Triple(iri, RDF_TYPE, self.cls(class_id)))
        self.g.insert(Triple(iri, RDFS_LABEL, Literal(text, lang=lang)))
        return iri


def apply_rules(rules: RuleSet, rec: Record, ctx: MintContext,
                ont: Ontology | None = None) -> tuple[Graph, MappingLog]:
    """Map one record to a graph; unmatched fields fall back to observation notes."""
    ont = ont or default_ontology()
    if (ctx.institution, ctx.record_id) != (rec.institution, rec.record_id):
        raise ValueError("mint context does not match the record identity")
    g = Graph()
    em = _Emitter(g, ont, ctx)
    log = MappingLog((rec.institution, rec.record_id))
    obj = em.node(OBJECT_ROLE, rules.object_class, "")
    occurrences: dict[str, int] = defaultdict(int)

    for index, fld in enumerate(rec.fields):
        before = len(g)
        rule = rules.lookup(fld.label, rec.institution)
        if rule is None:
            _observation_note(em, obj, index, fld.label, fld.value)
            log.entries.append(LogEntry(index, fld.label, None, len(g) - before))
            continue
        k = occurrences[rule.key]
        occurrences[rule.key] += 1

        def bind(slot: Slot) -> Term:
            if isinstance(slot, ObjectSlot):
                return obj
            if isinstance(slot, ValueSlot):
                return Literal(fld.value, lang=rule.language)
            if isinstance(slot, NodeSlot):
                disc = "" if slot.role in rules.shared_roles or k == 0 else str(k)
                return em.node(slot.role, slot.class_id, disc)
            if isinstance(slot, TermSlot):
                return em.term(slot.class_id, slot.text if slot.text is not None else fld.value,
                               rule.language)
            return slot.term

        for tpl in rule.emit:
            g.insert(Triple(bind(tpl.subject), tpl.predicate_iri, bind(tpl.object)))
        log.entries.append(LogEntry(index, fld.label, rule.label, len(g) - before))
    return g, log


def _observation_note(em: _Emitter, obj: IRI, index: int, label: str, value: str) -> None:
    ont, g = em.ont, em.g
    obs = em.node(OBSERVATION_ROLE, "S4", str(index))
    g.insert(Triple(obs, ont.property_iri("O8"), obj))
    g.insert(Triple(obs, ont.property_iri("P2"), em.term("E55", label, None)))
    g.insert(Triple(obs, ont.property_iri("P3"), Literal(value)))


def map_records(rules: RuleSet, records: Iterable[Record], base_namespace: str,
                ont: Ontology | None = None) -> tuple[Graph, list[MappingLog]]:
    ont = ont or default_ontology()
    out = Graph()
    logs = []
    for rec in records:
        g, log = apply_rules(rules, rec, MintContext.for_record(base_namespace, rec), ont)
        out.update(g.snapshot())
        logs.append(log)
    return out, logs
