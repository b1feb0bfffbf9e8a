"""PROV-DM annotation of classifier predictions.

Each prediction becomes a directly asserted domain triple plus a reified
statement node that carries the provenance: the statement was generated by
an analysis activity, which used an image or a text and was associated with
a software agent. The confidence score hangs off the statement as an E54
Dimension.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal
from pathlib import Path
from typing import Any, Iterable, Mapping

from .enrich import Outcome, Thesaurus, match_concept
from .errors import PredictionError, Problem, RecordNotFoundError
from .mapping import OBJECT_ROLE, MintContext, mint_iri, slug, term_iri
from .ontology import Ontology, default_ontology
from .store.graph import Graph
from .terms import (
    RDF_OBJECT, RDF_PREDICATE, RDF_STATEMENT, RDF_SUBJECT, RDF_TYPE, RDFS_LABEL,
    XSD_DATETIME, XSD_DECIMAL, IRI, Literal, Triple, is_absolute_iri,
)

logger = logging.getLogger(__name__)

CONFIDENCE_PLACES = 4
SOURCE_KINDS = ("image", "text")
REIFICATION = "rdf:Statement reification, domain triple asserted in the default graph"


@dataclass(frozen=True)
class Target:
    """Where a predicted value lands in the graph."""
    subject_role: str       # "object" or "production"
    property_id: str
    class_id: str           # class of the value node
    facets: frozenset[str]  # thesaurus facets consulted; empty means no lookup


TARGETS: dict[str, Target] = {
    "technique": Target("production", "P32", "E55", frozenset({"technique", "weave"})),
    "material": Target("object", "P45", "E57", frozenset({"material"})),
    "place": Target("production", "P7", "E53", frozenset()),
    "time": Target("production", "P4", "E52", frozenset()),
    "depiction": Target("object", "P62", "T34", frozenset({"motif"})),
}


@dataclass(frozen=True)
class Prediction:
    institution: str
    record_id: str
    target_property: str
    value: str
    confidence: float
    source_kind: str
    source_ref: str
    agent_id: str
    at_time: datetime
    agent_doc: IRI | None = None

    def __post_init__(self) -> None:
        if self.target_property not in TARGETS:
            raise ValueError(f"unknown target property {self.target_property!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.source_kind!r}")
        if self.target_property == "depiction" and self.source_kind != "image":
            raise ValueError("depiction can only be predicted from an image")
        if self.at_time.tzinfo is None:
            raise ValueError("prediction timestamp must be timezone-aware")

    @property
    def record_ref(self) -> tuple[str, str]:
        return self.institution, self.record_id


def format_confidence(c: float) -> str:
    """Decimal lexical form at four places, trailing zeros trimmed ("0.71", "1.0")."""
    text = f"{round(c, CONFIDENCE_PLACES):.{CONFIDENCE_PLACES}f}".rstrip("0")
    return text + "0" if text.endswith(".") else text


def parse_confidence(lexical: str) -> float:
    return float(Decimal(lexical))


def format_timestamp(at: datetime) -> str:
    at = at.astimezone(timezone.utc)
    spec = "microseconds" if at.microsecond else "seconds"
    return at.replace(tzinfo=None).isoformat(timespec=spec) + "Z"


def parse_timestamp(text: str) -> datetime:
    """ISO 8601 with an explicit offset or ``Z``; returned in UTC."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    at = datetime.fromisoformat(raw)
    if at.tzinfo is None:
        raise ValueError("timestamp has no UTC offset")
    return at.astimezone(timezone.utc)


def _parse_entry(i: int, e: Any) -> tuple[Prediction | None, list[Problem]]:
    where = f"predictions[{i}]"

    def bad(code: str, msg: str) -> None:
        problems.append(Problem(code, f"{where}: {msg}"))

    problems: list[Problem] = []
    if not isinstance(e, Mapping):
        return None, [Problem("MALFORMED_DOCUMENT", f"{where} is not an object")]
    for key in ("institution", "record_id", "value", "agent"):
        if not isinstance(e.get(key), str) or not e[key].strip():
            bad("MALFORMED_DOCUMENT", f"'{key}' must be a non-empty string")
    prop = e.get("property")
    if prop not in TARGETS:
        bad("UNKNOWN_TARGET_PROPERTY", f"property {prop!r} is not one of {sorted(TARGETS)}")
    conf = e.get("confidence")
    if isinstance(conf, bool) or not isinstance(conf, (int, float)) or not math.isfinite(conf):
        bad("MALFORMED_DOCUMENT", f"confidence {conf!r} is not a number")
    elif not 0 <= conf <= 1:
        bad("CONFIDENCE_OUT_OF_RANGE", f"confidence {conf} outside [0, 1]")
    src = e.get("source")
    kind = ref = None
    if not isinstance(src, Mapping) or src.get("kind") not in SOURCE_KINDS \
            or not isinstance(src.get("ref"), str) or not src["ref"].strip():
        bad("MALFORMED_DOCUMENT", "'source' must be {\"kind\": \"image\"|\"text\", \"ref\": string}")
    else:
        kind, ref = src["kind"], src["ref"]
        if kind == "image" and not is_absolute_iri(ref):
            bad("MALFORMED_DOCUMENT", f"image source ref {ref!r} is not an absolute IRI")
        if prop == "depiction" and kind != "image":
            bad("UNKNOWN_TARGET_PROPERTY", "depiction is only predicted from image sources")
    doc = e.get("agent_doc")
    if doc is not None and (not isinstance(doc, str) or not is_absolute_iri(doc)):
        bad("MALFORMED_DOCUMENT", f"agent_doc {doc!r} is not an absolute IRI")
    at = None
    if not isinstance(e.get("at"), str):
        bad("MALFORMED_TIMESTAMP", "'at' must be an ISO 8601 string")
    else:
        try:
            at = parse_timestamp(e["at"])
        except ValueError as exc:
            bad("MALFORMED_TIMESTAMP", f"{e['at']!r}: {exc}")
    if problems:
        return None, problems
    return Prediction(
        institution=e["institution"].strip(), record_id=e["record_id"].strip(),
        target_property=prop, value=" ".join(e["value"].split()), confidence=float(conf),
        source_kind=kind, source_ref=ref, agent_id=e["agent"].strip(), at_time=at,
        agent_doc=IRI(doc) if doc else None,
    ), []


def parse_predictions(doc: Any) -> list[Prediction]:
    """Validate a prediction document (JSON array, or a path to one).

    Every rejected entry is reported; the error's ``problems`` list is
    ordered by entry.
    """
    if isinstance(doc, (str, Path)):
        with open(doc, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise PredictionError(f"{doc}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, list):
        raise PredictionError("prediction document must be a JSON array")
    out, problems = [], []
    for i, entry in enumerate(doc):
        p, errs = _parse_entry(i, entry)
        problems.extend(errs)
        if p is not None:
            out.append(p)
    if problems:
        raise PredictionError(f"{len(problems)} rejected prediction field(s): {problems[0].message}",
                              code=problems[0].code, problems=problems)
    return out


@dataclass(frozen=True)
class ProvSubgraph:
    activity: IRI
    statement: IRI
    dimension: IRI
    agent: IRI
    asserted: Triple
    triples: Graph


class _Builder:
    def __init__(self, ont: Ontology, ctx: MintContext, g: Graph):
        self.ont, self.ctx, self.base, self.g = ont, ctx, ctx.base_namespace, g
        self.out = Graph()

    def p(self, prop_id: str) -> IRI:
        return self.ont.property_iri(prop_id)

    def add(self, s: IRI, prop_id: str, o) -> None:
        pred = RDF_TYPE if prop_id == "a" else self.p(prop_id)
        if prop_id == "a":
            o = self.ont.class_iri(o)
        self.out.add(Triple(s, pred, o))

    def term(self, class_id: str, text: str) -> IRI:
        iri = term_iri(self.base, class_id, text)
        self.add(iri, "a", class_id)
        self.out.add(Triple(iri, RDFS_LABEL, Literal(text)))
        return iri

    def production(self, obj: IRI) -> IRI:
        node = mint_iri(self.ctx, "production")
        if (node, RDF_TYPE, self.ont.class_iri("E12")) not in self.g:
            self.add(node, "a", "E12")
            self.add(node, "P108", obj)
        return node

    def value(self, target: Target, p: Prediction, th: Thesaurus | None) -> IRI:
        if is_absolute_iri(p.value):
            node = IRI(p.value)
        else:
            result = match_concept(th, p.value, target.facets) if th is not None and target.facets else None
            if result is not None and result.outcome is Outcome.MATCHED:
                node = result.concept.iri
            else:
                if result is not None and result.outcome is Outcome.AMBIGUOUS:
                    logger.warning("ambiguous predicted value %r; minting a term", p.value)
                return self.term(target.class_id, p.value)
        if not self.g.types_of(node):
            self.add(node, "a", target.class_id)
        return node


def annotate(g: Graph, p: Prediction, ctx: MintContext, th: Thesaurus | None = None,
             ont: Ontology | None = None) -> ProvSubgraph:
    """Build the provenance fragment for one prediction; ``g`` is not modified."""
    ont = ont or default_ontology()
    if (ctx.institution, ctx.record_id) != p.record_ref:
        raise ValueError("mint context does not match the prediction's record")
    obj = mint_iri(ctx, OBJECT_ROLE)
    if not g.types_of(obj):
        raise RecordNotFoundError(f"no object node for record {p.institution}/{p.record_id} in graph")
    b = _Builder(ont, ctx, g)
    target = TARGETS[p.target_property]

    subject = obj if target.subject_role == "object" else b.production(obj)
    asserted = Triple(subject, b.p(target.property_id), b.value(target, p, th))
    b.out.add(asserted)

    at = format_timestamp(p.at_time)
    activity = mint_iri(ctx, "activity", "\x1e".join((p.source_kind, p.agent_id, at)))
    b.add(activity, "a", "prov:Activity")
    b.add(activity, "P2", b.term("E55", f"{p.source_kind} analysis"))
    b.add(activity, "prov:atTime", Literal(at, datatype=XSD_DATETIME))
    if p.source_kind == "image":
        used = IRI(p.source_ref)
        b.add(used, "a", "E38")
    else:
        used = mint_iri(ctx, "text_input", p.source_ref)
        b.add(used, "a", "E62")
        b.out.add(Triple(used, RDFS_LABEL, Literal(p.source_ref)))
    b.add(activity, "prov:used", used)

    agent = IRI(f"{ctx.base_namespace}agent/{slug(p.agent_id)}")
    b.add(agent, "a", "prov:Agent")
    b.add(agent, "P2", b.term("E55", "software agent"))
    b.out.add(Triple(agent, RDFS_LABEL, Literal(p.agent_id)))
    b.add(activity, "prov:wasAssociatedWith", agent)
    if p.agent_doc is not None:
        b.add(p.agent_doc, "a", "E31")
        b.add(p.agent_doc, "P70", agent)

    s, pred, o = asserted
    statement = mint_iri(ctx, "statement", "\x1e".join((activity, s, pred, o)))
    b.out.add(Triple(statement, RDF_TYPE, RDF_STATEMENT))
    b.out.add(Triple(statement, RDF_SUBJECT, s))
    b.out.add(Triple(statement, RDF_PREDICATE, pred))
    b.out.add(Triple(statement, RDF_OBJECT, o))
    b.add(statement, "prov:wasGeneratedBy", activity)

    dimension = mint_iri(ctx, "confidence", statement)
    b.add(statement, "P43", dimension)
    b.add(dimension, "a", "E54")
    b.add(dimension, "P90", Literal(format_confidence(p.confidence), datatype=XSD_DECIMAL))
    b.add(dimension, "P2", b.term("E55", "confidence score"))
    return ProvSubgraph(activity, statement, dimension, agent, asserted, b.out)


def annotate_all(g: Graph, predictions: Iterable[Prediction], base_namespace: str,
                 th: Thesaurus | None = None, ont: Ontology | None = None) -> tuple[Graph, list[ProvSubgraph]]:
    """Return a copy of ``g`` with every prediction's fragment merged in."""
    out = g.copy()
    frags = []
    for p in predictions:
        ctx = MintContext(base_namespace, p.institution, p.record_id)
        frag = annotate(out, p, ctx, th, ont)
        out.update(frag.triples)
        frags.append(frag)
    return out, frags
