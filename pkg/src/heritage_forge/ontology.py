"""Ontology model, loading and graph validation.

The shipped document (``data/ontology.json``) holds the CIDOC CRM subset,
the CRMsci observation terms, the silk-weaving extension and the PROV /
RDF vocabulary the toolkit emits. Users extend it by loading their own
document in the same format.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .errors import OntologyError, Problem, UnknownClassError
from .store.graph import Graph
from .terms import RDF_TYPE, IRI, Literal, Triple, is_absolute_iri, term_key

LITERAL = "@literal"


@dataclass(frozen=True)
class OntologyClass:
    id: str
    iri: IRI
    label: str
    parents: frozenset[str] = frozenset()
    literal: bool = False


@dataclass(frozen=True)
class OntologyProperty:
    id: str
    iri: IRI
    label: str
    domain: str
    range: str
    parents: frozenset[str] = frozenset()


@dataclass(frozen=True, eq=False)
class Ontology:
    classes: Mapping[str, OntologyClass]
    properties: Mapping[str, OntologyProperty]
    namespaces: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_ancestors", _closure({c.id: c.parents for c in self.classes.values()}))
        object.__setattr__(self, "_prop_ancestors",
                           _closure({p.id: p.parents for p in self.properties.values()}))
        object.__setattr__(self, "_class_by_iri", {c.iri: c for c in self.classes.values()})
        object.__setattr__(self, "_prop_by_iri", {p.iri: p for p in self.properties.values()})
        literal = {cid for cid in self.classes
                   if any(self.classes[a].literal for a in self._ancestors[cid])}
        object.__setattr__(self, "_literal_classes", frozenset(literal))
        object.__setattr__(self, "_roots",
                           frozenset(c.id for c in self.classes.values() if not c.parents))

    @property
    def class_iri_map(self) -> dict[str, IRI]:
        return {c.id: c.iri for c in self.classes.values()}

    def class_iri(self, class_id: str) -> IRI:
        try:
            return self.classes[class_id].iri
        except KeyError:
            raise UnknownClassError(f"unknown class {class_id!r}") from None

    def property_iri(self, prop_id: str) -> IRI:
        try:
            return self.properties[prop_id].iri
        except KeyError:
            raise KeyError(f"unknown property {prop_id!r}") from None

    def class_by_iri(self, iri: str) -> OntologyClass | None:
        return self._class_by_iri.get(iri)

    def property_by_iri(self, iri: str) -> OntologyProperty | None:
        return self._prop_by_iri.get(iri)

    def is_schema_term(self, iri: str) -> bool:
        return iri in self._class_by_iri or iri in self._prop_by_iri

    def ancestors(self, class_id: str) -> frozenset[str]:
        """Reflexive-transitive superclasses of ``class_id``."""
        try:
            return self._ancestors[class_id]
        except KeyError:
            raise UnknownClassError(f"unknown class {class_id!r}") from None

    def is_subclass_of(self, c: str, ancestor: str) -> bool:
        if ancestor not in self.classes:
            raise UnknownClassError(f"unknown class {ancestor!r}")
        return ancestor in self.ancestors(c)

    def is_subproperty_of(self, p: str, ancestor: str) -> bool:
        if p not in self.properties or ancestor not in self.properties:
            raise KeyError(f"unknown property {p if p not in self.properties else ancestor!r}")
        return ancestor in self._prop_ancestors[p]

    def subclasses(self, class_id: str) -> set[str]:
        return {c for c, anc in self._ancestors.items() if class_id in anc}

    def is_literal_class(self, class_id: str) -> bool:
        return class_id in self._literal_classes

    def is_root(self, class_id: str) -> bool:
        return class_id in self._roots


def _closure(parents: Mapping[str, frozenset[str]]) -> dict[str, frozenset[str]]:
    memo: dict[str, frozenset[str]] = {}

    def up(node: str) -> frozenset[str]:
        if node not in memo:
            acc = {node}
            for par in parents.get(node, ()):
                acc |= up(par)
            memo[node] = frozenset(acc)
        return memo[node]

    for node in parents:
        up(node)
    return memo


def _find_cycles(parents: Mapping[str, frozenset[str]]) -> list[list[str]]:
    """Return one representative node list per cycle, in discovery order."""
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {n: WHITE for n in parents}
    cycles: list[list[str]] = []
    for start in sorted(parents):
        if colour[start] != WHITE:
            continue
        stack: list[tuple[str, list[str]]] = [(start, sorted(p for p in parents[start] if p in parents))]
        path = [start]
        colour[start] = GREY
        while stack:
            node, todo = stack[-1]
            if not todo:
                colour[node] = BLACK
                stack.pop()
                path.pop()
                continue
            nxt = todo.pop()
            if colour[nxt] == GREY:
                cycles.append(path[path.index(nxt):] + [nxt])
            elif colour[nxt] == WHITE:
                colour[nxt] = GREY
                path.append(nxt)
                stack.append((nxt, sorted(p for p in parents[nxt] if p in parents)))
    return cycles


def load_ontology(doc: Mapping[str, Any] | str | Path | None = None) -> Ontology:
    """Build an :class:`Ontology` from a definition document.

    ``doc`` may be the parsed JSON mapping or a path to it; ``None`` loads
    the shipped default. All defects are collected and raised together.
    """
    if doc is None:
        return default_ontology()
    if isinstance(doc, (str, Path)):
        with open(doc, encoding="utf-8") as fh:
            doc = json.load(fh)

    problems: list[Problem] = []

    def bad(code: str, msg: str) -> None:
        problems.append(Problem(code, msg))

    if not isinstance(doc, Mapping) or not isinstance(doc.get("classes"), list) \
            or not isinstance(doc.get("properties"), list):
        raise OntologyError("ontology document needs 'classes' and 'properties' arrays",
                            code="MALFORMED_DOCUMENT",
                            problems=[Problem("MALFORMED_DOCUMENT", "missing classes/properties")])

    classes: dict[str, OntologyClass] = {}
    properties: dict[str, OntologyProperty] = {}
    ids = Counter()

    for i, entry in enumerate(doc["classes"]):
        if not isinstance(entry, Mapping) or not isinstance(entry.get("id"), str) \
                or not isinstance(entry.get("iri"), str) or not is_absolute_iri(entry["iri"]):
            bad("MALFORMED_DOCUMENT", f"classes[{i}] needs string 'id' and absolute 'iri'")
            continue
        ids[entry["id"]] += 1
        if entry["id"] in classes:
            continue
        classes[entry["id"]] = OntologyClass(
            id=entry["id"], iri=IRI(entry["iri"]), label=str(entry.get("label", entry["id"])),
            parents=frozenset(entry.get("parents") or ()), literal=bool(entry.get("literal", False)))

    for i, entry in enumerate(doc["properties"]):
        if not isinstance(entry, Mapping) or not isinstance(entry.get("id"), str) \
                or not isinstance(entry.get("iri"), str) or not is_absolute_iri(entry["iri"]) \
                or not isinstance(entry.get("domain"), str) or not isinstance(entry.get("range"), str):
            bad("MALFORMED_DOCUMENT",
                f"properties[{i}] needs string 'id', 'domain', 'range' and absolute 'iri'")
            continue
        ids[entry["id"]] += 1
        if entry["id"] in properties:
            continue
        properties[entry["id"]] = OntologyProperty(
            id=entry["id"], iri=IRI(entry["iri"]), label=str(entry.get("label", entry["id"])),
            domain=entry["domain"], range=entry["range"],
            parents=frozenset(entry.get("parents") or ()))

    for ident, n in sorted(ids.items()):
        if n > 1:
            bad("DUPLICATE_ID", f"id {ident!r} declared {n} times")
    iris = Counter([c.iri for c in classes.values()] + [p.iri for p in properties.values()])
    for iri, n in sorted(iris.items()):
        if n > 1:
            bad("DUPLICATE_ID", f"IRI <{iri}> declared {n} times")

    for c in classes.values():
        for par in sorted(c.parents):
            if par not in classes:
                bad("DANGLING_REFERENCE", f"class {c.id} has undeclared parent {par}")
    for p in properties.values():
        if p.domain not in classes:
            bad("DANGLING_REFERENCE", f"property {p.id} has undeclared domain {p.domain}")
        if p.range != LITERAL and p.range not in classes:
            bad("DANGLING_REFERENCE", f"property {p.id} has undeclared range {p.range}")
        for par in sorted(p.parents):
            if par not in properties:
                bad("DANGLING_REFERENCE", f"property {p.id} has undeclared parent {par}")

    for cyc in _find_cycles({c.id: c.parents for c in classes.values()}):
        bad("CYCLE_DETECTED", "subclass cycle: " + " -> ".join(cyc))
    for cyc in _find_cycles({p.id: p.parents for p in properties.values()}):
        bad("CYCLE_DETECTED", "subproperty cycle: " + " -> ".join(cyc))

    if problems:
        summary = "; ".join(str(p) for p in problems)
        raise OntologyError(f"invalid ontology document: {summary}",
                            code=problems[0].code, problems=problems)
    return Ontology(classes, properties, dict(doc.get("namespaces") or {}))


def default_document() -> dict:
    text = resources.files("heritage_forge").joinpath("data/ontology.json").read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=1)
def default_ontology() -> Ontology:
    return load_ontology(default_document())


def is_subclass_of(ont: Ontology, c: str, ancestor: str) -> bool:
    return ont.is_subclass_of(c, ancestor)


# -- validation --------------------------------------------------------------

class ViolationKind(str, Enum):
    UNKNOWN_PROPERTY = "UNKNOWN_PROPERTY"
    DOMAIN_MISMATCH = "DOMAIN_MISMATCH"
    RANGE_MISMATCH = "RANGE_MISMATCH"
    LITERAL_IN_SUBJECT = "LITERAL_IN_SUBJECT"
    UNTYPED_NODE_WARNING = "UNTYPED_NODE_WARNING"

    @property
    def is_error(self) -> bool:
        return self is not ViolationKind.UNTYPED_NODE_WARNING


@dataclass(frozen=True)
class Violation:
    triple: Triple
    kind: ViolationKind
    message: str

    @property
    def severity(self) -> str:
        return "ERROR" if self.kind.is_error else "WARNING"


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.kind.is_error]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if not v.kind.is_error]

    def kinds(self) -> Counter:
        return Counter(v.kind for v in self.violations)

    def summary(self) -> str:
        return f"{len(self.errors)} errors, {len(self.warnings)} warnings"


def validate_graph(ont: Ontology, g: Graph, *, closure: bool = True) -> ValidationReport:
    """Check every triple against the property signatures in ``ont``.

    With ``closure=False`` a node's class must equal the domain or range
    exactly; this exists to demonstrate what subclass reasoning buys.
    """
    triples = g.snapshot() if isinstance(g, Graph) else frozenset(g)
    types: dict[IRI, set[str]] = {}
    for s, p, o in triples:
        if p == RDF_TYPE and not isinstance(o, Literal):
            cls = ont.class_by_iri(o)
            if cls is not None:
                types.setdefault(s, set()).add(cls.id)

    def conforms(node_types: set[str], required: str) -> bool:
        if closure:
            return any(required in ont.ancestors(t) for t in node_types)
        return required in node_types

    out: list[Violation] = []
    for t in sorted(triples, key=lambda t: (term_key(t[0]), term_key(t[1]), term_key(t[2]))):
        s, p, o = t
        if isinstance(s, Literal):
            out.append(Violation(t, ViolationKind.LITERAL_IN_SUBJECT, "literal used as subject"))
            continue
        if p == RDF_TYPE:
            continue
        prop = ont.property_by_iri(p)
        if prop is None:
            out.append(Violation(t, ViolationKind.UNKNOWN_PROPERTY, f"<{p}> is not a declared property"))
            continue

        stypes = types.get(s)
        if not stypes:
            if not ont.is_root(prop.domain):
                out.append(Violation(t, ViolationKind.UNTYPED_NODE_WARNING,
                                     f"subject <{s}> has no rdf:type; cannot check domain {prop.domain}"))
        elif not conforms(stypes, prop.domain):
            out.append(Violation(t, ViolationKind.DOMAIN_MISMATCH,
                                 f"{prop.id} expects domain {prop.domain}, subject is "
                                 + "/".join(sorted(stypes))))

        if isinstance(o, Literal):
            if prop.range != LITERAL and not ont.is_literal_class(prop.range):
                out.append(Violation(t, ViolationKind.RANGE_MISMATCH,
                                     f"{prop.id} expects {prop.range} but object is a literal"))
            continue
        if prop.range == LITERAL:
            out.append(Violation(t, ViolationKind.RANGE_MISMATCH,
                                 f"{prop.id} expects a literal but object is <{o}>"))
            continue
        if ont.is_schema_term(o):
            continue
        otypes = types.get(o)
        if not otypes:
            if not ont.is_root(prop.range):
                out.append(Violation(t, ViolationKind.UNTYPED_NODE_WARNING,
                                     f"object <{o}> has no rdf:type; cannot check range {prop.range}"))
        elif not conforms(otypes, prop.range):
            out.append(Violation(t, ViolationKind.RANGE_MISMATCH,
                                 f"{prop.id} expects range {prop.range}, object is "
                                 + "/".join(sorted(otypes))))
    return ValidationReport(out)
