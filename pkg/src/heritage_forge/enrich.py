"""Reconcile vocabulary terms with thesaurus concepts.

A vocabulary node is any node typed with a class the policy maps to one or
more facets and carrying an ``rdfs:label``. When its label coincides with a
single concept label of an allowed facet, the node is replaced by the concept
IRI everywhere in the graph and a ``hf:replacedTerm`` triple keeps the
original node recoverable.
"""
from __future__ import annotations

import enum
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import Problem, ThesaurusError
from .mapping import fold_text
from .ontology import Ontology, default_ontology
from .store.graph import Graph
from .terms import RDF_TYPE, RDFS_LABEL, REPLACED_TERM, IRI, Literal, Term, Triple, is_absolute_iri

logger = logging.getLogger(__name__)

FACETS = frozenset({"technique", "weave", "motif", "material", "style", "other"})
PREF, ALT = "pref", "alt"


@dataclass(frozen=True)
class Concept:
    iri: IRI
    facet: str
    pref_labels: Mapping[str, str]
    alt_labels: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.facet not in FACETS:
            raise ValueError(f"unknown facet {self.facet!r}")
        if not self.pref_labels:
            raise ValueError(f"concept {self.iri} has no preferred label")

    def labels(self) -> Iterable[tuple[str, str, str]]:
        """Yield (lang, text, kind) for every label."""
        for lang, text in self.pref_labels.items():
            yield lang, text, PREF
        for lang, texts in self.alt_labels.items():
            for text in texts:
                yield lang, text, ALT


@dataclass(frozen=True)
class _Entry:
    concept: Concept
    kind: str
    lang: str


class Thesaurus:
    """Immutable concept collection indexed by folded label."""

    def __init__(self, concepts: Iterable[Concept] = ()):
        self.concepts: tuple[Concept, ...] = tuple(concepts)
        index: dict[str, list[_Entry]] = defaultdict(list)
        for c in self.concepts:
            for lang, text, kind in c.labels():
                key = fold_text(text)
                if key:
                    index[key].append(_Entry(c, kind, lang))
        self._index = dict(index)
        self._iris = frozenset(c.iri for c in self.concepts)

    def __len__(self) -> int:
        return len(self.concepts)

    def __contains__(self, iri: object) -> bool:
        return iri in self._iris

    def concept(self, iri: str) -> Concept:
        for c in self.concepts:
            if c.iri == iri:
                return c
        raise KeyError(iri)

    def lookup(self, text: str) -> list[_Entry]:
        return list(self._index.get(fold_text(text), ()))


class Outcome(enum.Enum):
    MATCHED = "MATCHED"
    AMBIGUOUS = "AMBIGUOUS"
    NO_MATCH = "NO_MATCH"


@dataclass(frozen=True)
class MatchResult:
    outcome: Outcome
    candidates: tuple[Concept, ...] = ()

    @property
    def concept(self) -> Concept | None:
        return self.candidates[0] if self.outcome is Outcome.MATCHED else None


NO_MATCH = MatchResult(Outcome.NO_MATCH)


def _parse_concept(i: int, entry: Any) -> tuple[Concept | None, list[Problem]]:
    where = f"concepts[{i}]"
    if not isinstance(entry, Mapping):
        return None, [Problem("MALFORMED_DOCUMENT", f"{where} is not an object")]
    problems = []
    iri = entry.get("iri")
    if not isinstance(iri, str) or not is_absolute_iri(iri):
        problems.append(Problem("MALFORMED_DOCUMENT", f"{where}: 'iri' must be an absolute IRI"))
    facet = entry.get("facet")
    if facet not in FACETS:
        problems.append(Problem("MALFORMED_DOCUMENT", f"{where}: facet {facet!r} is not one of {sorted(FACETS)}"))
    pref = entry.get("prefLabels")
    if not isinstance(pref, Mapping) or not pref or \
            not all(isinstance(k, str) and isinstance(v, str) and v.strip() for k, v in pref.items()):
        problems.append(Problem("MALFORMED_DOCUMENT", f"{where}: 'prefLabels' must map languages to non-empty strings"))
    alt = entry.get("altLabels", {}) or {}
    if not isinstance(alt, Mapping) or not all(
            isinstance(k, str) and isinstance(v, list) and all(isinstance(x, str) for x in v)
            for k, v in alt.items()):
        problems.append(Problem("MALFORMED_DOCUMENT", f"{where}: 'altLabels' must map languages to string lists"))
    if problems:
        return None, problems
    return Concept(IRI(iri), facet, {k.lower(): v for k, v in pref.items()},
                   {k.lower(): tuple(v) for k, v in alt.items()}), []


def load_thesaurus(doc: Mapping[str, Any] | str | Path) -> Thesaurus:
    """Build a thesaurus from a ``{"concepts": [...]}`` document or a path to one."""
    if isinstance(doc, (str, Path)):
        with open(doc, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ThesaurusError(f"{doc}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, Mapping) or not isinstance(doc.get("concepts"), list):
        raise ThesaurusError("thesaurus document needs a 'concepts' array")
    concepts, problems, seen = [], [], set()
    for i, entry in enumerate(doc["concepts"]):
        c, errs = _parse_concept(i, entry)
        problems.extend(errs)
        if c is None:
            continue
        if c.iri in seen:
            problems.append(Problem("DUPLICATE_CONCEPT_IRI", f"concepts[{i}]: duplicate IRI {c.iri}"))
            continue
        seen.add(c.iri)
        concepts.append(c)
    if problems:
        raise ThesaurusError(f"{len(problems)} problem(s): {problems[0].message}",
                             code=problems[0].code, problems=problems)
    return Thesaurus(concepts)


def match_concept(th: Thesaurus, text: str, facet: str | Iterable[str], lang: str | None = None) -> MatchResult:
    """Exact match on folded labels within the allowed facets.

    A language tag narrows the candidate labels to that language. Preferred
    label hits outrank alternative ones.
    """
    facets = {facet} if isinstance(facet, str) else set(facet)
    lang = lang.lower() if lang else None
    by_kind: dict[str, dict[str, Concept]] = {PREF: {}, ALT: {}}
    for e in th.lookup(text):
        if e.concept.facet not in facets:
            continue
        if lang is not None and e.lang != lang:
            continue
        by_kind[e.kind].setdefault(e.concept.iri, e.concept)
    for kind in (PREF, ALT):
        hits = by_kind[kind]
        # a concept found by pref label is not also counted among alt hits
        if kind == ALT:
            hits = {k: v for k, v in hits.items() if k not in by_kind[PREF]}
        if len(hits) == 1:
            return MatchResult(Outcome.MATCHED, tuple(hits.values()))
        if len(hits) > 1:
            return MatchResult(Outcome.AMBIGUOUS, tuple(sorted(hits.values(), key=lambda c: c.iri)))
    return NO_MATCH


Policy = Mapping[str, frozenset[str]]


def default_policy(ont: Ontology | None = None) -> dict[IRI, frozenset[str]]:
    """Facets per vocabulary class, keyed by class IRI."""
    ont = ont or default_ontology()
    by_id = {
        "E55": {"technique", "weave"},
        "T25": {"technique"},
        "T21": {"weave"},
        "T32": {"weave"},
        "T18": {"motif"},
        "T34": {"motif"},
        "T11": {"style"},
        "E57": {"material"},
    }
    return {ont.class_iri(cid): frozenset(f) for cid, f in by_id.items() if cid in ont.classes}


@dataclass(frozen=True)
class EnrichmentEntry:
    node: IRI
    label: str
    result: MatchResult


@dataclass
class EnrichmentLog:
    entries: list[EnrichmentEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def _with(self, outcome: Outcome) -> list[EnrichmentEntry]:
        return [e for e in self.entries if e.result.outcome is outcome]

    @property
    def matched(self) -> list[EnrichmentEntry]:
        return self._with(Outcome.MATCHED)

    @property
    def ambiguous(self) -> list[EnrichmentEntry]:
        return self._with(Outcome.AMBIGUOUS)

    @property
    def unmatched(self) -> list[EnrichmentEntry]:
        return self._with(Outcome.NO_MATCH)


def _vocabulary_nodes(g: Graph, th: Thesaurus, policy: Policy) -> list[tuple[IRI, frozenset[str], Literal]]:
    out = []
    nodes = set()
    for cls in policy:
        nodes.update(s for s in g.subjects(RDF_TYPE, IRI(cls)))
    for node in sorted(nodes):
        if node in th:
            continue
        labels = sorted((o for o in g.objects(node, RDFS_LABEL) if isinstance(o, Literal)),
                        key=lambda lit: (lit.lexical, lit.lang or ""))
        if not labels:
            continue
        facets = frozenset().union(*(policy[t] for t in g.types_of(node) if t in policy))
        out.append((node, facets, labels[0]))
    return out


def enrich_graph(g: Graph, th: Thesaurus, policy: Policy | None = None) -> tuple[Graph, EnrichmentLog]:
    """Return an enriched copy of ``g`` and the per-node log; ``g`` is untouched."""
    policy = default_policy() if policy is None else policy
    log = EnrichmentLog()
    replacements: dict[Term, IRI] = {}
    for node, facets, label in _vocabulary_nodes(g, th, policy):
        result = match_concept(th, label.lexical, facets, label.lang)
        log.entries.append(EnrichmentEntry(node, label.lexical, result))
        if result.outcome is Outcome.MATCHED:
            replacements[node] = result.concept.iri
        elif result.outcome is Outcome.AMBIGUOUS:
            logger.warning("ambiguous term %r (%s): %s", label.lexical, node,
                           ", ".join(c.iri for c in result.candidates))
    if not replacements:
        return g.copy(), log

    out = Graph(name=g.name)
    for s, p, o in g:
        out.add(Triple(replacements.get(s, s), p, replacements.get(o, o) if not isinstance(o, Literal) else o))
    for node, concept in replacements.items():
        out.add(Triple(concept, REPLACED_TERM, node))
    return out, log
