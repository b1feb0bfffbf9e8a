from __future__ import annotations

import re
from collections import defaultdict
from typing import Mapping

from ..terms import RDF_TYPE, IRI, Literal, Term, term_key
from .graph import Graph
from .ntriples import escape_literal, format_term

_PN_PREFIX = re.compile(r"^([A-Za-z][A-Za-z0-9_\-]*)?$")
_SAFE_LOCAL = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?$")


class _Compactor:
    def __init__(self, prefixes: Mapping[str, str]):
        for prefix in prefixes:
            if not _PN_PREFIX.match(prefix):
                raise ValueError(f"invalid Turtle prefix name: {prefix!r}")
        # longest namespace first so nested namespaces pick the tightest match
        self.items = sorted(prefixes.items(), key=lambda kv: -len(kv[1]))

    def iri(self, iri: str) -> str:
        for prefix, ns in self.items:
            if iri.startswith(ns):
                local = iri[len(ns):]
                if _SAFE_LOCAL.match(local):
                    return f"{prefix}:{local}"
        return format_term(IRI(iri))

    def term(self, term: Term) -> str:
        if isinstance(term, Literal):
            body = f'"{escape_literal(term.lexical)}"'
            if term.lang:
                return f"{body}@{term.lang}"
            if term.datatype:
                return f"{body}^^{self.iri(term.datatype)}"
            return body
        return self.iri(term)


def serialize_turtle(g: Graph, prefixes: Mapping[str, str] | None = None) -> str:
    """Turtle grouped by subject, then predicate, in canonical term order."""
    prefixes = dict(prefixes or {})
    c = _Compactor(prefixes)
    grouped: dict[Term, dict[Term, list[Term]]] = defaultdict(lambda: defaultdict(list))
    for s, p, o in g.snapshot():
        grouped[s][p].append(o)

    out = [f"@prefix {p}: <{ns}> ." for p, ns in sorted(prefixes.items())]
    if out:
        out.append("")
    for s in sorted(grouped, key=term_key):
        preds = grouped[s]
        # rdf:type first, as is customary
        order = sorted(preds, key=lambda p: (p != RDF_TYPE, term_key(p)))
        chunks = []
        for p in order:
            pred = "a" if p == RDF_TYPE else c.iri(p)
            objs = ", ".join(c.term(o) for o in sorted(preds[p], key=term_key))
            chunks.append(f"{pred} {objs}")
        out.append(c.iri(s) + " " + " ;\n    ".join(chunks) + " .")
        out.append("")
    return "\n".join(out)
