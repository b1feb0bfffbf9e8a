"""RDF terms: IRIs, literals and triples.

There are no blank nodes anywhere in the toolkit; every node is an IRI.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple, Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"
PROV = "http://www.w3.org/ns/prov#"
CRM = "http://www.cidoc-crm.org/cidoc-crm/"
TOOLKIT_NS = "https://example.org/heritage-forge/ns#"

_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_LANG = re.compile(r"^[A-Za-z]{1,8}(-[A-Za-z0-9]{1,8})*$")


class IRI(str):
    """An absolute IRI. Behaves as its string value."""

    __slots__ = ()

    def __new__(cls, value: str) -> IRI:
        if isinstance(value, IRI):
            return value
        if not isinstance(value, str) or not _SCHEME.match(value):
            raise ValueError(f"not an absolute IRI: {value!r}")
        return super().__new__(cls, value)

    def __repr__(self) -> str:
        return f"IRI({str.__repr__(self)})"


def is_absolute_iri(value: str) -> bool:
    return bool(_SCHEME.match(value))


def is_lang_tag(value: str) -> bool:
    return bool(_LANG.match(value))


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    lang: str | None = None
    datatype: IRI | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.lexical, str):
            raise TypeError("literal lexical form must be a string")
        if self.lang is not None and self.datatype is not None:
            raise ValueError("a literal cannot carry both a language tag and a datatype")
        if self.lang is not None:
            if not _LANG.match(self.lang):
                raise ValueError(f"bad language tag: {self.lang!r}")
            object.__setattr__(self, "lang", self.lang.lower())
        if self.datatype is not None:
            dt = IRI(self.datatype)
            # xsd:string is the implicit datatype of a simple literal
            object.__setattr__(self, "datatype", None if dt == XSD_STRING else dt)

    @property
    def is_plain(self) -> bool:
        return self.lang is None and self.datatype is None

    def __repr__(self) -> str:
        extra = f"@{self.lang}" if self.lang else (f"^^{self.datatype}" if self.datatype else "")
        return f"Literal({self.lexical!r}{extra})"


Term = Union[IRI, Literal]


class Triple(NamedTuple):
    subject: IRI
    predicate: IRI
    object: Term


def term_key(term: Term) -> tuple:
    """Total order on terms, primarily by lexical form."""
    if isinstance(term, Literal):
        return (term.lexical, 1, term.lang or "", term.datatype or "")
    return (str(term), 0, "", "")


XSD_STRING = IRI(XSD + "string")
XSD_DECIMAL = IRI(XSD + "decimal")
XSD_DATETIME = IRI(XSD + "dateTime")
RDF_TYPE = IRI(RDF + "type")
RDF_STATEMENT = IRI(RDF + "Statement")
RDF_SUBJECT = IRI(RDF + "subject")
RDF_PREDICATE = IRI(RDF + "predicate")
RDF_OBJECT = IRI(RDF + "object")
RDFS_LABEL = IRI(RDFS + "label")
REPLACED_TERM = IRI(TOOLKIT_NS + "replacedTerm")
