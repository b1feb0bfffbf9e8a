"""Canonical N-Triples reading and writing.

Output follows the canonical form: one triple per line, single spaces
between terms, lines sorted by code point, and only the characters that
cannot appear directly are escaped.
"""
from __future__ import annotations

import re
from typing import Iterable

from ..errors import ParseError
from ..terms import IRI, Literal, Term, Triple
from .graph import Graph

_IRI_NEEDS_ESCAPE = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_LIT_NEEDS_ESCAPE = re.compile(r'["\\\n\r]')
_LIT_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r"}


def _uchar(m: re.Match) -> str:
    return f"\\u{ord(m.group()):04X}"


def escape_iri(value: str) -> str:
    """Escape the characters IRIREF forbids as UCHAR (all of them are below U+10000)."""
    if not _IRI_NEEDS_ESCAPE.search(value):
        return value
    return _IRI_NEEDS_ESCAPE.sub(_uchar, value)


def escape_literal(value: str) -> str:
    if not _LIT_NEEDS_ESCAPE.search(value):
        return value
    return _LIT_NEEDS_ESCAPE.sub(lambda m: _LIT_ESCAPES[m.group()], value)


def format_term(term: Term) -> str:
    if isinstance(term, Literal):
        body = f'"{escape_literal(term.lexical)}"'
        if term.lang:
            return f"{body}@{term.lang}"
        if term.datatype:
            return f"{body}^^<{escape_iri(term.datatype)}>"
        return body
    return f"<{escape_iri(term)}>"


def format_triple(t: Triple) -> str:
    return f"{format_term(t[0])} {format_term(t[1])} {format_term(t[2])} ."


def serialize_ntriples(g: Graph | Iterable[Triple]) -> str:
    lines = sorted(format_triple(t) for t in (g.snapshot() if isinstance(g, Graph) else g))
    return "".join(line + "\n" for line in lines)


# -- parsing -----------------------------------------------------------------

_WS = re.compile(r"[ \t]*")
_IRIREF = re.compile(r"<((?:[^\x00-\x20<>\"{}|^`\\]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*)>")
_STRING = re.compile(r'"((?:[^"\\\n\r]|\\[tbnrf"\'\\]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*)"')
_LANGTAG = re.compile(r"@([a-zA-Z]+(?:-[a-zA-Z0-9]+)*)")
_ESCAPE = re.compile(r"\\(u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8}|[tbnrf\"'\\])")
_ECHAR = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(text: str) -> str:
    def repl(m: re.Match) -> str:
        code = m.group(1)
        if code[0] in "uU":
            return chr(int(code[1:], 16))
        return _ECHAR[code]
    return _ESCAPE.sub(repl, text) if "\\" in text else text


class _LineReader:
    def __init__(self, line: str, lineno: int, source: str | None):
        self.line = line
        self.pos = 0
        self.lineno = lineno
        self.source = source

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.lineno, self.pos + 1, source=self.source)

    def skip_ws(self) -> None:
        self.pos = _WS.match(self.line, self.pos).end()

    def iri(self) -> IRI:
        m = _IRIREF.match(self.line, self.pos)
        if not m:
            raise self.error("expected IRI")
        value = _unescape(m.group(1))
        try:
            iri = IRI(value)
        except ValueError:
            raise self.error(f"relative IRI not allowed: <{value}>") from None
        self.pos = m.end()
        return iri

    def term(self) -> Term:
        ch = self.line[self.pos:self.pos + 1]
        if ch == "<":
            return self.iri()
        if ch == '"':
            m = _STRING.match(self.line, self.pos)
            if not m:
                raise self.error("unterminated or badly escaped string literal")
            self.pos = m.end()
            lexical = _unescape(m.group(1))
            if self.line.startswith("^^", self.pos):
                self.pos += 2
                return Literal(lexical, datatype=self.iri())
            lm = _LANGTAG.match(self.line, self.pos)
            if lm:
                self.pos = lm.end()
                return Literal(lexical, lang=lm.group(1))
            return Literal(lexical)
        if ch == "_":
            raise self.error("blank nodes are not supported")
        raise self.error("expected IRI or literal")


def iter_ntriples(text: str, source: str | None = None):
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        r = _LineReader(line, lineno, source)
        r.skip_ws()
        if r.pos >= len(line) or line[r.pos] == "#":
            continue
        if line[r.pos] != "<":
            raise r.error("subject must be an IRI")
        s = r.iri()
        r.skip_ws()
        p = r.iri()
        r.skip_ws()
        o = r.term()
        r.skip_ws()
        if r.pos >= len(line) or line[r.pos] != ".":
            raise r.error("expected '.' at end of triple")
        r.pos += 1
        r.skip_ws()
        if r.pos < len(line) and line[r.pos] != "#":
            raise r.error("unexpected content after '.'")
        yield Triple(s, p, o)


def parse_ntriples(text: str, source: str | None = None) -> Graph:
    """Parse N-Triples text. Errors carry the 1-based line and column."""
    return Graph(iter_ntriples(text, source))
