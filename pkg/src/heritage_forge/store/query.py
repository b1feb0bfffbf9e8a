"""A conjunctive query subset: SELECT over a basic graph pattern with FILTERs.

Grammar::

    query   := ('PREFIX' PNAME_NS IRIREF)* 'SELECT' 'DISTINCT'? var+ 'WHERE'? '{' body '}'
    body    := (triple '.' | 'FILTER' '(' term op term ')')*
    term    := var | IRIREF | prefix:local | string ('@' lang)? | number | 'a'
    op      := '=' | '!=' | '<' | '>'

The final ``.`` before ``}`` may be omitted.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from ..errors import QueryError
from ..terms import RDF_TYPE, IRI, Literal, Term, term_key
from .graph import Graph
from .ntriples import _unescape, format_term


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


PatternTerm = Union[Var, IRI, Literal]


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    def variables(self) -> set[str]:
        return {t.name for t in self if isinstance(t, Var)}


@dataclass(frozen=True)
class Filter:
    op: str
    left: PatternTerm
    right: PatternTerm

    def variables(self) -> set[str]:
        return {t.name for t in (self.left, self.right) if isinstance(t, Var)}

    def holds(self, b: dict[str, Term]) -> bool:
        left = b[self.left.name] if isinstance(self.left, Var) else self.left
        right = b[self.right.name] if isinstance(self.right, Var) else self.right
        if self.op == "=":
            return left == right
        if self.op == "!=":
            return left != right
        if not (isinstance(left, Literal) and isinstance(right, Literal)):
            return False
        if self.op == "<":
            return left.lexical < right.lexical
        return left.lexical > right.lexical


@dataclass
class Query:
    prefixes: dict[str, str]
    select_vars: list[str]
    patterns: list[TriplePattern]
    filters: list[Filter] = field(default_factory=list)


@dataclass
class BindingTable:
    columns: list[str]
    rows: list[dict[str, Term]]

    def __len__(self) -> int:
        return len(self.rows)

    def tuples(self) -> list[tuple[Term, ...]]:
        return [tuple(r[c] for c in self.columns) for r in self.rows]

    def to_tsv(self) -> str:
        def cell(t: Term) -> str:
            text = t.lexical if isinstance(t, Literal) else str(t)
            return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")
        lines = ["\t".join(self.columns)]
        lines += ["\t".join(cell(r[c]) for c in self.columns) for r in self.rows]
        return "\n".join(lines) + "\n"


# -- tokenizer ---------------------------------------------------------------

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+|#[^\n]*"),
    ("IRI", r"<[^\x00-\x20<>\"{}|^`\\]*>"),
    ("VAR", r"[?$][A-Za-z_][A-Za-z0-9_]*"),
    ("STRING", r'"(?:[^"\\\n\r]|\\.)*"'),
    ("LANG", r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*"),
    ("DTYPE", r"\^\^"),
    ("NUMBER", r"[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"),
    ("PNAME", r"[A-Za-z][A-Za-z0-9_\-]*:(?:[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)?|:(?:[A-Za-z0-9_][A-Za-z0-9_\-]*)?"),
    ("WORD", r"[A-Za-z]+"),
    ("OP", r"!=|=|<|>"),
    ("PUNCT", r"[{}().*]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKEN_SPEC))


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise QueryError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "WS":
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("EOF", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None, code: str | None = None) -> QueryError:
        tok = tok or self.tok
        return QueryError(message, tok.line, tok.col, code=code)

    def next(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def keyword(self, word: str) -> bool:
        if self.tok.kind == "WORD" and self.tok.text.upper() == word:
            self.i += 1
            return True
        return False

    def expect_punct(self, ch: str) -> _Tok:
        if self.tok.kind == "PUNCT" and self.tok.text == ch:
            return self.next()
        found = self.tok.text or "end of input"
        raise self.error(f"expected '{ch}', found {found!r}")

    def parse(self) -> Query:
        while self.keyword("PREFIX"):
            t = self.tok
            if t.kind != "PNAME" or not t.text.endswith(":"):
                raise self.error("expected prefix name ending in ':'")
            self.next()
            iri_tok = self.tok
            if iri_tok.kind != "IRI":
                raise self.error("expected <IRI> after prefix name")
            self.next()
            self.prefixes[t.text[:-1]] = _unescape(iri_tok.text[1:-1])
        if not self.keyword("SELECT"):
            raise self.error("expected SELECT")
        self.keyword("DISTINCT")
        select: list[tuple[str, _Tok]] = []
        while self.tok.kind == "VAR":
            t = self.next()
            select.append((t.text[1:], t))
        if not select:
            raise self.error("expected at least one ?variable after SELECT")
        self.keyword("WHERE")
        self.expect_punct("{")
        patterns: list[TriplePattern] = []
        filters: list[Filter] = []
        while not (self.tok.kind == "PUNCT" and self.tok.text == "}"):
            if self.tok.kind == "EOF":
                raise self.error("unterminated group, expected '}'")
            if self.keyword("FILTER"):
                filters.append(self.filter())
                continue
            s = self.term()
            p = self.term(predicate=True)
            o = self.term()
            patterns.append(TriplePattern(s, p, o))
            if self.tok.kind == "PUNCT" and self.tok.text == ".":
                self.next()
            elif not (self.tok.kind == "PUNCT" and self.tok.text == "}"):
                raise self.error("expected '.' after triple pattern")
        self.next()
        if self.tok.kind != "EOF":
            raise self.error(f"unexpected {self.tok.text!r} after end of query")
        if not patterns:
            raise self.error("query has no triple patterns")

        bound = set().union(*(p.variables() for p in patterns))
        for name, tok in select:
            if name not in bound:
                raise self.error(f"selected variable ?{name} does not occur in any pattern",
                                 tok, code="UNBOUND_SELECT_VAR")
        for f in filters:
            missing = f.variables() - bound
            if missing:
                raise QueryError(f"filter variable ?{sorted(missing)[0]} does not occur in any pattern",
                                 1, 1, code="UNBOUND_SELECT_VAR")
        names = list(dict.fromkeys(n for n, _ in select))
        return Query(dict(self.prefixes), names, patterns, filters)

    def filter(self) -> Filter:
        self.expect_punct("(")
        left = self.term()
        if self.tok.kind != "OP":
            raise self.error("expected comparison operator (=, !=, <, >)")
        op = self.next().text
        right = self.term()
        self.expect_punct(")")
        return Filter(op, left, right)

    def term(self, predicate: bool = False) -> PatternTerm:
        t = self.tok
        if t.kind == "VAR":
            self.next()
            return Var(t.text[1:])
        if t.kind == "IRI":
            self.next()
            try:
                return IRI(_unescape(t.text[1:-1]))
            except ValueError:
                raise self.error(f"relative IRI not allowed: {t.text}", t) from None
        if t.kind == "PNAME":
            self.next()
            return self.expand(t)
        if t.kind == "WORD" and t.text == "a" and predicate:
            self.next()
            return RDF_TYPE
        if t.kind == "NUMBER":
            self.next()
            return Literal(t.text)
        if t.kind == "STRING":
            self.next()
            lexical = _unescape(t.text[1:-1])
            if self.tok.kind == "LANG":
                return Literal(lexical, lang=self.next().text[1:])
            if self.tok.kind == "DTYPE":
                self.next()
                dt = self.term()
                if not isinstance(dt, IRI):
                    raise self.error("datatype must be an IRI", t)
                return Literal(lexical, datatype=dt)
            return Literal(lexical)
        raise self.error(f"expected a term, found {t.text or 'end of input'!r}")

    def expand(self, t: _Tok) -> IRI:
        prefix, _, local = t.text.partition(":")
        if prefix not in self.prefixes:
            raise self.error(f"undeclared prefix '{prefix}:'", t, code="UNDECLARED_PREFIX")
        return IRI(self.prefixes[prefix] + local)


def parse_query(text: str) -> Query:
    return _Parser(text).parse()


# -- evaluation --------------------------------------------------------------

def _plan(g: Graph, q: Query) -> list[TriplePattern]:
    """Greedy join order: connected patterns first, then ascending selectivity."""
    def cost(p: TriplePattern) -> int:
        s, pr, o = (None if isinstance(t, Var) else t for t in p)
        return g.count(s, pr, o)

    remaining = list(q.patterns)
    costs = {id(p): cost(p) for p in remaining}
    order: list[TriplePattern] = []
    bound: set[str] = set()
    while remaining:
        def key(p: TriplePattern):
            connected = not bound or bool(p.variables() & bound)
            free = len(p.variables() - bound)
            return (not connected, costs[id(p)], free)
        best = min(remaining, key=key)
        remaining.remove(best)
        order.append(best)
        bound |= best.variables()
    return order


def _solutions(g: Graph, order: list[TriplePattern], filters_at: list[list[Filter]],
               b: dict[str, Term], depth: int) -> Iterator[dict[str, Term]]:
    if depth == len(order):
        yield b
        return
    pat = order[depth]
    inst = [b.get(t.name) if isinstance(t, Var) else t for t in pat]
    for triple in g.match(*inst):
        nb = b
        ok = True
        for term, value in zip(pat, triple):
            if isinstance(term, Var):
                cur = nb.get(term.name)
                if cur is None:
                    if nb is b:
                        nb = dict(b)
                    nb[term.name] = value
                elif cur != value:
                    ok = False
                    break
        if not ok:
            continue
        if all(f.holds(nb) for f in filters_at[depth]):
            yield from _solutions(g, order, filters_at, nb, depth + 1)


def execute(g: Graph, q: Query) -> BindingTable:
    """Evaluate ``q``; rows are distinct and sorted column by column."""
    order = _plan(g, q)
    filters_at: list[list[Filter]] = [[] for _ in order]
    seen: set[str] = set()
    for depth, pat in enumerate(order):
        seen |= pat.variables()
        for f in q.filters:
            if f.variables() <= seen and not any(f in lst for lst in filters_at):
                filters_at[depth].append(f)
    with g._lock:
        rows = {tuple(sol[v] for v in q.select_vars)
                for sol in _solutions(g, order, filters_at, {}, 0)}
    ordered = sorted(rows, key=lambda r: tuple(term_key(t) for t in r))
    return BindingTable(list(q.select_vars), [dict(zip(q.select_vars, r)) for r in ordered])


def format_row(row: dict[str, Term], columns: list[str]) -> str:
    return " ".join(format_term(row[c]) for c in columns)
