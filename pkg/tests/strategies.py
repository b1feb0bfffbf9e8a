"""Hypothesis strategies and a brute-force query oracle shared by the tests."""
from __future__ import annotations

import itertools

from hypothesis import strategies as st

from heritage_forge.store import Graph
from heritage_forge.store.query import Filter, Query, TriplePattern, Var
from heritage_forge.terms import IRI, Literal, Triple

EX = "http://ex.org/"

# small pools keep term collisions (and therefore joins) frequent
SUBJECTS = [IRI(f"{EX}s{i}") for i in range(6)]
PREDICATES = [IRI(f"{EX}p{i}") for i in range(3)]
LITERALS = [Literal("a"), Literal("b"), Literal("a", lang="fr"),
            Literal("1", datatype=IRI("http://www.w3.org/2001/XMLSchema#integer"))]
OBJECTS = SUBJECTS[:4] + LITERALS
VAR_NAMES = ["a", "b", "c"]

pool_triples = st.builds(Triple, st.sampled_from(SUBJECTS), st.sampled_from(PREDICATES),
                         st.sampled_from(OBJECTS))
small_graphs = st.lists(pool_triples, max_size=200).map(Graph)


def _position(constants):
    return st.one_of(st.builds(Var, st.sampled_from(VAR_NAMES)), st.sampled_from(constants))


patterns = st.builds(
    TriplePattern,
    _position(SUBJECTS + [IRI(EX + "absent")]),
    _position(PREDICATES),
    _position(OBJECTS + [Literal("zzz")]),
)


@st.composite
def queries(draw):
    pats = draw(st.lists(patterns, min_size=1, max_size=4))
    bound = sorted(set().union(*(p.variables() for p in pats)))
    if not bound:
        # the grammar needs at least one selected variable
        pats[0] = TriplePattern(Var("a"), pats[0].predicate, pats[0].object)
        bound = sorted(set().union(*(p.variables() for p in pats)))
    select = draw(st.lists(st.sampled_from(bound), min_size=1, max_size=len(bound), unique=True))
    operand = st.one_of(st.builds(Var, st.sampled_from(bound)), st.sampled_from(OBJECTS))
    filters = draw(st.lists(
        st.builds(Filter, st.sampled_from(["=", "!=", "<", ">"]), st.builds(Var, st.sampled_from(bound)), operand),
        max_size=2))
    return Query({}, select, pats, filters)


def oracle(g: Graph, q: Query) -> set[tuple]:
    """Enumerate every assignment of graph terms to the query's variables."""
    names = sorted(set().union(*(p.variables() for p in q.patterns)))
    terms = sorted(g.terms(), key=str)
    triples = g.snapshot()
    rows = set()
    for values in itertools.product(terms, repeat=len(names)):
        b = dict(zip(names, values))

        def inst(t):
            return b[t.name] if isinstance(t, Var) else t

        if not all(Triple(inst(p.subject), inst(p.predicate), inst(p.object)) in triples for p in q.patterns):
            continue
        if not all(_holds(f, b) for f in q.filters):
            continue
        rows.add(tuple(b[v] for v in q.select_vars))
    return rows


def _holds(f: Filter, b: dict) -> bool:
    left = b[f.left.name] if isinstance(f.left, Var) else f.left
    right = b[f.right.name] if isinstance(f.right, Var) else f.right
    if f.op == "=":
        return left == right
    if f.op == "!=":
        return left != right
    if not (isinstance(left, Literal) and isinstance(right, Literal)):
        return False
    return left.lexical < right.lexical if f.op == "<" else left.lexical > right.lexical


iri_text = st.text(st.characters(blacklist_categories=("Cs",), blacklist_characters='<>"{}|^`\\ \t\n\r\x00'),
                   max_size=12)
any_iris = iri_text.map(lambda s: IRI(EX + s))
lang_tags = st.from_regex(r"\A[a-z]{2,3}(-[A-Za-z0-9]{2,4})?\Z")
any_literals = st.one_of(
    st.builds(Literal, st.text(st.characters(blacklist_categories=("Cs",)), max_size=20)),
    st.builds(lambda s, l: Literal(s, lang=l), st.text(max_size=10), lang_tags),
    st.builds(lambda s, d: Literal(s, datatype=d), st.text(max_size=10), any_iris),
)
any_triples = st.builds(Triple, any_iris, any_iris, st.one_of(any_iris, any_literals))
any_graphs = st.lists(any_triples, max_size=40).map(Graph)
