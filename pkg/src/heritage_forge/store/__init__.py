"""In-memory triple store, conjunctive queries and RDF serialization."""
from .graph import Graph
from .ntriples import format_term, parse_ntriples, serialize_ntriples
from .query import BindingTable, Filter, Query, TriplePattern, Var, execute, parse_query
from .turtle import serialize_turtle


def insert(g: Graph, t) -> bool:
    return g.insert(t)


__all__ = [
    "BindingTable", "Filter", "Graph", "Query", "TriplePattern", "Var", "execute",
    "format_term", "insert", "parse_ntriples", "parse_query", "serialize_ntriples",
    "serialize_turtle",
]
