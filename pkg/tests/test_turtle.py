import pytest
from hypothesis import given, settings

from heritage_forge.store import Graph, serialize_turtle
from heritage_forge.terms import IRI, RDF_TYPE, Literal, Triple
from tests.strategies import any_graphs

rdflib = pytest.importorskip("rdflib")

PREFIXES = {
    "crm": "http://www.cidoc-crm.org/cidoc-crm/",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "ex": "http://ex.org/",
}


def _from_rdflib(text: str) -> Graph:
    rg = rdflib.Graph()
    rg.parse(data=text, format="turtle")
    out = Graph()
    for s, p, o in rg:
        if isinstance(o, rdflib.Literal):
            obj = Literal(str(o), lang=o.language,
                          datatype=IRI(str(o.datatype)) if o.datatype else None)
        else:
            obj = IRI(str(o))
        out.add(Triple(IRI(str(s)), IRI(str(p)), obj))
    return out


def test_groups_by_subject_with_type_first():
    s = IRI("http://ex.org/s")
    g = Graph([Triple(s, IRI("http://ex.org/p"), Literal("v")),
               Triple(s, RDF_TYPE, IRI("http://ex.org/C"))])
    text = serialize_turtle(g, PREFIXES)
    assert "ex:s a ex:C ;\n    ex:p \"v\" ." in text
    assert text.startswith("@prefix crm:")


def test_golden_graph_reparses_to_same_triples(golden_graph):
    assert _from_rdflib(serialize_turtle(golden_graph, PREFIXES)) == golden_graph


def test_invalid_prefix_name_rejected():
    with pytest.raises(ValueError):
        serialize_turtle(Graph(), {"1bad": "http://ex.org/"})


@settings(max_examples=100, deadline=None)
@given(any_graphs)
def test_random_graphs_reparse(g):
    assert _from_rdflib(serialize_turtle(g, PREFIXES)) == g
