import pytest

from heritage_forge.terms import IRI, XSD_STRING, Literal, Triple, is_absolute_iri, term_key


def test_iri_requires_scheme():
    assert IRI("http://ex.org/a") == "http://ex.org/a"
    with pytest.raises(ValueError):
        IRI("relative/path")
    with pytest.raises(ValueError):
        IRI("")


def test_literal_lang_and_datatype_exclusive():
    with pytest.raises(ValueError):
        Literal("x", lang="en", datatype=IRI("http://ex.org/dt"))


def test_literal_lang_is_case_insensitive():
    assert Literal("x", lang="EN") == Literal("x", lang="en")


def test_xsd_string_is_plain_literal():
    assert Literal("x", datatype=XSD_STRING) == Literal("x")


def test_literal_identity_includes_lang():
    assert Literal("damas", lang="fr") != Literal("damas")


def test_term_key_orders_iris_before_equal_literals():
    assert term_key(IRI("http://a")) < term_key(Literal("http://a"))


def test_is_absolute_iri():
    assert is_absolute_iri("urn:x")
    assert not is_absolute_iri("x")


def test_triple_is_a_tuple():
    t = Triple(IRI("http://s"), IRI("http://p"), Literal("o"))
    s, p, o = t
    assert o.lexical == "o"
