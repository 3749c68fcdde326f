import pytest
from hypothesis import given, settings

from cpesgraph.errors import ParseError
from cpesgraph.query import compare, parse_select, select
from cpesgraph.rdf import XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER, Iri, Literal
from cpesgraph.turtle import parse_turtle
from oracles import check_against_oracle
from strategies import queries, small_graphs

DATA = parse_turtle("""
@prefix e: <http://x/> .
e:l1 a e:Load ; e:p_mw 0.004 ; e:bus e:b1 .
e:l2 a e:Load ; e:p_mw 0.010 ; e:bus e:b1 .
e:l3 a e:Load ; e:p_mw 2 ; e:bus e:b2 .
e:g1 a e:Sgen ; e:p_mw -0.006 ; e:bus e:b2 ; e:name "pv" .
""")
PREFIX = "PREFIX e: <http://x/> "


def q(text):
    return select(DATA, PREFIX + text)


def test_join_and_order():
    rows = q("SELECT ?l ?b WHERE { ?l a e:Load ; e:bus ?b . }")
    assert [(r["l"].value, r["b"].value) for r in rows] == [
        ("http://x/l1", "http://x/b1"), ("http://x/l2", "http://x/b1"), ("http://x/l3", "http://x/b2")]


def test_projection_dedups():
    rows = q("SELECT ?b WHERE { ?l e:bus ?b }")
    assert len(rows) == 2


def test_numeric_filter_mixes_integer_and_decimal():
    rows = q("SELECT ?l WHERE { ?l e:p_mw ?p . FILTER(?p > 0.005) }")
    assert [r["l"].value for r in rows] == ["http://x/l2", "http://x/l3"]


def test_type_mismatch_drops_candidate():
    assert q('SELECT ?x WHERE { ?x ?p ?v . FILTER(?v < 1) FILTER(?v != "pv") }') == []
    rows = q('SELECT ?x WHERE { ?x ?p ?v . FILTER(?v = "pv") }')
    assert [r["x"].value for r in rows] == ["http://x/g1"]


def test_iri_filter():
    rows = q("SELECT ?l ?p WHERE { ?l e:p_mw ?p . FILTER(?l = e:l3) }")
    assert len(rows) == 1 and rows[0]["p"] == Literal("2", XSD_INTEGER)


def test_empty_result():
    assert q("SELECT ?x WHERE { ?x a e:Nothing }") == []


@pytest.mark.parametrize("text, fragment", [
    ("SELECT ?x WHERE { ?x e:p ?y OPTIONAL { ?x e:q ?z } }", "OPTIONAL unsupported"),
    ("SELECT * WHERE { ?x e:p ?y }", "SELECT *"),
    ("SELECT ?z WHERE { ?x e:p ?y }", "?z"),
    ("SELECT ?x WHERE { ?x e:p ?y . FILTER(?x && ?y) }", "unsupported"),
    ("SELECT ?x WHERE { ?x e:p ?y ", "unterminated"),
    ("SELECT ?x WHERE { ?x f:p ?y }", "unknown prefix"),
    ("SELECT ?x WHERE { ?x e:p ?y } LIMIT 3", "LIMIT unsupported"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(ParseError) as info:
        parse_select(PREFIX + text)
    assert fragment in str(info.value)


def test_compare_rules():
    one, half = Literal("1", XSD_INTEGER), Literal("0.5", XSD_DECIMAL)
    assert compare(half, "<", one)
    assert compare(Literal("1.0", XSD_DECIMAL), "=", one)
    assert compare(Iri("http://a"), "!=", Iri("http://b"))
    assert compare(Literal("true", XSD_BOOLEAN), ">", Literal("false", XSD_BOOLEAN))


@settings(max_examples=60, deadline=None)
@given(small_graphs(), queries())
def test_evaluate_matches_brute_force(graph, query):
    check_against_oracle(graph, query)
