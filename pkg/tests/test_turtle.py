import pytest
from hypothesis import given, settings

from cpesgraph.errors import ParseError
from cpesgraph.rdf import (
    RDF_FIRST, RDF_REST, RDF_TYPE, RDFS, SH, XSD_DECIMAL, XSD_INTEGER, BlankNode, Iri, Literal, Triple, errol,
    isomorphic,
)
from cpesgraph.turtle import dump_turtle, load_turtle, parse_turtle, serialize_turtle
from strategies import turtle_graphs

HEAD = "@prefix e: <http://x/> .\n"


def test_sgen_shape_parses(sgen_shape_text):
    g = parse_turtle(sgen_shape_text)
    sg = errol("StaticGenerator")
    assert Triple(sg, RDF_TYPE, Iri(RDFS + "Class")) in g
    assert Triple(sg, RDF_TYPE, Iri(SH + "NodeShape")) in g
    q_shapes = [x.subject for x in g.match(None, Iri(SH + "path"), errol("q_mvar"))]
    assert len(q_shapes) == 1 and isinstance(q_shapes[0], BlankNode)
    assert len(g) == 25


def test_sgen_shape_round_trip(sgen_shape_text):
    g = parse_turtle(sgen_shape_text)
    assert isomorphic(parse_turtle(serialize_turtle(g)), g)


def test_syntax_forms():
    g = parse_turtle(HEAD + """
        e:a a e:C ; e:p 1, 2.50, -3 ; e:q true ;
            e:r "x\\ty", \"\"\"multi
line\"\"\" ; e:s [ e:t e:u ] ; e:l ( e:m "n" ) .
        <http://abs/iri> e:p "typed"^^<http://www.w3.org/2001/XMLSchema#string> .
    """)
    a = Iri("http://x/a")
    p = Iri("http://x/p")
    assert set(g.objects(a, p)) == {Literal("1", XSD_INTEGER), Literal("2.50", XSD_DECIMAL),
                                    Literal("-3", XSD_INTEGER)}
    assert Literal("x\ty") in g.objects(a, Iri("http://x/r"))
    assert Literal("multi\nline") in g.objects(a, Iri("http://x/r"))
    head = g.value(a, Iri("http://x/l"))
    assert g.value(head, RDF_FIRST) == Iri("http://x/m")
    assert g.value(g.value(head, RDF_REST), RDF_FIRST) == Literal("n")
    assert Literal("typed") in g.objects(Iri("http://abs/iri"), p)


def test_error_position():
    with pytest.raises(ParseError) as info:
        parse_turtle("@prefix e: <http://x/> . e:a e:b .")
    assert (info.value.line, info.value.column) == (1, 34)
    assert "expected object" in str(info.value)


@pytest.mark.parametrize("text, fragment", [
    (HEAD + "e:a e:b 1.5e3 .", "double"),
    (HEAD + 'e:a e:b "x"@en .', "language"),
    (HEAD + "f:a e:b e:c .", "unknown prefix"),
    (HEAD + 'e:a e:b "open .', "unterminated"),
    (HEAD + "e:a e:b e:c", None),
])
def test_rejects_unsupported(text, fragment):
    if fragment is None:
        # a missing final '.' at end of input is tolerated
        assert len(parse_turtle(text)) == 1
        return
    with pytest.raises(ParseError) as info:
        parse_turtle(text)
    assert fragment in str(info.value).lower()


def test_error_on_second_line():
    with pytest.raises(ParseError) as info:
        parse_turtle(HEAD + "e:a e:b ;")
    assert info.value.line == 2


def test_serialization_is_deterministic(sgen_shape_text):
    g = parse_turtle(sgen_shape_text)
    copy = parse_turtle(sgen_shape_text)
    assert serialize_turtle(g) == serialize_turtle(copy)


def test_shared_blank_node_gets_label():
    g = parse_turtle(HEAD + "e:a e:p _:x . e:c e:p _:x . _:x e:q 1 .")
    text = serialize_turtle(g)
    assert isomorphic(parse_turtle(text), g)
    assert "_:n0" in text


def test_file_io(tmp_path, sgen_shape_text):
    g = parse_turtle(sgen_shape_text)
    path = tmp_path / "x.ttl"
    dump_turtle(g, path)
    assert isomorphic(load_turtle(path), g)


@settings(max_examples=100, deadline=None)
@given(turtle_graphs())
def test_round_trip_property(g):
    text = serialize_turtle(g)
    again = parse_turtle(text)
    assert isomorphic(again, g)
    if "_:" not in text:
        # without labelled blank nodes the text is a fixpoint
        assert serialize_turtle(again) == text
