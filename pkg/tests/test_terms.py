import pytest
from hypothesis import given, strategies as st

from diachron.terms import (
    EMPTY_GRAPH,
    Graph,
    PatternError,
    Term,
    TermError,
    Triple,
    TriplePattern,
    Variable,
    XSD_INTEGER,
    XSD_STRING,
    blank,
    check_pattern,
    iri,
    literal,
    typed,
)


def test_plain_literal_gets_string_datatype():
    t = literal("hello")
    assert t.datatype == XSD_STRING
    assert t.ntriples() == '"hello"'


def test_typed_literal_serialization():
    assert typed("5", XSD_INTEGER).ntriples() == f'"5"^^<{XSD_INTEGER}>'


def test_lang_literal_serialization():
    t = literal("chat", lang="fr")
    assert t.ntriples() == '"chat"@fr'
    assert t.datatype.endswith("langString")


def test_lang_requires_langstring_datatype():
    with pytest.raises(TermError):
        Term("literal", "x", datatype=XSD_STRING, lang="en")


def test_langstring_requires_tag():
    with pytest.raises(TermError):
        Term("literal", "x", datatype="http://www.w3.org/1999/02/22-rdf-syntax-ns#langString")


def test_iri_rejects_whitespace_and_angle_brackets():
    for bad in ("a b", "a<b", "a>b", "a\nb", ""):
        with pytest.raises(TermError):
            iri(bad)


def test_relative_iri_accepted():
    # Opaque local names are legal graph/dataset identifiers.
    assert iri("EFO").ntriples() == "<EFO>"


def test_blank_label_validation():
    assert blank("b0").ntriples() == "_:b0"
    with pytest.raises(TermError):
        blank("has space")
    with pytest.raises(TermError):
        blank("")


def test_literal_escaping_round_trip_characters():
    t = literal('say "hi"\n\tdone\\')
    assert t.ntriples() == '"say \\"hi\\"\\n\\tdone\\\\"'


def test_terms_are_hashable_and_equal_by_value():
    assert iri("urn:a") == iri("urn:a")
    assert hash(iri("urn:a")) == hash(iri("urn:a"))
    assert iri("urn:a") != blank("a")
    assert literal("1") != typed("1", XSD_INTEGER)


def test_variable_name_validation():
    assert Variable("s").name == "s"
    with pytest.raises(TermError):
        Variable("no space")
    with pytest.raises(TermError):
        Variable("")


def test_triple_rejects_bad_positions():
    s, p, o = iri("urn:s"), iri("urn:p"), literal("x")
    with pytest.raises(TermError):
        Triple(literal("x"), p, o)
    with pytest.raises(TermError):
        Triple(s, blank("b"), o)
    assert Triple(s, p, o).ntriples() == "<urn:s> <urn:p> \"x\" ."


def test_pattern_literal_subject_gate():
    tp = TriplePattern(literal("x"), Variable("p"), Variable("o"))
    with pytest.raises(PatternError):
        check_pattern(tp)
    assert check_pattern(tp, allow_literal_subject=True) is tp


def test_pattern_literal_predicate_always_rejected():
    tp = TriplePattern(Variable("s"), literal("x"), Variable("o"))
    with pytest.raises(PatternError):
        check_pattern(tp, allow_literal_subject=True)


def test_graph_set_semantics():
    t1 = Triple(iri("urn:s"), iri("urn:p"), literal("a"))
    t2 = Triple(iri("urn:s"), iri("urn:p"), literal("b"))
    g = Graph.of([t1, t2, t1])
    assert len(g) == 2
    assert t1 in g
    assert g.union([t1]) == g
    assert g.difference([t1]) == Graph.of([t2])
    assert not EMPTY_GRAPH
    assert g.subjects() == frozenset([iri("urn:s")])


def test_sorted_triples_is_bytewise_canonical():
    ts = [
        Triple(iri("urn:s"), iri("urn:p"), typed("10", XSD_INTEGER)),
        Triple(iri("urn:s"), iri("urn:p"), typed("2", XSD_INTEGER)),
        Triple(iri("urn:a"), iri("urn:p"), literal("z")),
    ]
    out = Graph.of(ts).sorted_triples()
    assert [t.ntriples() for t in out] == sorted(t.ntriples() for t in ts)


_names = st.text(alphabet="abcdefgh0123_", min_size=1, max_size=8)


@given(_names)
def test_blank_labels_from_safe_alphabet_always_valid(label):
    assert blank(label).value == label


@given(st.text(max_size=30))
def test_escape_serialization_never_emits_raw_quote_or_newline(s):
    body = literal(s).ntriples()
    inner = body[1:-1]  # strip the surrounding quotes
    assert "\n" not in inner and "\r" not in inner
    # Any quote left inside must be escaped.
    i = 0
    while i < len(inner):
        if inner[i] == "\\":
            i += 2
            continue
        assert inner[i] != '"'
        i += 1
