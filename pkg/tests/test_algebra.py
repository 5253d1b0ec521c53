"""Mapping-set algebra laws and filter semantics.

The operator laws are checked with hypothesis over small generated
mapping sets; the brute-force definitions in each property are the
SPARQL-style set-theoretic ones.
"""

import pytest
from hypothesis import given, strategies as st

from diachron.algebra import (
    Bound,
    BoolAnd,
    BoolNot,
    BoolOr,
    Comparison,
    EMPTY_MAPPING,
    EMPTY_SET,
    Mapping,
    Regex,
    UNIT_SET,
    algebra_combine,
    diff,
    eval_filter,
    filter_set,
    join,
    leftjoin,
    match_bgp,
    match_triple,
    union,
)
from diachron.terms import (
    Graph,
    Triple,
    TriplePattern,
    Variable,
    XSD_INTEGER,
    iri,
    literal,
    typed,
)

V = Variable
A, B, C = iri("urn:a"), iri("urn:b"), iri("urn:c")


def m(**kw):
    return Mapping.of({V(k): v for k, v in kw.items()})


# -- mapping basics ----------------------------------------------------------


def test_mapping_equality_ignores_insertion_order():
    assert Mapping.of({V("x"): A, V("y"): B}) == Mapping.of({V("y"): B, V("x"): A})


def test_merged_agreeing_and_conflicting():
    assert m(x=A).merged(m(y=B)) == m(x=A, y=B)
    assert m(x=A).merged(m(x=A)) == m(x=A)
    assert m(x=A).merged(m(x=B)) is None


def test_extended():
    assert EMPTY_MAPPING.extended(V("x"), A) == m(x=A)
    assert m(x=A).extended(V("x"), A) == m(x=A)
    assert m(x=A).extended(V("x"), B) is None


# -- operator laws -----------------------------------------------------------

_terms = st.sampled_from([A, B, C, literal("w")])
_vars = st.sampled_from([V("x"), V("y"), V("z")])
_mappings = st.dictionaries(_vars, _terms, max_size=3).map(Mapping.of)
_sets = st.frozensets(_mappings, max_size=4)


@given(_sets, _sets)
def test_join_commutes(a, b):
    assert join(a, b) == join(b, a)


@given(_sets, _sets, _sets)
def test_join_associates(a, b, c):
    assert join(join(a, b), c) == join(a, join(b, c))


@given(_sets)
def test_join_units(a):
    assert join(a, UNIT_SET) == a
    assert join(a, EMPTY_SET) == EMPTY_SET


@given(_sets, _sets)
def test_union_is_set_union(a, b):
    assert union(a, b) == a | b


@given(_sets, _sets)
def test_diff_definition(a, b):
    expected = frozenset(
        x for x in a if not any(x.compatible(y) for y in b)
    )
    assert diff(a, b) == expected


@given(_sets, _sets)
def test_leftjoin_decomposition(a, b):
    assert leftjoin(a, b) == union(join(a, b), diff(a, b))


@given(_sets, _sets)
def test_leftjoin_extends_every_left_row(a, b):
    out = leftjoin(a, b)
    for x in a:
        assert any(x.as_dict().items() <= y.as_dict().items() for y in out)


def test_combine_dispatch():
    assert algebra_combine("union", EMPTY_SET, UNIT_SET) == UNIT_SET
    with pytest.raises(ValueError):
        algebra_combine("semijoin", EMPTY_SET, EMPTY_SET)


# -- BGP matching ------------------------------------------------------------


def test_match_triple_binds_and_checks():
    tp = TriplePattern(V("s"), A, V("o"))
    t = Triple(B, A, C)
    assert match_triple(tp, t) == m(s=B, o=C)
    assert match_triple(tp, Triple(B, C, C)) is None
    # Seed conflicts kill the match.
    assert match_triple(tp, t, m(s=C)) is None


def test_match_bgp_joins_shared_variables():
    g = Graph.of([Triple(A, B, C), Triple(C, B, A)])
    out = match_bgp(g, [TriplePattern(V("x"), B, V("y")), TriplePattern(V("y"), B, V("z"))])
    assert out == frozenset([m(x=A, y=C, z=A), m(x=C, y=A, z=C)])


def test_match_bgp_empty_patterns_is_unit():
    assert match_bgp(Graph(), []) == frozenset([EMPTY_MAPPING])


def test_match_bgp_repeated_variable_in_one_pattern():
    g = Graph.of([Triple(A, B, A), Triple(A, B, C)])
    out = match_bgp(g, [TriplePattern(V("x"), B, V("x"))])
    assert out == frozenset([m(x=A)])


# -- filters -----------------------------------------------------------------


def n(x):
    return typed(str(x), XSD_INTEGER)


def test_numeric_comparison_on_both_numeric():
    row = m(a=n(5), b=typed("5.0", "http://www.w3.org/2001/XMLSchema#decimal"))
    assert eval_filter(Comparison("=", V("a"), V("b")), row)
    assert eval_filter(Comparison("<=", V("a"), V("b")), row)
    assert not eval_filter(Comparison("<", V("a"), V("b")), row)


def test_term_equality_when_either_side_is_not_numeric():
    # "5" as a plain string is not numerically equal to the integer 5.
    row = m(a=n(5), b=literal("5"))
    assert not eval_filter(Comparison("=", V("a"), V("b")), row)
    assert eval_filter(Comparison("!=", V("a"), V("b")), row)


def test_ordering_on_plain_literals_is_bytewise():
    row = m(a=literal("10"), b=literal("9"))
    assert eval_filter(Comparison("<", V("a"), V("b")), row)


def test_ordering_on_iris_is_an_error_hence_false():
    row = m(a=A, b=B)
    assert not eval_filter(Comparison("<", V("a"), V("b")), row)
    assert not eval_filter(Comparison(">=", V("a"), V("b")), row)


def test_unbound_variable_collapses_leaf_only():
    expr = BoolOr((Comparison("=", V("nope"), A), Bound(V("x"))))
    assert eval_filter(expr, m(x=A))
    assert not eval_filter(Comparison("=", V("nope"), A), m(x=A))


def test_ill_formed_numeric_lexical_is_an_error():
    row = m(a=typed("not-a-number", XSD_INTEGER), b=n(1))
    assert not eval_filter(Comparison("<", V("a"), V("b")), row)
    # Equality falls back to term equality only when a side is non-numeric
    # by datatype; a broken lexical on a numeric datatype stays an error.
    assert not eval_filter(Comparison("=", V("a"), V("a")), row)


def test_not_inverts_collapsed_error():
    # error -> False, so !error -> True; this is how negated guards behave.
    assert eval_filter(BoolNot(Comparison("<", V("missing"), A)), EMPTY_MAPPING)


def test_regex_semantics():
    row = m(s=literal("Liver disease"), i=A)
    assert eval_filter(Regex(V("s"), "disease"), row)
    assert eval_filter(Regex(V("s"), "LIVER", "i"), row)
    assert not eval_filter(Regex(V("s"), "LIVER"), row)
    assert not eval_filter(Regex(V("i"), "urn"), row)  # non-literal target
    assert not eval_filter(Regex(V("s"), "[broken"), row)  # bad pattern


def test_bound():
    assert eval_filter(Bound(V("x")), m(x=A))
    assert not eval_filter(Bound(V("y")), m(x=A))


def test_and_or_combine_collapsed_leaves():
    t = Bound(V("x"))
    f = Bound(V("y"))
    row = m(x=A)
    assert eval_filter(BoolAnd((t, t)), row)
    assert not eval_filter(BoolAnd((t, f)), row)
    assert eval_filter(BoolOr((f, t)), row)
    assert not eval_filter(BoolOr((f, f)), row)


@given(_sets)
def test_filter_set_is_a_subset(a):
    out = filter_set(a, Bound(V("x")))
    assert out <= a
    assert all(x.get(V("x")) is not None for x in out)
