"""A small SPARQL subset: SELECT over named graphs in a quad store.

This is the execution target for translated queries, so it covers
exactly what translation emits plus enough to be usable on its own:
basic graph patterns, GRAPH blocks with an IRI or variable, OPTIONAL,
UNION, FILTER, and the shared solution modifiers.  The default graph is
the union of every named graph in the store.

The token stream, triples-statement machinery (including bracketed
property lists), filter grammar, and modifier parsing are shared with
the query-language parser.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

from .algebra import (
    Mapping,
    MappingSet,
    UNIT_SET,
    filter_set,
    join,
    leftjoin,
    match_triple,
    union,
)
from .evaluator import EvalError, ResultTable, apply_modifiers, _check_expr
from .store import QuadStore
from .terms import Term, TriplePattern, Variable
from .ql import lexer
from .ql.ast import (
    FilterEl,
    GroupPattern,
    Modifiers,
    OptionalPattern,
    PatternTriple,
    PName,
    SelectItem,
    UnionPattern,
)
from .ql.parser import (
    Cursor,
    QuerySyntaxError,
    _parse_aggregate,
    _parse_modifiers,
    parse_filter_expr,
    parse_triples_statement,
)
from .vocab import BUILTIN_PREFIXES


@dataclass(frozen=True)
class GraphBlock:
    """GRAPH <g> { ... } or GRAPH ?g { ... }."""

    graph: Union[Term, Variable, PName]
    body: GroupPattern


@dataclass(frozen=True)
class SparqlQuery:
    distinct: bool
    select_all: bool
    select: Tuple[SelectItem, ...]
    where: GroupPattern
    modifiers: Modifiers


_BLOCKS = (GroupPattern, GraphBlock, OptionalPattern, UnionPattern)


def parse_sparql(text: str, prefixes: Optional[Dict[str, str]] = None) -> SparqlQuery:
    merged = dict(BUILTIN_PREFIXES)
    if prefixes:
        merged.update(prefixes)
    try:
        tokens = lexer.tokenize(text)
    except lexer.LexError as exc:
        raise QuerySyntaxError(str(exc).split(": ", 1)[-1], exc.line, exc.col) from exc
    cur = Cursor(tokens, merged)

    cur.expect_kw("SELECT")
    distinct = cur.accept_kw("DISTINCT") is not None
    select_all = False
    items: List[SelectItem] = []
    if cur.accept_punct("*"):
        select_all = True
    else:
        while True:
            tok = cur.peek()
            if tok.type == lexer.VAR:
                cur.advance()
                items.append(Variable(str(tok.value)))
            elif cur.peek_is_punct("("):
                items.append(_parse_aggregate(cur))
            else:
                break
            cur.accept_punct(",")
        if not items:
            raise cur.error("expected a projection variable or *")
    cur.expect_kw("WHERE")
    where = _parse_group(cur)
    modifiers = _parse_modifiers(cur)
    if not cur.at_eof():
        raise cur.error("unexpected trailing content")
    return SparqlQuery(distinct, select_all, tuple(items), where, modifiers)


def _parse_group(cur: Cursor) -> GroupPattern:
    cur.expect_punct("{")
    elements: List[object] = []
    while True:
        while cur.accept_punct("."):
            pass
        if cur.peek_is_punct("}"):
            break
        if cur.at_eof():
            raise cur.error("unterminated group", ("'}'",))
        batch = _parse_element(cur)
        while cur.peek_is_kw("UNION"):
            if len(batch) != 1 or not isinstance(batch[0], _BLOCKS):
                raise cur.error("UNION joins braced groups")
            cur.advance()
            right = _parse_element(cur)
            if len(right) != 1 or not isinstance(right[0], _BLOCKS):
                raise cur.error("UNION joins braced groups")
            batch = [UnionPattern(batch[0], right[0])]
        elements.extend(batch)
    cur.expect_punct("}")
    return GroupPattern(tuple(elements))


def _parse_element(cur: Cursor) -> List[object]:
    if cur.peek_is_punct("{"):
        return [_parse_group(cur)]
    if cur.accept_kw("GRAPH"):
        g = cur.parse_term(allow_literal=False, what="graph name")
        return [GraphBlock(g, _parse_group(cur))]
    if cur.accept_kw("OPTIONAL"):
        inner = _parse_element(cur)
        if len(inner) != 1 or not isinstance(inner[0], _BLOCKS):
            raise cur.error("OPTIONAL takes a braced group")
        return [OptionalPattern(inner[0])]
    if cur.accept_kw("FILTER"):
        return [FilterEl(parse_filter_expr(cur))]
    if cur.starts_term() or cur.peek_is_punct("["):
        return list(parse_triples_statement(cur))
    raise cur.error("expected a graph pattern")


# ---------------------------------------------------------------------------
# Evaluation over a quad store

GraphCtx = Union[None, Term, Variable]


def _resolve_qt(t):
    if isinstance(t, (Term, Variable)):
        return t
    if isinstance(t, PName):
        raise EvalError(f"unresolved prefixed name: {t.text()}")
    raise EvalError(f"not usable in a pattern: {t!r}")


def _eval_triple(tp: TriplePattern, store: QuadStore, gctx: GraphCtx) -> MappingSet:
    gsel = gctx if isinstance(gctx, Term) else None
    out = set()
    for quad in store.quads_matching(gsel, tp.s, tp.p, tp.o):
        m = match_triple(tp, quad.t)
        if m is None:
            continue
        if isinstance(gctx, Variable):
            m = m.extended(gctx, quad.g)
            if m is None:
                continue
        out.add(m)
    return frozenset(out)


def _eval_element(el, store: QuadStore, gctx: GraphCtx) -> MappingSet:
    if isinstance(el, PatternTriple):
        tp = TriplePattern(_resolve_qt(el.s), _resolve_qt(el.p), _resolve_qt(el.o))
        return _eval_triple(tp, store, gctx)
    if isinstance(el, GroupPattern):
        return _eval_group(el, store, gctx)
    if isinstance(el, GraphBlock):
        g = _resolve_qt(el.graph)
        return _eval_group(el.body, store, g)
    if isinstance(el, UnionPattern):
        return union(
            _eval_element(el.left, store, gctx), _eval_element(el.right, store, gctx)
        )
    if isinstance(el, OptionalPattern):
        return leftjoin(UNIT_SET, _eval_element(el.body, store, gctx))
    if isinstance(el, FilterEl):
        _check_expr(el.expr)
        return filter_set(UNIT_SET, el.expr)
    raise EvalError(f"cannot evaluate element: {el!r}")


def _eval_group(group: GroupPattern, store: QuadStore, gctx: GraphCtx) -> MappingSet:
    result = UNIT_SET
    filters = []
    for el in group.elements:
        if isinstance(el, FilterEl):
            filters.append(el.expr)
        elif isinstance(el, OptionalPattern):
            result = leftjoin(result, _eval_element(el.body, store, gctx))
        else:
            result = join(result, _eval_element(el, store, gctx))
    for expr in filters:
        _check_expr(expr)
        result = filter_set(result, expr)
    return result


def eval_sparql(
    q: SparqlQuery,
    store: QuadStore,
    visible: Optional[frozenset] = None,
) -> ResultTable:
    """Evaluate; `visible` names the variables that carry meaning.

    Rewritten queries introduce helper variables that keep otherwise
    identical solutions apart.  Restricting each mapping to the visible
    names collapses those duplicates before modifiers apply.
    """
    mset = _eval_group(q.where, store, None)
    if visible is not None:
        mset = frozenset(
            Mapping.of({v: t for v, t in m.as_dict().items() if v.name in visible})
            for m in mset
        )
    return apply_modifiers(q, mset)
