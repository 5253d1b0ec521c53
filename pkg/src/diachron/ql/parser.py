"""Recursive-descent parser for the query language.

Grammar notes, all resolved in favour of what real query text looks
like rather than the tersest reading:

* the leading DIACHRON keyword is optional, as is the WHERE clause
  (fragments such as ``SELECT ?x FROM DATASET <d>`` parse to a query
  with an empty body);
* commas are optional separators in SELECT lists and between the two
  BETWEEN VERSIONS terms;
* ``AFTER VERSIONS x y`` is accepted as a spelling of BETWEEN;
* bracketed property lists desugar to fresh ``?_bN`` variables, and a
  ``.`` may separate pairs inside brackets as well as ``;``;
* prefixed names with known prefixes resolve to IRIs during parsing;
  unknown ones survive as PName nodes so the text still round-trips.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple, Union

from ..algebra import (
    BoolAnd,
    BoolNot,
    BoolOr,
    Bound,
    Comparison,
    FilterExpr,
    Regex,
)
from ..terms import RDF_TYPE, Term, TermError, Variable, iri, literal, typed
from ..vocab import BUILTIN_PREFIXES
from . import lexer
from .ast import (
    AFTER,
    AT,
    BEFORE,
    BETWEEN,
    ChangeBlock,
    ChangesBlock,
    CountAgg,
    DatasetBlock,
    EMPTY_MODIFIERS,
    FilterEl,
    GroupPattern,
    Modifiers,
    OptionalPattern,
    OrderKey,
    Pair,
    PatternTriple,
    PName,
    QTerm,
    Query,
    RecattBlock,
    RecordBlock,
    SelectItem,
    SourceClause,
    UnionPattern,
    VersionMod,
)

XSD_BOOLEAN = lexer.XSD_NS + "boolean"
XSD_INTEGER = lexer.XSD_NS + "integer"

_BLOCK_TYPES = (
    GroupPattern,
    DatasetBlock,
    ChangesBlock,
    RecordBlock,
    ChangeBlock,
    OptionalPattern,
    UnionPattern,
)

_COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")


class QuerySyntaxError(ValueError):
    """Syntax failure with position and, where useful, the expected tokens."""

    def __init__(self, message: str, line: int, col: int, expected: Tuple[str, ...] = ()):
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{line}:{col}: {message}{hint}")
        self.line = line
        self.col = col
        self.expected = expected


class Cursor:
    """Token stream with lookahead, shared term parsing, and fresh variables."""

    def __init__(self, tokens: Sequence[lexer.Token], prefixes: Dict[str, str],
                 allow_literal_subjects: bool = False):
        self.tokens = list(tokens)
        self.i = 0
        self.prefixes = prefixes
        self.allow_literal_subjects = allow_literal_subjects
        self._fresh = 0
        # Desugared brackets must not capture variables the author wrote.
        self._taken = {
            str(t.value) for t in self.tokens if t.type == lexer.VAR
        }

    # -- token plumbing ---------------------------------------------------

    def peek(self, ahead: int = 0) -> lexer.Token:
        j = min(self.i + ahead, len(self.tokens) - 1)
        return self.tokens[j]

    def advance(self) -> lexer.Token:
        tok = self.tokens[self.i]
        if tok.type != lexer.EOF:
            self.i += 1
        return tok

    def error(self, message: str, expected: Tuple[str, ...] = ()) -> QuerySyntaxError:
        tok = self.peek()
        return QuerySyntaxError(f"{message}, found {tok.describe()}", tok.line, tok.col, expected)

    def peek_is_kw(self, *names: str) -> bool:
        tok = self.peek()
        return tok.type == lexer.KW and tok.value in names

    def accept_kw(self, *names: str) -> Optional[str]:
        if self.peek_is_kw(*names):
            return str(self.advance().value)
        return None

    def expect_kw(self, *names: str) -> str:
        got = self.accept_kw(*names)
        if got is None:
            raise self.error("expected keyword", tuple(names))
        return got

    def peek_is_punct(self, *values: str) -> bool:
        tok = self.peek()
        return tok.type == lexer.PUNCT and tok.value in values

    def accept_punct(self, *values: str) -> Optional[str]:
        if self.peek_is_punct(*values):
            return str(self.advance().value)
        return None

    def expect_punct(self, value: str) -> None:
        if self.accept_punct(value) is None:
            raise self.error(f"expected {value!r}", (f"'{value}'",))

    def at_eof(self) -> bool:
        return self.peek().type == lexer.EOF

    def fresh_var(self) -> Variable:
        while True:
            name = f"_b{self._fresh}"
            self._fresh += 1
            if name not in self._taken:
                self._taken.add(name)
                return Variable(name)

    # -- terms ------------------------------------------------------------

    def _resolve_pname(self, prefix: str, local: str) -> QTerm:
        ns = self.prefixes.get(prefix)
        if ns is None:
            return PName(prefix, local)
        try:
            return iri(ns + local)
        except TermError as exc:
            tok = self.peek()
            raise QuerySyntaxError(str(exc), tok.line, tok.col) from exc

    def parse_term(self, allow_literal: bool = True, what: str = "term") -> QTerm:
        tok = self.peek()
        if tok.type == lexer.VAR:
            self.advance()
            return Variable(str(tok.value))
        if tok.type == lexer.IRIREF:
            self.advance()
            try:
                return iri(str(tok.value))
            except TermError as exc:
                raise QuerySyntaxError(str(exc), tok.line, tok.col) from exc
        if tok.type == lexer.PNAME:
            prefix, local = tok.value  # type: ignore[misc]
            out = self._resolve_pname(prefix, local)
            self.advance()
            return out
        if allow_literal:
            if tok.type == lexer.STRING:
                self.advance()
                lex, lang, dt = tok.value  # type: ignore[misc]
                if lang is not None:
                    return literal(lex, lang=lang)
                if dt is None:
                    return literal(lex)
                if isinstance(dt, tuple):
                    ns = self.prefixes.get(dt[0])
                    if ns is None:
                        raise QuerySyntaxError(
                            f"unknown prefix {dt[0]!r} in datatype", tok.line, tok.col
                        )
                    dt = ns + dt[1]
                return typed(lex, dt)
            if tok.type == lexer.NUMBER:
                self.advance()
                lex, dt = tok.value  # type: ignore[misc]
                return typed(lex, dt)
            if tok.type == lexer.KW and tok.value in ("TRUE", "FALSE"):
                self.advance()
                return typed(str(tok.value).lower(), XSD_BOOLEAN)
        raise self.error(f"expected {what}")

    def parse_verb(self) -> QTerm:
        tok = self.peek()
        if tok.type == lexer.A:
            self.advance()
            return iri(RDF_TYPE)
        return self.parse_term(allow_literal=False, what="predicate")

    def parse_subject(self) -> QTerm:
        t = self.parse_term(allow_literal=self.allow_literal_subjects, what="subject")
        return t

    def starts_term(self) -> bool:
        tok = self.peek()
        return tok.type in (lexer.VAR, lexer.IRIREF, lexer.PNAME)

    def starts_verb(self) -> bool:
        return self.starts_term() or self.peek().type == lexer.A


# ---------------------------------------------------------------------------
# Triples statements (shared with the SPARQL-subset parser)


def parse_triples_statement(cur: Cursor) -> List[PatternTriple]:
    """One statement: subject (or bracket) plus its predicate-object list."""
    acc: List[PatternTriple] = []
    if cur.peek_is_punct("["):
        cur.advance()
        s: QTerm = cur.fresh_var()
        _parse_po_list(cur, s, acc, in_bracket=True)
        cur.expect_punct("]")
        if cur.starts_verb():
            _parse_po_list(cur, s, acc, in_bracket=False)
    else:
        s = cur.parse_subject()
        _parse_po_list(cur, s, acc, in_bracket=False)
    cur.accept_punct(".")
    return acc


def _parse_po_list(cur: Cursor, subject: QTerm, acc: List[PatternTriple], in_bracket: bool) -> None:
    if in_bracket and cur.peek_is_punct("]"):
        return
    first = True
    while True:
        if not first:
            seps = 0
            while cur.peek_is_punct(";") or (in_bracket and cur.peek_is_punct(".")):
                cur.advance()
                seps += 1
            if seps == 0 or not cur.starts_verb():
                return
        first = False
        p = cur.parse_verb()
        while True:
            if cur.peek_is_punct("["):
                cur.advance()
                b = cur.fresh_var()
                acc.append(PatternTriple(subject, p, b))
                _parse_po_list(cur, b, acc, in_bracket=True)
                cur.expect_punct("]")
            else:
                o = cur.parse_term(allow_literal=True, what="object")
                acc.append(PatternTriple(subject, p, o))
            if cur.accept_punct(",") is None:
                break


# ---------------------------------------------------------------------------
# Filters


def parse_filter_expr(cur: Cursor) -> FilterExpr:
    return _parse_or(cur)


def _parse_or(cur: Cursor) -> FilterExpr:
    parts = [_parse_and(cur)]
    while cur.accept_punct("||"):
        parts.append(_parse_and(cur))
    return parts[0] if len(parts) == 1 else BoolOr(tuple(parts))


def _parse_and(cur: Cursor) -> FilterExpr:
    parts = [_parse_unary(cur)]
    while cur.accept_punct("&&"):
        parts.append(_parse_unary(cur))
    return parts[0] if len(parts) == 1 else BoolAnd(tuple(parts))


def _parse_unary(cur: Cursor) -> FilterExpr:
    if cur.accept_punct("!"):
        return BoolNot(_parse_unary(cur))
    return _parse_primary(cur)


def _parse_primary(cur: Cursor) -> FilterExpr:
    if cur.accept_punct("("):
        inner = _parse_or(cur)
        cur.expect_punct(")")
        return inner
    if cur.accept_kw("REGEX"):
        cur.expect_punct("(")
        target = cur.parse_term(allow_literal=True, what="regex target")
        cur.expect_punct(",")
        pattern = _plain_string(cur, "regex pattern")
        flags = ""
        if cur.accept_punct(","):
            flags = _plain_string(cur, "regex flags")
        cur.expect_punct(")")
        return Regex(target, pattern, flags)
    if cur.accept_kw("BOUND"):
        cur.expect_punct("(")
        tok = cur.peek()
        if tok.type != lexer.VAR:
            raise cur.error("bound() takes a variable")
        cur.advance()
        cur.expect_punct(")")
        return Bound(Variable(str(tok.value)))
    left = cur.parse_term(allow_literal=True, what="filter operand")
    tok = cur.peek()
    if tok.type == lexer.PUNCT and tok.value in _COMPARE_OPS:
        cur.advance()
        right = cur.parse_term(allow_literal=True, what="filter operand")
        return Comparison(str(tok.value), left, right)
    # Bare operand: compare against boolean true.
    return Comparison("=", left, typed("true", XSD_BOOLEAN))


def _plain_string(cur: Cursor, what: str) -> str:
    tok = cur.peek()
    if tok.type != lexer.STRING:
        raise cur.error(f"expected string for {what}")
    lex, lang, dt = tok.value  # type: ignore[misc]
    if lang is not None or dt is not None:
        raise cur.error(f"{what} must be a plain string")
    cur.advance()
    return lex


# ---------------------------------------------------------------------------
# Query structure


def parse_query(
    text: str,
    prefixes: Optional[Dict[str, str]] = None,
    allow_literal_subjects: bool = False,
) -> Query:
    """Parse query text to an AST; raises QuerySyntaxError on any problem."""
    merged = dict(BUILTIN_PREFIXES)
    if prefixes:
        merged.update(prefixes)
    try:
        tokens = lexer.tokenize(text)
    except lexer.LexError as exc:
        raise QuerySyntaxError(str(exc).split(": ", 1)[-1], exc.line, exc.col) from exc
    cur = Cursor(tokens, merged, allow_literal_subjects)

    cur.accept_kw("DIACHRON")
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

    sources: List[SourceClause] = []
    while cur.peek_is_kw("FROM"):
        tok = cur.peek()
        cur.advance()
        kind_kw = cur.expect_kw("DATASET", "CHANGES")
        source = cur.parse_term(allow_literal=False, what="source IRI")
        modifier = _maybe_version_modifier(cur)
        sources.append(
            SourceClause(kind_kw.lower(), source, modifier, pos=(tok.line, tok.col))
        )

    if cur.accept_kw("WHERE"):
        where = _parse_group(cur)
    else:
        where = GroupPattern(())

    modifiers = _parse_modifiers(cur)
    if not cur.at_eof():
        raise cur.error("unexpected trailing content")
    return Query(distinct, select_all, tuple(items), tuple(sources), where, modifiers)


def _parse_aggregate(cur: Cursor) -> CountAgg:
    cur.expect_punct("(")
    cur.expect_kw("COUNT")
    cur.expect_punct("(")
    arg: Optional[Variable] = None
    if cur.accept_punct("*") is None:
        tok = cur.peek()
        if tok.type != lexer.VAR:
            raise cur.error("COUNT takes a variable or *")
        cur.advance()
        arg = Variable(str(tok.value))
    cur.expect_punct(")")
    cur.expect_kw("AS")
    tok = cur.peek()
    if tok.type != lexer.VAR:
        raise cur.error("expected alias variable after AS")
    cur.advance()
    cur.expect_punct(")")
    return CountAgg(arg, Variable(str(tok.value)))


def _maybe_version_modifier(cur: Cursor) -> Optional[VersionMod]:
    if cur.accept_kw("AT"):
        cur.expect_kw("VERSION")
        return VersionMod(AT, cur.parse_term(allow_literal=False, what="version"))
    if cur.accept_kw("BEFORE"):
        cur.expect_kw("VERSION")
        return VersionMod(BEFORE, cur.parse_term(allow_literal=False, what="version"))
    if cur.accept_kw("AFTER"):
        kw = cur.expect_kw("VERSION", "VERSIONS")
        first = cur.parse_term(allow_literal=False, what="version")
        if kw == "VERSION":
            return VersionMod(AFTER, first)
        cur.accept_punct(",")
        second = cur.parse_term(allow_literal=False, what="version")
        return VersionMod(BETWEEN, first, second)
    if cur.accept_kw("BETWEEN"):
        cur.expect_kw("VERSIONS")
        first = cur.parse_term(allow_literal=False, what="version")
        cur.accept_punct(",")
        second = cur.parse_term(allow_literal=False, what="version")
        return VersionMod(BETWEEN, first, second)
    return None


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
            if len(batch) != 1 or not isinstance(batch[0], _BLOCK_TYPES):
                raise cur.error("UNION joins braced groups or blocks")
            cur.advance()
            right = _parse_element(cur)
            if len(right) != 1 or not isinstance(right[0], _BLOCK_TYPES):
                raise cur.error("UNION joins braced groups or blocks")
            batch = [UnionPattern(batch[0], right[0])]
        elements.extend(batch)
    cur.expect_punct("}")
    return GroupPattern(tuple(elements))


def _parse_element(cur: Cursor) -> List[object]:
    tok = cur.peek()
    if cur.peek_is_punct("{"):
        return [_parse_group(cur)]
    if cur.accept_kw("OPTIONAL"):
        inner = _parse_element(cur)
        if len(inner) != 1 or not isinstance(inner[0], _BLOCK_TYPES):
            raise cur.error("OPTIONAL takes a braced group or block")
        return [OptionalPattern(inner[0])]
    if cur.accept_kw("DATASET"):
        return [_parse_scope(cur, DatasetBlock, tok)]
    if cur.accept_kw("CHANGES"):
        return [_parse_scope(cur, ChangesBlock, tok)]
    if cur.accept_kw("RECORD"):
        return [_parse_record(cur, tok)]
    if cur.accept_kw("CHANGE"):
        return [_parse_change(cur, tok)]
    if cur.peek_is_kw("RECATT"):
        raise cur.error("RECATT is only allowed inside a RECORD block")
    if cur.accept_kw("FILTER"):
        return [FilterEl(parse_filter_expr(cur))]
    if cur.starts_term() or cur.peek_is_punct("["):
        return list(parse_triples_statement(cur))
    raise cur.error("expected a graph pattern")


def _parse_scope(cur: Cursor, cls, tok: lexer.Token):
    source = cur.parse_term(allow_literal=False, what="dataset")
    modifier = _maybe_version_modifier(cur)
    body = _parse_group(cur)
    return cls(source, modifier, body, pos=(tok.line, tok.col))


def _parse_record(cur: Cursor, tok: lexer.Token) -> RecordBlock:
    record = cur.parse_term(allow_literal=False, what="record")
    cur.expect_punct("{")
    subject = cur.parse_subject()
    members: List[Union[Pair, RecattBlock]] = []
    while True:
        while cur.accept_punct(".") or cur.accept_punct(";"):
            pass
        if cur.peek_is_punct("}"):
            break
        if cur.accept_kw("RECATT"):
            attr = cur.parse_term(allow_literal=False, what="attribute")
            cur.expect_punct("{")
            p = cur.parse_verb()
            o = cur.parse_term(allow_literal=True, what="object")
            cur.expect_punct("}")
            members.append(RecattBlock(attr, Pair(p, o)))
        elif cur.starts_verb():
            p = cur.parse_verb()
            o = cur.parse_term(allow_literal=True, what="object")
            members.append(Pair(p, o))
        else:
            raise cur.error("expected a predicate-object pair or RECATT block")
    cur.expect_punct("}")
    return RecordBlock(record, subject, tuple(members), pos=(tok.line, tok.col))


def _parse_change(cur: Cursor, tok: lexer.Token) -> ChangeBlock:
    change = cur.parse_term(allow_literal=False, what="change")
    cur.expect_punct("{")
    pairs: List[Pair] = []
    while True:
        while cur.accept_punct(".") or cur.accept_punct(";"):
            pass
        if cur.peek_is_punct("}"):
            break
        if cur.starts_verb():
            p = cur.parse_verb()
            o = cur.parse_term(allow_literal=True, what="object")
            pairs.append(Pair(p, o))
        else:
            raise cur.error("expected a predicate-object pair")
    cur.expect_punct("}")
    return ChangeBlock(change, tuple(pairs), pos=(tok.line, tok.col))


def _parse_modifiers(cur: Cursor) -> Modifiers:
    group_by: Tuple[Variable, ...] = ()
    order_by: Tuple[OrderKey, ...] = ()
    limit: Optional[int] = None
    offset: Optional[int] = None
    while True:
        if cur.peek_is_kw("GROUP"):
            if group_by:
                raise cur.error("duplicate GROUP BY")
            cur.advance()
            cur.expect_kw("BY")
            keys: List[Variable] = []
            while cur.peek().type == lexer.VAR:
                keys.append(Variable(str(cur.advance().value)))
                cur.accept_punct(",")
            if not keys:
                raise cur.error("GROUP BY needs at least one variable")
            group_by = tuple(keys)
        elif cur.peek_is_kw("ORDER"):
            if order_by:
                raise cur.error("duplicate ORDER BY")
            cur.advance()
            cur.expect_kw("BY")
            okeys: List[OrderKey] = []
            while True:
                if cur.peek().type == lexer.VAR:
                    okeys.append(OrderKey(Variable(str(cur.advance().value)), True))
                elif cur.peek_is_kw("ASC", "DESC"):
                    kw = cur.advance().value
                    cur.expect_punct("(")
                    tok = cur.peek()
                    if tok.type != lexer.VAR:
                        raise cur.error("ordering takes a variable")
                    cur.advance()
                    cur.expect_punct(")")
                    okeys.append(OrderKey(Variable(str(tok.value)), kw == "ASC"))
                else:
                    break
            if not okeys:
                raise cur.error("ORDER BY needs at least one key")
            order_by = tuple(okeys)
        elif cur.peek_is_kw("LIMIT"):
            if limit is not None:
                raise cur.error("duplicate LIMIT")
            cur.advance()
            limit = _nonneg_int(cur, "LIMIT")
        elif cur.peek_is_kw("OFFSET"):
            if offset is not None:
                raise cur.error("duplicate OFFSET")
            cur.advance()
            offset = _nonneg_int(cur, "OFFSET")
        else:
            break
    if not (group_by or order_by or limit is not None or offset is not None):
        return EMPTY_MODIFIERS
    return Modifiers(group_by, order_by, limit, offset)


def _nonneg_int(cur: Cursor, what: str) -> int:
    tok = cur.peek()
    if tok.type != lexer.NUMBER or tok.value[1] != XSD_INTEGER:  # type: ignore[index]
        raise cur.error(f"{what} takes a non-negative integer")
    value = int(tok.value[0])  # type: ignore[index]
    if value < 0:
        raise cur.error(f"{what} takes a non-negative integer")
    cur.advance()
    return value
