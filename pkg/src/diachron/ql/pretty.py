"""Canonical formatting for query ASTs.

`parse(pretty_print(parse(text)))` yields a structurally equal AST for
any text the parser accepts; the tests lean on that fixpoint.  Output
conventions: keywords uppercased, one triple per line, resolved IRIs in
angle brackets, bare integer/decimal/boolean literals when the lexical
form allows it, WHERE always written (as ``WHERE { }`` when empty).
"""

from __future__ import annotations

import re
from typing import List

from ..algebra import BoolAnd, BoolNot, BoolOr, Bound, Comparison, FilterExpr, Regex
from ..terms import Term, Variable, escape_literal
from .ast import (
    AT,
    BEFORE,
    AFTER,
    BETWEEN,
    ChangeBlock,
    ChangesBlock,
    CountAgg,
    DatasetBlock,
    FilterEl,
    GroupPattern,
    OptionalPattern,
    Pair,
    PatternTriple,
    PName,
    QTerm,
    Query,
    RecattBlock,
    RecordBlock,
    UnionPattern,
    VersionMod,
)

_XSD = "http://www.w3.org/2001/XMLSchema#"
_INTEGER_RE = re.compile(r"[+-]?[0-9]+\Z")
_DECIMAL_RE = re.compile(r"[+-]?[0-9]+\.[0-9]+\Z")

_INDENT = "  "


def term_text(t: QTerm) -> str:
    """Single-token spelling of a term as the query language writes it."""
    if isinstance(t, Variable):
        return f"?{t.name}"
    if isinstance(t, PName):
        return t.text()
    if isinstance(t, Term):
        if t.kind == "iri":
            return f"<{t.value}>"
        if t.kind == "blank":
            return f"_:{t.value}"
        if t.datatype == _XSD + "integer" and _INTEGER_RE.match(t.value):
            return t.value
        if t.datatype == _XSD + "decimal" and _DECIMAL_RE.match(t.value):
            return t.value
        if t.datatype == _XSD + "boolean" and t.value in ("true", "false"):
            return t.value
        quoted = f'"{escape_literal(t.value)}"'
        if t.lang is not None:
            return f"{quoted}@{t.lang}"
        if t.datatype == _XSD + "string":
            return quoted
        return f"{quoted}^^<{t.datatype}>"
    raise TypeError(f"not a query term: {t!r}")


# -- filter expressions, with minimal parenthesisation ----------------------

_PREC_OR = 1
_PREC_AND = 2
_PREC_NOT = 3
_PREC_LEAF = 4


def _prec(e: FilterExpr) -> int:
    if isinstance(e, BoolOr):
        return _PREC_OR
    if isinstance(e, BoolAnd):
        return _PREC_AND
    if isinstance(e, BoolNot):
        return _PREC_NOT
    return _PREC_LEAF


def expr_text(e: FilterExpr) -> str:
    if isinstance(e, BoolOr):
        return " || ".join(_wrapped(p, _PREC_OR) for p in e.parts)
    if isinstance(e, BoolAnd):
        return " && ".join(_wrapped(p, _PREC_AND) for p in e.parts)
    if isinstance(e, BoolNot):
        return "!" + _wrapped(e.expr, _PREC_NOT)
    if isinstance(e, Bound):
        return f"bound(?{e.var.name})"
    if isinstance(e, Regex):
        args = [term_text(e.target), f'"{escape_literal(e.pattern)}"']
        if e.flags:
            args.append(f'"{escape_literal(e.flags)}"')
        return f"regex({', '.join(args)})"
    if isinstance(e, Comparison):
        return f"{term_text(e.left)} {e.op} {term_text(e.right)}"
    raise TypeError(f"not a filter expression: {e!r}")


def _wrapped(e: FilterExpr, parent: int) -> str:
    text = expr_text(e)
    if _prec(e) < parent or (parent == _PREC_NOT and _prec(e) < _PREC_LEAF):
        return f"({text})"
    return text


# -- pattern elements -------------------------------------------------------


def _modifier_text(mod: VersionMod) -> str:
    if mod.kind == AT:
        return f"AT VERSION {term_text(mod.first)}"
    if mod.kind == BEFORE:
        return f"BEFORE VERSION {term_text(mod.first)}"
    if mod.kind == AFTER:
        return f"AFTER VERSION {term_text(mod.first)}"
    if mod.kind == BETWEEN:
        return f"BETWEEN VERSIONS {term_text(mod.first)}, {term_text(mod.second)}"
    raise ValueError(f"unknown modifier kind: {mod.kind}")


def _record_text(el: RecordBlock) -> str:
    parts = [term_text(el.subject)]
    for m in el.members:
        if isinstance(m, RecattBlock):
            parts.append(
                f"RECATT {term_text(m.attribute)} "
                f"{{ {term_text(m.pair.p)} {term_text(m.pair.o)} }}"
            )
        else:
            parts.append(f"{term_text(m.p)} {term_text(m.o)} .")
    return f"RECORD {term_text(el.record)} {{ {' '.join(parts)} }}"


def _change_text(el: ChangeBlock) -> str:
    parts = [f"{term_text(p.p)} {term_text(p.o)}" for p in el.pairs]
    inner = " . ".join(parts)
    if inner:
        inner = f" {inner} "
    else:
        inner = " "
    return f"CHANGE {term_text(el.change)} {{{inner}}}"


def _group_lines(group: GroupPattern, depth: int) -> List[str]:
    pad = _INDENT * depth
    lines = [pad + "{"]
    for el in group.elements:
        lines.extend(_element_lines(el, depth + 1))
    lines.append(pad + "}")
    return lines


def _element_lines(el, depth: int) -> List[str]:
    pad = _INDENT * depth
    if isinstance(el, PatternTriple):
        return [f"{pad}{term_text(el.s)} {term_text(el.p)} {term_text(el.o)} ."]
    if isinstance(el, FilterEl):
        return [f"{pad}FILTER ({expr_text(el.expr)})"]
    if isinstance(el, RecordBlock):
        return [pad + _record_text(el)]
    if isinstance(el, ChangeBlock):
        return [pad + _change_text(el)]
    if isinstance(el, GroupPattern):
        return _group_lines(el, depth)
    if isinstance(el, (DatasetBlock, ChangesBlock)):
        kw = "DATASET" if isinstance(el, DatasetBlock) else "CHANGES"
        head = f"{pad}{kw} {term_text(el.dataset)}"
        if el.modifier is not None:
            head += " " + _modifier_text(el.modifier)
        body = _group_lines(el.body, depth)
        body[0] = head + " {"
        return body
    if isinstance(el, UnionPattern):
        left = _element_lines(el.left, depth)
        right = _element_lines(el.right, depth)
        return left + [pad + "UNION"] + right
    if isinstance(el, OptionalPattern):
        inner = _element_lines(el.body, depth)
        inner[0] = pad + "OPTIONAL " + inner[0].lstrip()
        return inner
    raise TypeError(f"not a pattern element: {el!r}")


def pretty_print(q: Query) -> str:
    head = "SELECT"
    if q.distinct:
        head += " DISTINCT"
    if q.select_all:
        head += " *"
    else:
        parts = []
        for item in q.select:
            if isinstance(item, CountAgg):
                arg = "*" if item.arg is None else f"?{item.arg.name}"
                parts.append(f"(COUNT({arg}) AS ?{item.alias.name})")
            else:
                parts.append(f"?{item.name}")
        head += " " + " ".join(parts)
    lines = [head]
    for src in q.sources:
        line = f"FROM {src.kind.upper()} {term_text(src.source)}"
        if src.modifier is not None:
            line += " " + _modifier_text(src.modifier)
        lines.append(line)
    if q.where.elements:
        body = _group_lines(q.where, 0)
        body[0] = "WHERE {"
        lines.extend(body)
    else:
        lines.append("WHERE { }")
    mods = q.modifiers
    if mods.group_by:
        lines.append("GROUP BY " + " ".join(f"?{v.name}" for v in mods.group_by))
    if mods.order_by:
        keys = []
        for k in mods.order_by:
            keys.append(f"?{k.var.name}" if k.ascending else f"DESC(?{k.var.name})")
        lines.append("ORDER BY " + " ".join(keys))
    if mods.limit is not None:
        lines.append(f"LIMIT {mods.limit}")
    if mods.offset is not None:
        lines.append(f"OFFSET {mods.offset}")
    return "\n".join(lines) + "\n"
