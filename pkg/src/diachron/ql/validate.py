"""Static checks on parsed queries.

The parser stays permissive so that error messages can talk about
meaning instead of grammar; this module reports the semantic problems:
unresolved prefixes, variables where only IRIs work, projection of
never-bound variables, aggregate and grouping misuse.  Errors stop
evaluation, warnings do not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Set, Tuple

from ..algebra import BoolAnd, BoolNot, BoolOr, Bound, Comparison, Regex
from ..terms import Term, Variable
from .ast import (
    AT,
    BETWEEN,
    ChangeBlock,
    ChangesBlock,
    CountAgg,
    DatasetBlock,
    FilterEl,
    GroupPattern,
    OptionalPattern,
    PatternTriple,
    PName,
    Query,
    RecattBlock,
    RecordBlock,
    UnionPattern,
    VersionMod,
)

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    severity: str
    message: str

    def render(self) -> str:
        return f"{self.severity}: {self.line}:{self.col}: {self.message}"


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.severity == ERROR for d in diagnostics)


def validate(q: Query, archive=None) -> List[Diagnostic]:
    out: List[Diagnostic] = []
    _check_sources(q, archive, out)
    _check_body(q.where, archive, out, (0, 0))
    _check_pnames(q, out)
    _check_projection(q, out)
    out.sort(key=lambda d: (d.line, d.col, d.severity, d.message))
    return out


def _diag(out: List[Diagnostic], pos: Tuple[int, int], severity: str, message: str) -> None:
    out.append(Diagnostic(pos[0], pos[1], severity, message))


# -- FROM clauses -----------------------------------------------------------


def _check_sources(q: Query, archive, out: List[Diagnostic]) -> None:
    seen: Set[str] = set()
    for src in q.sources:
        if src.kind in seen:
            _diag(out, src.pos, ERROR, f"more than one FROM {src.kind.upper()} clause")
        seen.add(src.kind)
        if isinstance(src.source, Variable):
            _diag(out, src.pos, ERROR, "FROM clauses name a dataset IRI, not a variable")
        elif isinstance(src.source, PName):
            _diag(out, src.pos, ERROR, f"unknown prefix {src.source.prefix!r}")
        elif archive is not None and not archive.has_dataset(src.source):
            _diag(out, src.pos, WARNING, f"dataset <{src.source.value}> is not in the archive")
        mod = src.modifier
        if mod is None:
            continue
        if src.kind == "dataset" and mod.kind != AT:
            _diag(out, src.pos, WARNING,
                  "FROM DATASET normally takes AT VERSION; "
                  "the range is treated as a version window")
        if src.kind == "changes" and mod.kind == AT:
            _diag(out, src.pos, WARNING,
                  "AT VERSION does not apply to FROM CHANGES; use BEFORE/AFTER/BETWEEN")
        for t in (mod.first, mod.second):
            if isinstance(t, Variable):
                _diag(out, src.pos, ERROR, "version bounds in FROM clauses must be IRIs")


# -- scope blocks -----------------------------------------------------------


def _check_body(el, archive, out: List[Diagnostic], pos: Tuple[int, int]) -> None:
    if isinstance(el, GroupPattern):
        for child in el.elements:
            _check_body(child, archive, out, pos)
    elif isinstance(el, (DatasetBlock, ChangesBlock)):
        if archive is not None and isinstance(el.dataset, Term) and el.dataset.kind == "iri":
            if not archive.has_dataset(el.dataset):
                _diag(out, el.pos, WARNING,
                      f"dataset <{el.dataset.value}> is not in the archive")
        _check_block_modifier(el, out)
        _check_body(el.body, archive, out, el.pos)
    elif isinstance(el, UnionPattern):
        _check_body(el.left, archive, out, pos)
        _check_body(el.right, archive, out, pos)
    elif isinstance(el, OptionalPattern):
        _check_body(el.body, archive, out, pos)


def _check_block_modifier(el, out: List[Diagnostic]) -> None:
    mod: Optional[VersionMod] = el.modifier
    if mod is None or mod.kind == AT:
        return
    # Versions inside ranges name fixed points on the version axis.  A
    # CHANGES block may still enumerate BETWEEN endpoints as variables.
    allow_vars = isinstance(el, ChangesBlock) and mod.kind == BETWEEN
    if allow_vars:
        return
    for t in (mod.first, mod.second):
        if isinstance(t, Variable):
            _diag(out, el.pos, ERROR,
                  f"{mod.kind.upper()} version bounds must be IRIs, not variables")


# -- prefixed-name leftovers ------------------------------------------------


def _walk_terms(el):
    if isinstance(el, GroupPattern):
        for child in el.elements:
            yield from _walk_terms(child)
    elif isinstance(el, PatternTriple):
        yield from (el.s, el.p, el.o)
    elif isinstance(el, RecordBlock):
        yield el.record
        yield el.subject
        for m in el.members:
            if isinstance(m, RecattBlock):
                yield m.attribute
                yield from (m.pair.p, m.pair.o)
            else:
                yield from (m.p, m.o)
    elif isinstance(el, ChangeBlock):
        yield el.change
        for p in el.pairs:
            yield from (p.p, p.o)
    elif isinstance(el, (DatasetBlock, ChangesBlock)):
        yield el.dataset
        if el.modifier is not None:
            yield el.modifier.first
            if el.modifier.second is not None:
                yield el.modifier.second
        yield from _walk_terms(el.body)
    elif isinstance(el, UnionPattern):
        yield from _walk_terms(el.left)
        yield from _walk_terms(el.right)
    elif isinstance(el, OptionalPattern):
        yield from _walk_terms(el.body)
    elif isinstance(el, FilterEl):
        yield from _expr_terms(el.expr)


def _expr_terms(e):
    if isinstance(e, (BoolAnd, BoolOr)):
        for p in e.parts:
            yield from _expr_terms(p)
    elif isinstance(e, BoolNot):
        yield from _expr_terms(e.expr)
    elif isinstance(e, Comparison):
        yield from (e.left, e.right)
    elif isinstance(e, Regex):
        yield e.target
    elif isinstance(e, Bound):
        yield e.var


def _check_pnames(q: Query, out: List[Diagnostic]) -> None:
    reported: Set[str] = set()
    for t in _walk_terms(q.where):
        if isinstance(t, PName) and t.prefix not in reported:
            reported.add(t.prefix)
            _diag(out, (0, 0), ERROR, f"unknown prefix {t.prefix!r} (as in {t.text()})")


# -- projection and grouping ------------------------------------------------


def _binds(el) -> Set[Variable]:
    found: Set[Variable] = set()
    for t in _walk_terms(el):
        if isinstance(t, Variable):
            found.add(t)
    # Filter expressions never bind anything, so strip their mentions.
    return found - _filter_only(el)


def _filter_only(el) -> Set[Variable]:
    mentioned: Set[Variable] = set()
    pattern_bound: Set[Variable] = set()

    def walk(node):
        if isinstance(node, FilterEl):
            for t in _expr_terms(node.expr):
                if isinstance(t, Variable):
                    mentioned.add(t)
            return
        for t in _direct_terms(node):
            if isinstance(t, Variable):
                pattern_bound.add(t)
        for child in _children(node):
            walk(child)

    walk(el)
    return mentioned - pattern_bound


def _direct_terms(el):
    if isinstance(el, PatternTriple):
        return (el.s, el.p, el.o)
    if isinstance(el, RecordBlock):
        terms = [el.record, el.subject]
        for m in el.members:
            if isinstance(m, RecattBlock):
                terms.extend((m.attribute, m.pair.p, m.pair.o))
            else:
                terms.extend((m.p, m.o))
        return terms
    if isinstance(el, ChangeBlock):
        terms = [el.change]
        for p in el.pairs:
            terms.extend((p.p, p.o))
        return terms
    if isinstance(el, (DatasetBlock, ChangesBlock)):
        terms = [el.dataset]
        if el.modifier is not None:
            terms.append(el.modifier.first)
            if el.modifier.second is not None:
                terms.append(el.modifier.second)
        return terms
    return ()


def _children(el):
    if isinstance(el, GroupPattern):
        return el.elements
    if isinstance(el, (DatasetBlock, ChangesBlock)):
        return (el.body,)
    if isinstance(el, UnionPattern):
        return (el.left, el.right)
    if isinstance(el, OptionalPattern):
        return (el.body,)
    return ()


def _check_projection(q: Query, out: List[Diagnostic]) -> None:
    bound = _binds(q.where)
    aggregates = [i for i in q.select if isinstance(i, CountAgg)]
    plain = [i for i in q.select if isinstance(i, Variable)]
    grouped = bool(q.modifiers.group_by) or bool(aggregates)

    if q.select_all and grouped:
        _diag(out, (0, 0), ERROR, "SELECT * cannot be used with GROUP BY or aggregates")

    for v in plain:
        if v not in bound:
            _diag(out, (0, 0), WARNING, f"?{v.name} is never bound in the query body")
    for agg in aggregates:
        if agg.arg is not None and agg.arg not in bound:
            _diag(out, (0, 0), WARNING,
                  f"?{agg.arg.name} is never bound in the query body")

    names = [v.name for v in plain] + [a.alias.name for a in aggregates]
    seen: Set[str] = set()
    for name in names:
        if name in seen:
            _diag(out, (0, 0), ERROR, f"?{name} is projected more than once")
        seen.add(name)

    if grouped:
        keys = set(q.modifiers.group_by)
        for v in plain:
            if v not in keys:
                _diag(out, (0, 0), ERROR,
                      f"?{v.name} must appear in GROUP BY to be projected alongside an aggregate")
        aliases = {a.alias for a in aggregates}
        for key in q.modifiers.order_by:
            if key.var not in keys and key.var not in aliases:
                _diag(out, (0, 0), ERROR,
                      f"ORDER BY ?{key.var.name} must be a grouping key or aggregate alias")
    elif q.modifiers.order_by:
        visible = bound if q.select_all else set(plain)
        for key in q.modifiers.order_by:
            if key.var not in visible:
                _diag(out, (0, 0), ERROR,
                      f"ORDER BY ?{key.var.name} must be a projected variable")
