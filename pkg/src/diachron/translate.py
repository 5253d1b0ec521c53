"""Rewrite parsed queries into one SPARQL-subset query over the store.

Every atomic unit (a plain triple, one RECORD block, one CHANGE block)
becomes a dictionary lookup that binds a record-set or change-set graph
plus a GRAPH block over it.  Fresh helper variables keep units
independent, so a pattern may match in any version in scope, while
user-visible dataset/version variables are shared between units and
therefore pin them together, mirroring native evaluation.

Versions stored as deltas have no record-set graph to point a GRAPH
block at, so the result carries the list of versions that must be
materialized into a scratch store first; `evaluate_translated` does
that on a copy and never mutates the archive.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional, Tuple, Union

from .archive import Archive, DELTA
from .evaluator import EvalError, ResultTable
from .scopes import (
    required_materializations,
    restrict_versions,
    root_scope,
    version_ordinal,
)
from .sparql import eval_sparql, parse_sparql
from .terms import Term, Variable, typed
from .terms import XSD_INTEGER
from .vocab import (
    CHANGE_SET,
    DIACHRONIC_DATASET,
    DICTIONARY_GRAPH,
    HAS_CHANGE,
    HAS_CHANGE_SET,
    HAS_INSTANTIATION,
    HAS_RECORD_ATTRIBUTE,
    HAS_RECORD_SET,
    NEW_VERSION,
    OBJECT,
    OLD_VERSION,
    PREDICATE,
    RECORD,
    SUBJECT,
    VERSION_ORDINAL,
)
from .ql.ast import (
    AFTER,
    AT,
    BEFORE,
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
)
from .ql.pretty import expr_text, term_text

_INDENT = "  "


@dataclass(frozen=True)
class SparqlText:
    """Translated query text plus what running it needs to know.

    `materialize` lists delta-stored versions that need record-set
    graphs built first; `visible` is the source query's variable names,
    used to strip helper bindings from results.
    """

    text: str
    materialize: Tuple[Term, ...]
    visible: Tuple[str, ...]


@dataclass(frozen=True)
class _Ctx:
    """What the enclosing scope contributes to each unit's dictionary lookup."""

    mode: str  # "data" | "changes"
    d_dataset: Union[Term, Variable, None] = None
    d_version: Union[Term, Variable, None] = None
    d_lo: Optional[int] = None
    d_hi: Optional[int] = None
    c_dataset: Union[Term, Variable, None] = None
    c_old: Union[Term, Variable, None] = None
    c_new: Union[Term, Variable, None] = None
    c_lo: Optional[int] = None
    c_hi: Optional[int] = None


class _Names:
    def __init__(self, taken):
        self.taken = set(taken)
        self.n = 0

    def fresh(self, stem: str) -> Variable:
        while True:
            name = f"_{stem}{self.n}"
            self.n += 1
            if name not in self.taken:
                self.taken.add(name)
                return Variable(name)


def _t(term) -> str:
    if isinstance(term, PName):
        raise EvalError(f"unresolved prefixed name: {term.text()}")
    return term_text(term)


def _collect_names(q: Query) -> set:
    names = set()

    def add(t):
        if isinstance(t, Variable):
            names.add(t.name)

    def walk(el):
        if isinstance(el, GroupPattern):
            for c in el.elements:
                walk(c)
        elif isinstance(el, PatternTriple):
            for t in (el.s, el.p, el.o):
                add(t)
        elif isinstance(el, RecordBlock):
            add(el.record)
            add(el.subject)
            for m in el.members:
                if isinstance(m, RecattBlock):
                    add(m.attribute)
                    add(m.pair.p)
                    add(m.pair.o)
                else:
                    add(m.p)
                    add(m.o)
        elif isinstance(el, ChangeBlock):
            add(el.change)
            for p in el.pairs:
                add(p.p)
                add(p.o)
        elif isinstance(el, (DatasetBlock, ChangesBlock)):
            add(el.dataset)
            if el.modifier is not None:
                add(el.modifier.first)
                if el.modifier.second is not None:
                    add(el.modifier.second)
            walk(el.body)
        elif isinstance(el, UnionPattern):
            walk(el.left)
            walk(el.right)
        elif isinstance(el, OptionalPattern):
            walk(el.body)

    walk(q.where)
    for item in q.select:
        if isinstance(item, Variable):
            names.add(item.name)
        elif isinstance(item, CountAgg):
            if item.arg is not None:
                names.add(item.arg.name)
            names.add(item.alias.name)
    for v in q.modifiers.group_by:
        names.add(v.name)
    for k in q.modifiers.order_by:
        names.add(k.var.name)
    return names


# ---------------------------------------------------------------------------
# Unit emission


def _int_text(n: int) -> str:
    return term_text(typed(str(n), XSD_INTEGER))


class _Translator:
    def __init__(self, archive: Archive, names: _Names):
        self.archive = archive
        self.names = names

    # -- dictionary preambles --------------------------------------------

    def _data_preamble(self, ctx: _Ctx, depth: int) -> Tuple[List[str], Variable]:
        """Dictionary block binding a record-set graph for one data unit."""
        pad = _INDENT * depth
        inner = _INDENT * (depth + 1)
        ds = ctx.d_dataset if ctx.d_dataset is not None else self.names.fresh("d")
        v = ctx.d_version if ctx.d_version is not None else self.names.fresh("v")
        rs = self.names.fresh("rs")
        lines = [f"{pad}GRAPH {_t(DICTIONARY_GRAPH)} {{"]
        lines.append(f"{inner}{_t(ds)} {_t(HAS_INSTANTIATION)} {_t(v)} .")
        lines.append(f"{inner}{_t(v)} {_t(HAS_RECORD_SET)} {_t(rs)} .")
        if ctx.d_lo is not None or ctx.d_hi is not None:
            o = self.names.fresh("ord")
            lines.append(f"{inner}{_t(v)} {_t(VERSION_ORDINAL)} {_t(o)} .")
            parts = []
            if ctx.d_lo is not None:
                parts.append(f"{_t(o)} >= {_int_text(ctx.d_lo)}")
            if ctx.d_hi is not None:
                parts.append(f"{_t(o)} <= {_int_text(ctx.d_hi)}")
            lines.append(f"{inner}FILTER ({' && '.join(parts)})")
        lines.append(f"{pad}}}")
        return lines, rs

    def _changes_preamble(self, ctx: _Ctx, depth: int) -> Tuple[List[str], Variable]:
        """Dictionary block binding a change-set graph for one unit."""
        pad = _INDENT * depth
        inner = _INDENT * (depth + 1)
        ds = ctx.c_dataset if ctx.c_dataset is not None else self.names.fresh("d")
        cs = self.names.fresh("cs")
        old = ctx.c_old if ctx.c_old is not None else self.names.fresh("vo")
        new = ctx.c_new if ctx.c_new is not None else self.names.fresh("vn")
        lines = [f"{pad}GRAPH {_t(DICTIONARY_GRAPH)} {{"]
        lines.append(f"{inner}{_t(ds)} {_t(HAS_CHANGE_SET)} {_t(cs)} .")
        lines.append(f"{inner}{_t(cs)} a {_t(CHANGE_SET)} .")
        lines.append(f"{inner}{_t(cs)} {_t(OLD_VERSION)} {_t(old)} .")
        lines.append(f"{inner}{_t(cs)} {_t(NEW_VERSION)} {_t(new)} .")
        if ctx.c_lo is not None:
            o = self.names.fresh("ord")
            lines.append(f"{inner}{_t(old)} {_t(VERSION_ORDINAL)} {_t(o)} .")
            lines.append(f"{inner}FILTER ({_t(o)} >= {_int_text(ctx.c_lo)})")
        if ctx.c_hi is not None:
            o = self.names.fresh("ord")
            lines.append(f"{inner}{_t(new)} {_t(VERSION_ORDINAL)} {_t(o)} .")
            lines.append(f"{inner}FILTER ({_t(o)} <= {_int_text(ctx.c_hi)})")
        lines.append(f"{pad}}}")
        return lines, cs

    # -- units ------------------------------------------------------------

    def _triple_unit(self, el: PatternTriple, ctx: _Ctx, depth: int) -> List[str]:
        pad = _INDENT * depth
        inner = _INDENT * (depth + 1)
        if ctx.mode == "changes":
            pre, cs = self._changes_preamble(ctx, depth)
            return pre + [
                f"{pad}GRAPH {_t(cs)} {{",
                f"{inner}{_t(el.s)} {_t(el.p)} {_t(el.o)} .",
                f"{pad}}}",
            ]
        pre, rs = self._data_preamble(ctx, depth)
        return pre + [
            f"{pad}GRAPH {_t(rs)} {{",
            f"{inner}[ a {_t(RECORD)} ; {_t(SUBJECT)} {_t(el.s)} ; "
            f"{_t(HAS_RECORD_ATTRIBUTE)} [ {_t(PREDICATE)} {_t(el.p)} ; "
            f"{_t(OBJECT)} {_t(el.o)} ] ] .",
            f"{pad}}}",
        ]

    def _record_unit(self, el: RecordBlock, ctx: _Ctx, depth: int) -> List[str]:
        pad = _INDENT * depth
        inner = _INDENT * (depth + 1)
        pre, rs = self._data_preamble(ctx, depth)
        r = _t(el.record)
        lines = pre + [f"{pad}GRAPH {_t(rs)} {{"]
        lines.append(f"{inner}{r} a {_t(RECORD)} .")
        lines.append(f"{inner}{r} {_t(SUBJECT)} {_t(el.subject)} .")
        for m in el.members:
            if isinstance(m, RecattBlock):
                ra = _t(m.attribute)
                lines.append(f"{inner}{r} {_t(HAS_RECORD_ATTRIBUTE)} {ra} .")
                lines.append(f"{inner}{ra} {_t(PREDICATE)} {_t(m.pair.p)} .")
                lines.append(f"{inner}{ra} {_t(OBJECT)} {_t(m.pair.o)} .")
            else:
                lines.append(
                    f"{inner}{r} {_t(HAS_RECORD_ATTRIBUTE)} [ {_t(PREDICATE)} "
                    f"{_t(m.p)} ; {_t(OBJECT)} {_t(m.o)} ] ."
                )
        lines.append(f"{pad}}}")
        return lines

    def _change_unit(self, el: ChangeBlock, ctx: _Ctx, depth: int) -> List[str]:
        pad = _INDENT * depth
        inner = _INDENT * (depth + 1)
        pre, cs = self._changes_preamble(ctx, depth)
        c = _t(el.change)
        lines = pre + [f"{pad}GRAPH {_t(cs)} {{"]
        lines.append(f"{inner}{_t(cs)} {_t(HAS_CHANGE)} {c} .")
        for p in el.pairs:
            lines.append(f"{inner}{c} {_t(p.p)} {_t(p.o)} .")
        lines.append(f"{pad}}}")
        return lines

    # -- scope blocks -----------------------------------------------------

    def _dataset_validity(self, ctx: _Ctx, depth: int) -> List[str]:
        pad = _INDENT * depth
        inner = _INDENT * (depth + 1)
        ds = ctx.d_dataset if ctx.d_dataset is not None else self.names.fresh("d")
        v = ctx.d_version if ctx.d_version is not None else self.names.fresh("v")
        return [
            f"{pad}GRAPH {_t(DICTIONARY_GRAPH)} {{",
            f"{inner}{_t(ds)} {_t(HAS_INSTANTIATION)} {_t(v)} .",
            f"{pad}}}",
        ]

    def _changes_validity(self, ctx: _Ctx, depth: int) -> List[str]:
        if isinstance(ctx.c_old, Variable) or isinstance(ctx.c_new, Variable):
            lines, _ = self._changes_preamble(ctx, depth)
            return lines
        pad = _INDENT * depth
        inner = _INDENT * (depth + 1)
        ds = ctx.c_dataset if ctx.c_dataset is not None else self.names.fresh("d")
        return [
            f"{pad}GRAPH {_t(DICTIONARY_GRAPH)} {{",
            f"{inner}{_t(ds)} a {_t(DIACHRONIC_DATASET)} .",
            f"{pad}}}",
        ]

    def _dataset_block(self, el: DatasetBlock, ctx: _Ctx, depth: int) -> List[str]:
        mod = el.modifier
        version: Union[Term, Variable, None] = None
        lo = hi = None
        if mod is not None:
            if mod.kind == AT:
                version = mod.first
            elif mod.kind == BEFORE:
                hi = version_ordinal(self.archive, mod.first)
            elif mod.kind == AFTER:
                lo = version_ordinal(self.archive, mod.first)
            elif mod.kind == BETWEEN:
                lo = version_ordinal(self.archive, mod.first)
                hi = version_ordinal(self.archive, mod.second)
        child = _Ctx(
            mode="data",
            d_dataset=el.dataset,
            d_version=version,
            d_lo=lo,
            d_hi=hi,
            c_dataset=el.dataset,
        )
        pad = _INDENT * depth
        lines = [pad + "{"]
        lines.extend(self._dataset_validity(child, depth + 1))
        lines.extend(self._group(el.body, child, depth + 1))
        lines.append(pad + "}")
        return lines

    def _changes_block(self, el: ChangesBlock, ctx: _Ctx, depth: int) -> List[str]:
        mod = el.modifier
        old = new = None
        clo = chi = None
        if mod is not None and mod.kind != AT:
            if mod.kind == BETWEEN:
                if isinstance(mod.first, Variable):
                    old = mod.first
                else:
                    clo = version_ordinal(self.archive, mod.first)
                if isinstance(mod.second, Variable):
                    new = mod.second
                else:
                    chi = version_ordinal(self.archive, mod.second)
            elif mod.kind == BEFORE:
                chi = version_ordinal(self.archive, mod.first)
            elif mod.kind == AFTER:
                clo = version_ordinal(self.archive, mod.first)
        child = replace(
            ctx,
            mode="changes",
            c_dataset=el.dataset,
            c_old=old,
            c_new=new,
            c_lo=clo,
            c_hi=chi,
        )
        pad = _INDENT * depth
        lines = [pad + "{"]
        lines.extend(self._changes_validity(child, depth + 1))
        lines.extend(self._group(el.body, child, depth + 1))
        lines.append(pad + "}")
        return lines

    # -- structure ---------------------------------------------------------

    def _braced(self, el, ctx: _Ctx, depth: int) -> List[str]:
        pad = _INDENT * depth
        if isinstance(el, (DatasetBlock, ChangesBlock)):
            # Already renders with its own braces.
            return self._element(el, ctx, depth)
        return [pad + "{"] + self._element(el, ctx, depth + 1) + [pad + "}"]

    def _element(self, el, ctx: _Ctx, depth: int) -> List[str]:
        pad = _INDENT * depth
        if isinstance(el, PatternTriple):
            return self._triple_unit(el, ctx, depth)
        if isinstance(el, RecordBlock):
            return self._record_unit(el, ctx, depth)
        if isinstance(el, ChangeBlock):
            return self._change_unit(el, ctx, depth)
        if isinstance(el, FilterEl):
            _reject_pnames_in_expr(el.expr)
            return [f"{pad}FILTER ({expr_text(el.expr)})"]
        if isinstance(el, GroupPattern):
            return [pad + "{"] + self._group(el, ctx, depth + 1) + [pad + "}"]
        if isinstance(el, DatasetBlock):
            return self._dataset_block(el, ctx, depth)
        if isinstance(el, ChangesBlock):
            return self._changes_block(el, ctx, depth)
        if isinstance(el, UnionPattern):
            return (
                self._braced(el.left, ctx, depth)
                + [pad + "UNION"]
                + self._braced(el.right, ctx, depth)
            )
        if isinstance(el, OptionalPattern):
            return (
                [pad + "OPTIONAL {"]
                + self._element(el.body, ctx, depth + 1)
                + [pad + "}"]
            )
        raise EvalError(f"cannot translate element: {el!r}")

    def _group(self, group: GroupPattern, ctx: _Ctx, depth: int) -> List[str]:
        lines: List[str] = []
        for el in group.elements:
            lines.extend(self._element(el, ctx, depth))
        return lines


def _reject_pnames_in_expr(expr) -> None:
    from .evaluator import _expr_terms

    for t in _expr_terms(expr):
        if isinstance(t, PName):
            raise EvalError(f"unresolved prefixed name: {t.text()}")


# ---------------------------------------------------------------------------
# Entry points


def _root_ctx(q: Query, archive: Archive) -> _Ctx:
    from_ds = next((s for s in q.sources if s.kind == "dataset"), None)
    from_ch = next((s for s in q.sources if s.kind == "changes"), None)
    mode = "data"
    d_dataset = d_version = None
    d_lo = d_hi = None
    c_dataset = None
    c_lo = c_hi = None
    if from_ds is not None:
        d_dataset = from_ds.source
        c_dataset = from_ds.source
        mod = from_ds.modifier
        if mod is not None:
            if mod.kind == AT:
                d_version = mod.first
            elif mod.kind == BEFORE:
                d_hi = version_ordinal(archive, mod.first)
            elif mod.kind == AFTER:
                d_lo = version_ordinal(archive, mod.first)
            elif mod.kind == BETWEEN:
                d_lo = version_ordinal(archive, mod.first)
                d_hi = version_ordinal(archive, mod.second)
    if from_ch is not None:
        c_dataset = from_ch.source
        mod = from_ch.modifier
        if mod is not None and mod.kind != AT:
            if mod.kind == BEFORE:
                c_hi = version_ordinal(archive, mod.first)
            elif mod.kind == AFTER:
                c_lo = version_ordinal(archive, mod.first)
            elif mod.kind == BETWEEN:
                c_lo = version_ordinal(archive, mod.first)
                c_hi = version_ordinal(archive, mod.second)
        if from_ds is None:
            mode = "changes"
            d_dataset = from_ch.source
    return _Ctx(
        mode=mode,
        d_dataset=d_dataset,
        d_version=d_version,
        d_lo=d_lo,
        d_hi=d_hi,
        c_dataset=c_dataset,
        c_lo=c_lo,
        c_hi=c_hi,
    )


def collect_materializations(q: Query, archive: Archive) -> Tuple[Term, ...]:
    need = set()
    root_data_used = False

    def visit(el, in_dataset, mode):
        nonlocal root_data_used
        if isinstance(el, GroupPattern):
            for c in el.elements:
                visit(c, in_dataset, mode)
        elif isinstance(el, PatternTriple):
            # Plain triples in changes scope read change-set graphs, which
            # are always stored; only data-scope triples need version sets.
            if not in_dataset and mode == "data":
                root_data_used = True
        elif isinstance(el, (RecordBlock, RecattBlock)):
            if not in_dataset:
                root_data_used = True
        elif isinstance(el, DatasetBlock):
            if isinstance(el.dataset, Term):
                ds_list = [el.dataset] if archive.has_dataset(el.dataset) else []
            else:
                ds_list = archive.datasets()
            for ds in ds_list:
                versions = archive.versions(ds)
                mod = el.modifier
                if mod is not None and mod.kind == AT and isinstance(mod.first, Term):
                    versions = [vi for vi in versions if vi.iri == mod.first]
                elif mod is not None and mod.kind != AT:
                    versions = restrict_versions(archive, versions, mod)
                for vi in versions:
                    if vi.policy == DELTA:
                        need.add(vi.iri)
            visit(el.body, True, "data")
        elif isinstance(el, ChangesBlock):
            visit(el.body, in_dataset, "changes")
        elif isinstance(el, UnionPattern):
            visit(el.left, in_dataset, mode)
            visit(el.right, in_dataset, mode)
        elif isinstance(el, OptionalPattern):
            visit(el.body, in_dataset, mode)

    root_mode = "changes" if (
        any(s.kind == "changes" for s in q.sources)
        and not any(s.kind == "dataset" for s in q.sources)
    ) else "data"
    visit(q.where, False, root_mode)
    # Patterns enclosed in DATASET blocks never touch the root version pool,
    # so a query that pins all its data inside blocks plans nothing extra.
    if root_data_used:
        need.update(required_materializations(root_scope(q, archive)))
    return tuple(sorted(need, key=lambda t: t.value))


def translate(q: Query, archive: Archive) -> SparqlText:
    """One SPARQL query equivalent to q over this archive's store layout."""
    materialize = collect_materializations(q, archive)
    user_names = _collect_names(q)
    names = _Names(user_names)
    ctx = _root_ctx(q, archive)
    tr = _Translator(archive, names)

    body = tr._group(q.where, ctx, 1)

    head = "SELECT"
    if q.distinct:
        head += " DISTINCT"
    if q.select_all:
        user = sorted(user_names)
        head += " " + " ".join(f"?{n}" for n in user) if user else " *"
    else:
        parts = []
        for item in q.select:
            if isinstance(item, CountAgg):
                arg = "*" if item.arg is None else f"?{item.arg.name}"
                parts.append(f"(COUNT({arg}) AS ?{item.alias.name})")
            else:
                parts.append(f"?{item.name}")
        head += " " + " ".join(parts)

    lines = [head, "WHERE {"] + body + ["}"]
    mods = q.modifiers
    if mods.group_by:
        lines.append("GROUP BY " + " ".join(f"?{v.name}" for v in mods.group_by))
    if mods.order_by:
        keys = [
            f"?{k.var.name}" if k.ascending else f"DESC(?{k.var.name})"
            for k in mods.order_by
        ]
        lines.append("ORDER BY " + " ".join(keys))
    if mods.limit is not None:
        lines.append(f"LIMIT {mods.limit}")
    if mods.offset is not None:
        lines.append(f"OFFSET {mods.offset}")
    return SparqlText("\n".join(lines) + "\n", materialize, tuple(sorted(user_names)))


def evaluate_translated(st: SparqlText, archive: Archive) -> ResultTable:
    """Run translated text on a scratch copy with deltas materialized."""
    store = archive.store.copy()
    scratch = Archive(store)
    for v in st.materialize:
        scratch.materialize_sets(v, cache=True)
    return eval_sparql(parse_sparql(st.text), store, visible=frozenset(st.visible))
