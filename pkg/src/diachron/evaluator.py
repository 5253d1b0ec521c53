"""Query evaluation over an archive, straight from the AST.

Semantics in brief:

* plain triple patterns match the de-reified record content of every
  version in scope, one union per pattern, so two patterns may match in
  different versions and still join on shared variables;
* RECORD/RECATT blocks match the reified structure (record IRIs,
  subjects, attribute nodes) of the versions in scope;
* CHANGE blocks enumerate the members of every change set in scope and
  expose each change's arcs, type included, as predicate/object pairs;
* DATASET/CHANGES blocks derive a child scope; a variable dataset or
  AT VERSION variable turns into iteration that binds the variable,
  and BETWEEN VERSIONS endpoints bind per stored change-set pair;
* inside a changes-mode scope (FROM CHANGES with no FROM DATASET, or a
  CHANGES block) plain triples match the raw change-set graphs.

All row output is deterministic: rows sort bytewise on their N-Triples
serialization before ORDER BY/OFFSET/LIMIT apply.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .algebra import (
    BoolAnd,
    BoolNot,
    BoolOr,
    Bound,
    Comparison,
    EMPTY_MAPPING,
    EMPTY_SET,
    Mapping,
    MappingSet,
    Regex,
    UNIT_SET,
    filter_set,
    join,
    leftjoin,
    match_bgp,
    union,
)
from .archive import Archive, ChangeSetInfo, VersionInfo
from .reify import RecordView, dereify, parse_records
from .scopes import (
    CHANGES,
    DATA,
    Scope,
    filter_change_sets,
    restrict_versions,
    root_scope,
    version_ordinal,
)
from .terms import Graph, Term, TriplePattern, Variable, typed
from .terms import XSD_INTEGER
from .vocab import HAS_CHANGE
from .ql.ast import (
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
)


class EvalError(ValueError):
    """The query cannot be evaluated as written."""


class EvalContext:
    """Per-evaluation caches so each version materializes at most once."""

    def __init__(self, archive: Archive):
        self.archive = archive
        self._sets: Dict[Term, Tuple[Graph, Graph]] = {}
        self._data: Dict[Term, Graph] = {}
        self._records: Dict[Term, List[RecordView]] = {}

    def sets(self, vi: VersionInfo) -> Tuple[Graph, Graph]:
        if vi.iri not in self._sets:
            self._sets[vi.iri] = self.archive.materialize_sets(vi.iri)
        return self._sets[vi.iri]

    def data_graph(self, vi: VersionInfo) -> Graph:
        if vi.iri not in self._data:
            rs, _ = self.sets(vi)
            self._data[vi.iri] = dereify(rs)
        return self._data[vi.iri]

    def records(self, vi: VersionInfo) -> List[RecordView]:
        if vi.iri not in self._records:
            rs, _ = self.sets(vi)
            self._records[vi.iri] = parse_records(rs)
        return self._records[vi.iri]

    def change_graph(self, ci: ChangeSetInfo) -> Graph:
        return self.archive.store.get_graph(ci.iri)


def _qt(t):
    if isinstance(t, (Term, Variable)):
        return t
    if isinstance(t, PName):
        raise EvalError(f"unresolved prefixed name: {t.text()}")
    raise EvalError(f"not usable in a pattern: {t!r}")


def _match_pos(pat, value: Term, m: Mapping) -> Optional[Mapping]:
    if isinstance(pat, Variable):
        return m.extended(pat, value)
    return m if pat == value else None


def _singleton(m: Mapping) -> MappingSet:
    return frozenset((m,))


# ---------------------------------------------------------------------------
# Pattern evaluation


def eval_group(group: GroupPattern, scope: Scope, ctx: EvalContext) -> MappingSet:
    result = UNIT_SET
    filters = []
    for el in group.elements:
        if isinstance(el, FilterEl):
            filters.append(el.expr)
        elif isinstance(el, OptionalPattern):
            result = leftjoin(result, eval_pattern(el.body, scope, ctx))
        else:
            result = join(result, eval_pattern(el, scope, ctx))
    for expr in filters:
        _check_expr(expr)
        result = filter_set(result, expr)
    return result


def eval_pattern(el, scope: Scope, ctx: EvalContext) -> MappingSet:
    if isinstance(el, PatternTriple):
        return _eval_triple(el, scope, ctx)
    if isinstance(el, GroupPattern):
        return eval_group(el, scope, ctx)
    if isinstance(el, UnionPattern):
        return union(
            eval_pattern(el.left, scope, ctx), eval_pattern(el.right, scope, ctx)
        )
    if isinstance(el, OptionalPattern):
        return leftjoin(UNIT_SET, eval_pattern(el.body, scope, ctx))
    if isinstance(el, RecordBlock):
        return _eval_record(el, scope, ctx)
    if isinstance(el, ChangeBlock):
        return _eval_change(el, scope, ctx)
    if isinstance(el, DatasetBlock):
        return _eval_dataset_block(el, scope, ctx)
    if isinstance(el, ChangesBlock):
        return _eval_changes_block(el, scope, ctx)
    if isinstance(el, FilterEl):
        _check_expr(el.expr)
        return filter_set(UNIT_SET, el.expr)
    raise EvalError(f"cannot evaluate element: {el!r}")


def _eval_triple(el: PatternTriple, scope: Scope, ctx: EvalContext) -> MappingSet:
    tp = TriplePattern(_qt(el.s), _qt(el.p), _qt(el.o))
    out: MappingSet = EMPTY_SET
    if scope.kind == DATA:
        for _, vi in scope.data:
            out = union(out, match_bgp(ctx.data_graph(vi), (tp,)))
    else:
        for ci in scope.changes:
            out = union(out, match_bgp(ctx.change_graph(ci), (tp,)))
    return out


def _eval_record(el: RecordBlock, scope: Scope, ctx: EvalContext) -> MappingSet:
    rpat = _qt(el.record)
    spat = _qt(el.subject)
    members = []
    for m in el.members:
        if isinstance(m, RecattBlock):
            members.append((_qt(m.attribute), _qt(m.pair.p), _qt(m.pair.o)))
        else:
            members.append((None, _qt(m.p), _qt(m.o)))
    out = set()
    for _, vi in scope.data:
        for rv in ctx.records(vi):
            base = _match_pos(rpat, rv.iri, EMPTY_MAPPING)
            if base is None:
                continue
            base = _match_pos(spat, rv.subject, base)
            if base is None:
                continue
            current = [base]
            for apat, ppat, opat in members:
                nxt = []
                for mu in current:
                    for attr_iri, p, o in rv.attributes:
                        mu2: Optional[Mapping] = mu
                        if apat is not None:
                            mu2 = _match_pos(apat, attr_iri, mu2)
                            if mu2 is None:
                                continue
                        mu2 = _match_pos(ppat, p, mu2)
                        if mu2 is None:
                            continue
                        mu2 = _match_pos(opat, o, mu2)
                        if mu2 is not None:
                            nxt.append(mu2)
                current = nxt
                if not current:
                    break
            out.update(current)
    return frozenset(out)


def _eval_change(el: ChangeBlock, scope: Scope, ctx: EvalContext) -> MappingSet:
    cpat = _qt(el.change)
    pairs = [(_qt(p.p), _qt(p.o)) for p in el.pairs]
    out: MappingSet = EMPTY_SET
    for ci in scope.changes:
        pats = [TriplePattern(ci.iri, HAS_CHANGE, cpat)]
        pats.extend(TriplePattern(cpat, pp, oo) for pp, oo in pairs)
        out = union(out, match_bgp(ctx.change_graph(ci), pats))
    return out


def _eval_dataset_block(el: DatasetBlock, scope: Scope, ctx: EvalContext) -> MappingSet:
    dpat = _qt(el.dataset)
    archive = ctx.archive
    if isinstance(dpat, Term):
        ds_list = [dpat] if archive.has_dataset(dpat) else []
    else:
        ds_list = archive.datasets()
    mod = el.modifier
    out = set()
    for ds in ds_list:
        seed = EMPTY_MAPPING
        if isinstance(dpat, Variable):
            seed = seed.extended(dpat, ds)
        versions = archive.versions(ds)
        at_var = (
            mod is not None
            and mod.kind == AT
            and isinstance(_qt(mod.first), Variable)
        )
        if at_var:
            vvar = _qt(mod.first)
            for vi in versions:
                s2 = seed.extended(vvar, vi.iri)
                if s2 is None:
                    continue
                child = Scope(DATA, ((ds, vi),), tuple(archive.change_sets(ds)))
                out.update(join(eval_group(el.body, child, ctx), _singleton(s2)))
            continue
        if mod is not None and mod.kind == AT:
            v = _qt(mod.first)
            vis = [vi for vi in versions if vi.iri == v]
            if not vis:
                continue
        else:
            vis = restrict_versions(archive, versions, mod)
        child = Scope(DATA, tuple((ds, vi) for vi in vis), tuple(archive.change_sets(ds)))
        out.update(join(eval_group(el.body, child, ctx), _singleton(seed)))
    return frozenset(out)


def _eval_changes_block(el: ChangesBlock, scope: Scope, ctx: EvalContext) -> MappingSet:
    dpat = _qt(el.dataset)
    archive = ctx.archive
    if isinstance(dpat, Term):
        ds_list = [dpat] if archive.has_dataset(dpat) else []
    else:
        ds_list = archive.datasets()
    mod = el.modifier
    out = set()
    for ds in ds_list:
        seed = EMPTY_MAPPING
        if isinstance(dpat, Variable):
            seed = seed.extended(dpat, ds)
        pool = archive.change_sets(ds)
        binds_pair = (
            mod is not None
            and mod.kind == BETWEEN
            and (
                isinstance(_qt(mod.first), Variable)
                or isinstance(_qt(mod.second), Variable)
            )
        )
        if binds_pair:
            first = _qt(mod.first)
            second = _qt(mod.second)
            for ci in pool:
                s2: Optional[Mapping] = seed
                if isinstance(first, Variable):
                    s2 = s2.extended(first, ci.old)
                elif version_ordinal(archive, ci.old) < version_ordinal(archive, first):
                    s2 = None
                if s2 is not None:
                    if isinstance(second, Variable):
                        s2 = s2.extended(second, ci.new)
                    elif version_ordinal(archive, ci.new) > version_ordinal(archive, second):
                        s2 = None
                if s2 is None:
                    continue
                child = Scope(CHANGES, scope.data, (ci,))
                out.update(join(eval_group(el.body, child, ctx), _singleton(s2)))
            continue
        pool = filter_change_sets(archive, pool, mod)
        child = Scope(CHANGES, scope.data, tuple(pool))
        out.update(join(eval_group(el.body, child, ctx), _singleton(seed)))
    return frozenset(out)


def _expr_terms(e):
    if isinstance(e, (BoolAnd, BoolOr)):
        for p in e.parts:
            yield from _expr_terms(p)
    elif isinstance(e, BoolNot):
        yield from _expr_terms(e.expr)
    elif isinstance(e, Comparison):
        yield e.left
        yield e.right
    elif isinstance(e, Regex):
        yield e.target
    elif isinstance(e, Bound):
        yield e.var


def _check_expr(e) -> None:
    for t in _expr_terms(e):
        if isinstance(t, PName):
            raise EvalError(f"unresolved prefixed name: {t.text()}")


# ---------------------------------------------------------------------------
# Projection, grouping, ordering


@dataclass(frozen=True)
class ResultTable:
    header: Tuple[str, ...]
    rows: Tuple[Tuple[Optional[Term], ...], ...]

    def tsv(self) -> str:
        lines = ["\t".join(f"?{h}" for h in self.header)]
        for row in self.rows:
            lines.append("\t".join("" if c is None else c.ntriples() for c in row))
        return "\n".join(lines) + "\n"

    def json_obj(self) -> dict:
        return {
            "head": {"vars": list(self.header)},
            "rows": [
                {h: (None if c is None else c.ntriples()) for h, c in zip(self.header, row)}
                for row in self.rows
            ],
        }


def _cell_key(c: Optional[Term]) -> bytes:
    return b"" if c is None else c.ntriples().encode("utf-8")


def _row_key(row: Tuple[Optional[Term], ...]) -> Tuple[bytes, ...]:
    return tuple(_cell_key(c) for c in row)


def _int_term(n: int) -> Term:
    return typed(str(n), XSD_INTEGER)


def apply_modifiers(q: Query, mset: MappingSet) -> ResultTable:
    plain = [i for i in q.select if isinstance(i, Variable)]
    aggs = [i for i in q.select if isinstance(i, CountAgg)]
    grouped = bool(q.modifiers.group_by) or bool(aggs)

    rows: List[Tuple[Optional[Term], ...]]
    if q.select_all:
        if grouped:
            raise EvalError("SELECT * cannot be combined with grouping or aggregates")
        names = sorted({v.name for m in mset for v in m.domain()})
        header = tuple(names)
        rows = [tuple(m.get(Variable(n)) for n in names) for m in mset]
    elif grouped:
        keys = q.modifiers.group_by
        for v in plain:
            if v not in keys:
                raise EvalError(f"?{v.name} must be a GROUP BY key to be projected")
        groups: Dict[Tuple[Optional[Term], ...], List[Mapping]] = {}
        if keys:
            for m in mset:
                groups.setdefault(tuple(m.get(k) for k in keys), []).append(m)
        else:
            groups[()] = list(mset)
        header = tuple(
            i.name if isinstance(i, Variable) else i.alias.name for i in q.select
        )
        rows = []
        for kv, members in groups.items():
            kmap = dict(zip(keys, kv))
            row: List[Optional[Term]] = []
            for item in q.select:
                if isinstance(item, Variable):
                    row.append(kmap[item])
                elif item.arg is None:
                    row.append(_int_term(len(members)))
                else:
                    row.append(
                        _int_term(sum(1 for m in members if m.get(item.arg) is not None))
                    )
            rows.append(tuple(row))
    else:
        header = tuple(v.name for v in plain)
        rows = [tuple(m.get(v) for v in plain) for m in mset]

    rows.sort(key=_row_key)
    if q.distinct:
        seen = set()
        uniq = []
        for r in rows:
            if r not in seen:
                seen.add(r)
                uniq.append(r)
        rows = uniq
    if q.modifiers.order_by:
        pos = {h: idx for idx, h in enumerate(header)}
        for key in reversed(q.modifiers.order_by):
            if key.var.name not in pos:
                raise EvalError(f"ORDER BY ?{key.var.name} is not in the projection")
            idx = pos[key.var.name]
            rows.sort(key=lambda r: _cell_key(r[idx]), reverse=not key.ascending)
    if q.modifiers.offset:
        rows = rows[q.modifiers.offset:]
    if q.modifiers.limit is not None:
        rows = rows[: q.modifiers.limit]
    return ResultTable(header, tuple(rows))


def evaluate(q: Query, archive: Archive) -> ResultTable:
    """Full pipeline: scope from FROM clauses, body, then modifiers."""
    scope = root_scope(q, archive)
    ctx = EvalContext(archive)
    mset = eval_group(q.where, scope, ctx)
    return apply_modifiers(q, mset)
