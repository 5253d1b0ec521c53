"""Mapping-set algebra for pattern evaluation.

A mapping is a partial function from variables to terms; mapping sets
are frozensets of mappings.  Two mappings are compatible when they agree
on every shared variable.  Join, union, difference, and left-outer-join
follow the usual set-based definitions, with leftjoin(a, b) equal to
join(a, b) united with diff(a, b).

Filter evaluation is deliberately forgiving: a type error or unbound
variable inside a comparison or regex collapses that leaf to False
rather than aborting the query.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping as TMapping, Optional, Sequence, Tuple, Union

from .terms import (
    XSD_NS,
    Graph,
    Term,
    Triple,
    TriplePattern,
    Variable,
)

# ---------------------------------------------------------------------------
# Mappings


@dataclass(frozen=True)
class Mapping:
    """An immutable partial function Variable -> Term.

    ``bindings`` is sorted by variable name so equal mappings hash equally.
    """

    bindings: Tuple[Tuple[Variable, Term], ...] = ()

    @classmethod
    def of(cls, d: TMapping[Variable, Term]) -> "Mapping":
        return cls(tuple(sorted(d.items(), key=lambda kv: kv[0].name)))

    def get(self, var: Variable) -> Optional[Term]:
        for v, t in self.bindings:
            if v == var:
                return t
        return None

    def domain(self) -> frozenset[Variable]:
        return frozenset(v for v, _ in self.bindings)

    def as_dict(self) -> Dict[Variable, Term]:
        return dict(self.bindings)

    def compatible(self, other: "Mapping") -> bool:
        mine = self.as_dict()
        for v, t in other.bindings:
            if v in mine and mine[v] != t:
                return False
        return True

    def merged(self, other: "Mapping") -> Optional["Mapping"]:
        """Union of two mappings, or None when they disagree somewhere."""
        d = self.as_dict()
        for v, t in other.bindings:
            if v in d:
                if d[v] != t:
                    return None
            else:
                d[v] = t
        return Mapping.of(d)

    def extended(self, var: Variable, term: Term) -> Optional["Mapping"]:
        cur = self.get(var)
        if cur is not None:
            return self if cur == term else None
        d = self.as_dict()
        d[var] = term
        return Mapping.of(d)


EMPTY_MAPPING = Mapping()

MappingSet = frozenset  # of Mapping

EMPTY_SET: MappingSet = frozenset()
UNIT_SET: MappingSet = frozenset((EMPTY_MAPPING,))


def join(a: MappingSet, b: MappingSet) -> MappingSet:
    out = set()
    for m1 in a:
        for m2 in b:
            merged = m1.merged(m2)
            if merged is not None:
                out.add(merged)
    return frozenset(out)


def union(a: MappingSet, b: MappingSet) -> MappingSet:
    return frozenset(a | b)


def diff(a: MappingSet, b: MappingSet) -> MappingSet:
    return frozenset(m1 for m1 in a if not any(m1.compatible(m2) for m2 in b))


def leftjoin(a: MappingSet, b: MappingSet) -> MappingSet:
    return union(join(a, b), diff(a, b))


_MODES = {"join": join, "union": union, "diff": diff, "leftjoin": leftjoin}


def algebra_combine(mode: str, a: MappingSet, b: MappingSet) -> MappingSet:
    """Dispatch on mode name: join, union, diff, or leftjoin."""
    try:
        op = _MODES[mode]
    except KeyError:
        raise ValueError(f"unknown combine mode: {mode!r}") from None
    return op(a, b)


# ---------------------------------------------------------------------------
# Basic graph pattern matching


def _match_position(pat, value: Term, m: Mapping) -> Optional[Mapping]:
    if isinstance(pat, Variable):
        return m.extended(pat, value)
    return m if pat == value else None


def match_triple(tp: TriplePattern, t: Triple, m: Mapping = EMPTY_MAPPING) -> Optional[Mapping]:
    """Extend m so that tp matches t, or None if impossible."""
    for pat, value in ((tp.s, t.s), (tp.p, t.p), (tp.o, t.o)):
        m2 = _match_position(pat, value, m)
        if m2 is None:
            return None
        m = m2
    return m


def match_bgp(
    g: Graph,
    patterns: Sequence[TriplePattern],
    seed: Mapping = EMPTY_MAPPING,
) -> MappingSet:
    """All mappings extending seed under which every pattern occurs in g.

    The domain of each result is the pattern's variables plus seed's domain.
    """
    solutions = [seed]
    for tp in patterns:
        nxt = []
        for m in solutions:
            for t in g:
                m2 = match_triple(tp, t, m)
                if m2 is not None:
                    nxt.append(m2)
        solutions = nxt
        if not solutions:
            break
    return frozenset(solutions)


# ---------------------------------------------------------------------------
# Filters

Operand = Union[Term, Variable]


class FilterExpr:
    """Marker base class for filter expression nodes."""


@dataclass(frozen=True)
class Comparison(FilterExpr):
    op: str  # one of = != < <= > >=
    left: Operand
    right: Operand


@dataclass(frozen=True)
class BoolAnd(FilterExpr):
    parts: Tuple[FilterExpr, ...]


@dataclass(frozen=True)
class BoolOr(FilterExpr):
    parts: Tuple[FilterExpr, ...]


@dataclass(frozen=True)
class BoolNot(FilterExpr):
    expr: FilterExpr


@dataclass(frozen=True)
class Bound(FilterExpr):
    var: Variable


@dataclass(frozen=True)
class Regex(FilterExpr):
    target: Operand
    pattern: str
    flags: str = ""


NUMERIC_DATATYPES = frozenset(
    XSD_NS + local
    for local in (
        "integer",
        "decimal",
        "double",
        "float",
        "int",
        "long",
        "short",
        "byte",
        "nonNegativeInteger",
        "nonPositiveInteger",
        "positiveInteger",
        "negativeInteger",
        "unsignedLong",
        "unsignedInt",
        "unsignedShort",
        "unsignedByte",
    )
)


class _FilterError(Exception):
    pass


def _resolve(operand: Operand, m: Mapping) -> Term:
    if isinstance(operand, Variable):
        t = m.get(operand)
        if t is None:
            raise _FilterError(f"unbound variable ?{operand.name}")
        return t
    return operand


def _numeric(t: Term) -> Optional[float]:
    if t.is_literal and t.datatype in NUMERIC_DATATYPES:
        try:
            return float(t.value)
        except ValueError:
            raise _FilterError(f"ill-typed numeric literal {t.value!r}")
    return None


def _compare(op: str, lt: Term, rt: Term) -> bool:
    ln, rn = _numeric(lt), _numeric(rt)
    if ln is not None and rn is not None:
        pairs = {
            "=": ln == rn,
            "!=": ln != rn,
            "<": ln < rn,
            "<=": ln <= rn,
            ">": ln > rn,
            ">=": ln >= rn,
        }
        return pairs[op]
    if op == "=":
        return lt == rt
    if op == "!=":
        return lt != rt
    # Ordering is defined for literals only; keys are bytewise lexical forms.
    if not (lt.is_literal and rt.is_literal):
        raise _FilterError("ordering comparison on non-literal terms")
    lk, rk = lt.value.encode("utf-8"), rt.value.encode("utf-8")
    pairs = {"<": lk < rk, "<=": lk <= rk, ">": lk > rk, ">=": lk >= rk}
    return pairs[op]


def _eval(expr: FilterExpr, m: Mapping) -> bool:
    if isinstance(expr, Comparison):
        try:
            return _compare(expr.op, _resolve(expr.left, m), _resolve(expr.right, m))
        except _FilterError:
            return False
    if isinstance(expr, BoolAnd):
        return all(_eval(p, m) for p in expr.parts)
    if isinstance(expr, BoolOr):
        return any(_eval(p, m) for p in expr.parts)
    if isinstance(expr, BoolNot):
        return not _eval(expr.expr, m)
    if isinstance(expr, Bound):
        return m.get(expr.var) is not None
    if isinstance(expr, Regex):
        try:
            t = _resolve(expr.target, m)
            if not t.is_literal:
                return False
            flags = re.IGNORECASE if "i" in expr.flags else 0
            return re.search(expr.pattern, t.value, flags) is not None
        except (_FilterError, re.error):
            return False
    raise TypeError(f"not a filter expression: {expr!r}")


def eval_filter(expr: FilterExpr, m: Mapping) -> bool:
    """Evaluate a filter under a mapping.

    Errors (unbound variables, type mismatches, bad regexes) collapse the
    offending comparison or regex leaf to False; boolean connectives then
    combine the collapsed values normally.
    """
    return _eval(expr, m)


def filter_set(ms: MappingSet, expr: FilterExpr) -> MappingSet:
    return frozenset(m for m in ms if eval_filter(expr, m))
