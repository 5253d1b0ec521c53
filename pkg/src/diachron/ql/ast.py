"""Query AST node types.

Prefixed names with a known prefix are resolved to full IRIs while
parsing; a PName node survives only for unknown prefixes so that the
text still parses and pretty-prints.  Evaluation rejects leftovers.

Position fields never participate in equality, so structural comparison
of parse results ignores formatting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

from ..algebra import FilterExpr
from ..terms import Term, Variable

Pos = Tuple[int, int]


@dataclass(frozen=True)
class PName:
    """An unresolved prefixed name kept verbatim."""

    prefix: str
    local: str

    def text(self) -> str:
        return f"{self.prefix}:{self.local}"


QTerm = Union[Term, Variable, PName]

AT = "at"
BEFORE = "before"
AFTER = "after"
BETWEEN = "between"


@dataclass(frozen=True)
class VersionMod:
    """AT/BEFORE/AFTER VERSION x, or BETWEEN VERSIONS x y."""

    kind: str
    first: QTerm
    second: Optional[QTerm] = None


@dataclass(frozen=True)
class SourceClause:
    kind: str  # "dataset" | "changes"
    source: QTerm
    modifier: Optional[VersionMod] = None
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class CountAgg:
    """COUNT(?x) AS ?alias, or COUNT(*) AS ?alias when arg is None."""

    arg: Optional[Variable]
    alias: Variable


SelectItem = Union[Variable, CountAgg]


@dataclass(frozen=True)
class PatternTriple:
    s: QTerm
    p: QTerm
    o: QTerm


@dataclass(frozen=True)
class Pair:
    """A predicate/object pair inside RECORD or CHANGE braces."""

    p: QTerm
    o: QTerm


@dataclass(frozen=True)
class RecattBlock:
    attribute: QTerm
    pair: Pair


@dataclass(frozen=True)
class RecordBlock:
    record: QTerm
    subject: QTerm
    members: Tuple[Union[Pair, RecattBlock], ...]
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class ChangeBlock:
    change: QTerm
    pairs: Tuple[Pair, ...]
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class FilterEl:
    expr: FilterExpr


@dataclass(frozen=True)
class GroupPattern:
    elements: Tuple["Element", ...]


@dataclass(frozen=True)
class DatasetBlock:
    dataset: QTerm
    modifier: Optional[VersionMod]
    body: GroupPattern
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class ChangesBlock:
    dataset: QTerm
    modifier: Optional[VersionMod]
    body: GroupPattern
    pos: Pos = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class UnionPattern:
    left: "Element"
    right: "Element"


@dataclass(frozen=True)
class OptionalPattern:
    body: "Element"


Element = Union[
    PatternTriple,
    FilterEl,
    RecordBlock,
    ChangeBlock,
    GroupPattern,
    DatasetBlock,
    ChangesBlock,
    UnionPattern,
    OptionalPattern,
]


@dataclass(frozen=True)
class OrderKey:
    var: Variable
    ascending: bool = True


@dataclass(frozen=True)
class Modifiers:
    group_by: Tuple[Variable, ...] = ()
    order_by: Tuple[OrderKey, ...] = ()
    limit: Optional[int] = None
    offset: Optional[int] = None


EMPTY_MODIFIERS = Modifiers()


@dataclass(frozen=True)
class Query:
    distinct: bool
    select_all: bool
    select: Tuple[SelectItem, ...]
    sources: Tuple[SourceClause, ...]
    where: GroupPattern
    modifiers: Modifiers = EMPTY_MODIFIERS
