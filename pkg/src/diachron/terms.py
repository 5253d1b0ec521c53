"""Core RDF value types: terms, triples, graphs, and pattern atoms.

Everything here is immutable and hashable.  A Graph is a plain set of
triples; duplicate insertions collapse silently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
XSD_STRING = XSD_NS + "string"
XSD_INTEGER = XSD_NS + "integer"
XSD_DECIMAL = XSD_NS + "decimal"
XSD_BOOLEAN = XSD_NS + "boolean"
XSD_DATE = XSD_NS + "date"
RDF_LANG_STRING = RDF_NS + "langString"
RDF_TYPE = RDF_NS + "type"

IRI = "iri"
BLANK = "blank"
LITERAL = "literal"

_KINDS = (IRI, BLANK, LITERAL)
_BLANK_LABEL = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.-]*$")
_VAR_NAME = re.compile(r"^[A-Za-z0-9_]+$")
_LANG_TAG = re.compile(r"^[A-Za-z]+(-[A-Za-z0-9]+)*$")


class TermError(ValueError):
    """Raised for structurally invalid terms, triples, or variables."""


@dataclass(frozen=True)
class Term:
    """An RDF term: IRI, blank node, or literal.

    ``value`` holds the IRI string, the blank node label, or the lexical
    form depending on ``kind``.  Literals always carry a datatype (plain
    literals get xsd:string) and a language tag forces rdf:langString.
    IRIs are kept verbatim; relative forms such as ``<EFO>`` are accepted
    because query and command-line usage relies on them as opaque names.
    """

    kind: str
    value: str
    datatype: Optional[str] = None
    lang: Optional[str] = None
    # Terms are hashed constantly (store indexes, graphs, mappings) and
    # serialized constantly (minting, sort keys, output); recomputing
    # either per call is measurable, so both are cached per instance.
    _hash: int = field(init=False, repr=False, compare=False, default=0)
    _nt: Optional[str] = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise TermError(f"unknown term kind: {self.kind!r}")
        if self.kind == LITERAL:
            if self.datatype is None:
                raise TermError("literal term requires a datatype")
            if self.lang is not None:
                if self.datatype != RDF_LANG_STRING:
                    raise TermError("language-tagged literal must use rdf:langString")
                if not _LANG_TAG.match(self.lang):
                    raise TermError(f"malformed language tag: {self.lang!r}")
            elif self.datatype == RDF_LANG_STRING:
                raise TermError("rdf:langString literal requires a language tag")
        else:
            if self.datatype is not None or self.lang is not None:
                raise TermError(f"{self.kind} term cannot carry literal fields")
            if not self.value:
                raise TermError(f"{self.kind} term requires a non-empty value")
            if self.kind == IRI and _IRI_FORBIDDEN.search(self.value):
                raise TermError(f"forbidden character in IRI: {self.value!r}")
            if self.kind == BLANK and not _BLANK_LABEL.match(self.value):
                raise TermError(f"malformed blank node label: {self.value!r}")
        object.__setattr__(
            self, "_hash", hash((self.kind, self.value, self.datatype, self.lang))
        )

    def __hash__(self) -> int:
        return self._hash

    @property
    def is_iri(self) -> bool:
        return self.kind == IRI

    @property
    def is_blank(self) -> bool:
        return self.kind == BLANK

    @property
    def is_literal(self) -> bool:
        return self.kind == LITERAL

    def ntriples(self) -> str:
        """Canonical N-Triples token for this term."""
        if self._nt is not None:
            return self._nt
        if self.kind == IRI:
            out = f"<{self.value}>"
        elif self.kind == BLANK:
            out = f"_:{self.value}"
        else:
            out = f'"{escape_literal(self.value)}"'
            if self.lang is not None:
                out = f"{out}@{self.lang}"
            elif self.datatype != XSD_STRING:
                out = f"{out}^^<{self.datatype}>"
        object.__setattr__(self, "_nt", out)
        return out

    def __repr__(self) -> str:  # keeps pytest diffs readable
        return f"Term({self.ntriples()})"


# Characters never allowed inside an IRIREF token.
_IRI_FORBIDDEN = re.compile(r'[\x00-\x20<>"{}|^`\\]')


def iri(value: str) -> Term:
    return Term(IRI, value)


def blank(label: str) -> Term:
    return Term(BLANK, label)


def literal(lex: str, datatype: Optional[str] = None, lang: Optional[str] = None) -> Term:
    if lang is not None:
        return Term(LITERAL, lex, RDF_LANG_STRING, lang)
    return Term(LITERAL, lex, datatype or XSD_STRING)


def typed(lex: str, datatype: str) -> Term:
    return Term(LITERAL, lex, datatype)


def escape_literal(s: str) -> str:
    """Escape a literal lexical form for canonical N-Triples output."""
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


@dataclass(frozen=True)
class Variable:
    """A query variable.  The name excludes the leading ``?``."""

    name: str
    _hash: int = field(init=False, repr=False, compare=False, default=0)

    def __post_init__(self) -> None:
        if not _VAR_NAME.match(self.name):
            raise TermError(f"malformed variable name: {self.name!r}")
        object.__setattr__(self, "_hash", hash(("?", self.name)))

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Variable(?{self.name})"


PatternTermType = Union[Term, Variable]


@dataclass(frozen=True)
class Triple:
    """A ground RDF triple.  Subjects are IRIs or blank nodes, predicates IRIs."""

    s: Term
    p: Term
    o: Term
    _hash: int = field(init=False, repr=False, compare=False, default=0)
    _nt: Optional[str] = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        if self.s.kind == LITERAL:
            raise TermError("triple subject cannot be a literal")
        if self.p.kind != IRI:
            raise TermError("triple predicate must be an IRI")
        object.__setattr__(self, "_hash", hash((self.s, self.p, self.o)))

    def __hash__(self) -> int:
        return self._hash

    def ntriples(self) -> str:
        if self._nt is None:
            object.__setattr__(
                self, "_nt", f"{self.s.ntriples()} {self.p.ntriples()} {self.o.ntriples()} ."
            )
        return self._nt


@dataclass(frozen=True)
class TriplePattern:
    """A triple pattern; any position may hold a variable.

    Construction does not police positions.  ``check_pattern`` applies the
    placement rules (no literal predicates; literal subjects only when
    explicitly permitted).
    """

    s: PatternTermType
    p: PatternTermType
    o: PatternTermType

    def variables(self) -> frozenset[Variable]:
        return frozenset(x for x in (self.s, self.p, self.o) if isinstance(x, Variable))


class PatternError(ValueError):
    """Raised when a triple pattern breaks the position rules."""


def check_pattern(tp: TriplePattern, allow_literal_subject: bool = False) -> TriplePattern:
    if isinstance(tp.p, Term) and tp.p.kind != IRI:
        raise PatternError("pattern predicate must be an IRI or variable")
    if isinstance(tp.s, Term) and tp.s.kind == LITERAL and not allow_literal_subject:
        raise PatternError("literal subjects are disabled by default")
    return tp


@dataclass(frozen=True)
class Graph:
    """An immutable set of triples."""

    triples: frozenset[Triple] = frozenset()

    @classmethod
    def of(cls, items: Iterable[Triple]) -> "Graph":
        return cls(frozenset(items))

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples)

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, t: object) -> bool:
        return t in self.triples

    def __bool__(self) -> bool:
        return bool(self.triples)

    def union(self, other: Union["Graph", Iterable[Triple]]) -> "Graph":
        items = other.triples if isinstance(other, Graph) else frozenset(other)
        return Graph(self.triples | items)

    def difference(self, other: Union["Graph", Iterable[Triple]]) -> "Graph":
        items = other.triples if isinstance(other, Graph) else frozenset(other)
        return Graph(self.triples - items)

    def subjects(self) -> frozenset[Term]:
        return frozenset(t.s for t in self.triples)

    def sorted_triples(self) -> list[Triple]:
        """Triples in canonical (bytewise serialized) order."""
        return sorted(self.triples, key=lambda t: t.ntriples().encode("utf-8"))


EMPTY_GRAPH = Graph()
