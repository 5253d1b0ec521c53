"""Reification of version graphs into record and schema sets, and back.

A version's triples are grouped by subject.  Data statements become
records holding one attribute node per (predicate, object) pair; schema
statements (class axioms and the like) become schema objects of the same
shape in a separate set.  All minted IRIs are content hashes over the
version IRI and the constituent terms, so re-reifying the same graph
under the same version reproduces identical nodes.

Blank nodes are skolemized before reification; the original labels are
not recoverable, so round trips are exact only for blank-free graphs and
otherwise exact up to the skolem substitution.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .terms import Graph, Term, Triple, iri
from . import vocab
from .vocab import (
    HAS_RECORD,
    HAS_RECORD_ATTRIBUTE,
    HAS_SCHEMA_OBJECT,
    OBJECT,
    PREDICATE,
    RDF_TYPE,
    RECORD,
    RECORD_ATTRIBUTE,
    RECORD_SET,
    SCHEMA_OBJECT,
    SCHEMA_SET,
    SUBJECT,
    is_schema_statement,
)


class StructureError(ValueError):
    """A reified graph is missing required arcs (names the broken node)."""


def _digest(*parts: str) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()[:16]


def skolem_iri(version: Term, label: str) -> Term:
    return iri("urn:skolem:" + _digest("skolem", version.value, label))


def mint_entity_iri(kind: str, version: Term, *terms: Term) -> Term:
    """Deterministic IRI for a record/attribute/change-like entity."""
    return iri(
        f"urn:diachron:{kind}:" + _digest(kind, version.value, *(t.ntriples() for t in terms))
    )


def record_set_iri(version: Term) -> Term:
    return iri(version.value + "/recordSet")


def schema_set_iri(version: Term) -> Term:
    return iri(version.value + "/schemaSet")


def skolemize(g: Graph, version: Term) -> Graph:
    """Replace every blank node with a deterministic skolem IRI."""
    if not any(t.s.is_blank or t.o.is_blank for t in g):
        return g

    def sk(t: Term) -> Term:
        return skolem_iri(version, t.value) if t.is_blank else t

    return Graph.of(Triple(sk(t.s), sk(t.p), sk(t.o)) for t in g)


def reify(g: Graph, version: Term) -> Tuple[Graph, Graph]:
    """Reify a version graph into (record set graph, schema set graph).

    Blank nodes are skolemized first.  The two sets partition the input:
    de-reifying them together restores exactly the (skolemized) graph.
    """
    g = skolemize(g, version)
    records: Dict[Term, List[Triple]] = {}
    schema: Dict[Term, List[Triple]] = {}
    for t in g:
        bucket = schema if is_schema_statement(t.p, t.o) else records
        bucket.setdefault(t.s, []).append(t)

    rs = _build_set(
        records,
        version,
        "record",
        set_iri=record_set_iri(version),
        set_class=RECORD_SET,
        member_prop=HAS_RECORD,
        member_class=RECORD,
    )
    ss = _build_set(
        schema,
        version,
        "schema",
        set_iri=schema_set_iri(version),
        set_class=SCHEMA_SET,
        member_prop=HAS_SCHEMA_OBJECT,
        member_class=SCHEMA_OBJECT,
    )
    return rs, ss


def _build_set(
    grouped: Dict[Term, List[Triple]],
    version: Term,
    kind: str,
    set_iri: Term,
    set_class: Term,
    member_prop: Term,
    member_class: Term,
) -> Graph:
    out: List[Triple] = [Triple(set_iri, RDF_TYPE, set_class)]
    for subject, triples in grouped.items():
        member = mint_entity_iri(kind, version, subject)
        out.append(Triple(set_iri, member_prop, member))
        out.append(Triple(member, RDF_TYPE, member_class))
        out.append(Triple(member, SUBJECT, subject))
        for t in triples:
            attr = mint_entity_iri(kind + "-att", version, subject, t.p, t.o)
            out.append(Triple(member, HAS_RECORD_ATTRIBUTE, attr))
            out.append(Triple(attr, RDF_TYPE, RECORD_ATTRIBUTE))
            out.append(Triple(attr, PREDICATE, t.p))
            out.append(Triple(attr, OBJECT, t.o))
    return Graph.of(out)


@dataclass(frozen=True)
class RecordView:
    """A parsed record (or schema object): its IRI, subject, and attributes."""

    iri: Term
    subject: Term
    attributes: Tuple[Tuple[Term, Term, Term], ...]  # (attribute iri, p, o)


def parse_records(reified: Graph) -> List[RecordView]:
    """Read record/schema-object structures out of a reified graph.

    Members are found through their rdf:type arcs, so a combined
    record-plus-schema graph parses fine.  Raises StructureError naming
    the offending node when required arcs are missing.
    """
    by_subject: Dict[Term, List[Triple]] = {}
    for t in reified:
        by_subject.setdefault(t.s, []).append(t)

    members = sorted(
        {
            t.s
            for t in reified
            if t.p == RDF_TYPE and t.o in (RECORD, SCHEMA_OBJECT)
        },
        key=lambda x: x.value,
    )
    views = []
    for member in members:
        arcs = by_subject.get(member, [])
        subjects = [t.o for t in arcs if t.p == SUBJECT]
        if len(subjects) != 1:
            raise StructureError(
                f"record {member.ntriples()} must have exactly one subject arc"
            )
        attrs = []
        for t in arcs:
            if t.p != HAS_RECORD_ATTRIBUTE:
                continue
            attr = t.o
            attr_arcs = by_subject.get(attr, [])
            preds = [a.o for a in attr_arcs if a.p == PREDICATE]
            objs = [a.o for a in attr_arcs if a.p == OBJECT]
            if len(preds) != 1 or len(objs) != 1:
                raise StructureError(
                    f"attribute {attr.ntriples()} must have exactly one "
                    "predicate and one object arc"
                )
            attrs.append((attr, preds[0], objs[0]))
        attrs.sort(key=lambda a: (a[1].ntriples(), a[2].ntriples(), a[0].value))
        views.append(RecordView(member, subjects[0], tuple(attrs)))
    return views


def dereify(record_set: Graph, schema_set: Graph = Graph()) -> Graph:
    """Rebuild the original version graph from its reified sets."""
    triples = []
    for view in parse_records(record_set.union(schema_set)):
        for _, p, o in view.attributes:
            triples.append(Triple(view.subject, p, o))
    return Graph.of(triples)
