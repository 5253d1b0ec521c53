"""Change detection and delta application between version graphs.

Low-level changes are attribute additions and deletions computed by set
difference over de-reified triples.  A delete/add pair on the same
subject whose predicate is rdfs:label is promoted to a single
label-modification change whose parameter1/parameter2 reference the old
and new attribute IRIs.  Label modifications additionally carry their
subject and both lexical values so a stored change set remains
self-contained: applying it never needs the version it points at.

Applying a change set re-reifies: the base graph is de-reified, the
triple-level delta applied, and the result reified under the target
version so minted IRIs come out exactly as a direct ingest would.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .reify import dereify, mint_entity_iri, reify, _digest
from .terms import Graph, Term, Triple, iri
from .vocab import (
    ADD_ATTRIBUTE,
    CHANGE_SET,
    DELETE_ATTRIBUTE,
    HAS_CHANGE,
    LABEL_MODIFICATION,
    NEW_VERSION,
    OBJECT,
    OLD_VERSION,
    PARAMETER_1,
    PARAMETER_2,
    PREDICATE,
    RDF_TYPE,
    RDFS_LABEL,
    SUBJECT,
)
from . import vocab

# Extra recovery parameters on label modifications.
OLD_OBJECT = iri(vocab.DIACHRON_NS + "oldObject")
NEW_OBJECT = iri(vocab.DIACHRON_NS + "newObject")

FORWARD = "forward"
BACKWARD = "backward"

CHANGE_TYPES = (ADD_ATTRIBUTE, DELETE_ATTRIBUTE, LABEL_MODIFICATION)


class IntegrityError(ValueError):
    """A change set does not fit the graph it is applied to."""


@dataclass(frozen=True)
class Change:
    """One change: its IRI, type, and ordered (parameter, value) pairs."""

    iri: Term
    type: Term
    parameters: Tuple[Tuple[Term, Term], ...]

    def parameter(self, prop: Term) -> Optional[Term]:
        for p, v in self.parameters:
            if p == prop:
                return v
        return None


@dataclass(frozen=True)
class ChangeSet:
    iri: Term
    old: Term
    new: Term
    changes: Tuple[Change, ...]


def changeset_iri(old: Term, new: Term) -> Term:
    return iri("urn:diachron:changeset:" + _digest("changeset", old.value, new.value))


def _mint_change(old: Term, new: Term, ctype: Term, params: Tuple[Tuple[Term, Term], ...]) -> Term:
    parts = [old.value, new.value, ctype.value]
    for p, v in params:
        parts.append(p.ntriples())
        parts.append(v.ntriples())
    return iri("urn:diachron:change:" + _digest("change", *parts))


def _attribute_change(old: Term, new: Term, ctype: Term, t: Triple) -> Change:
    params = ((SUBJECT, t.s), (PREDICATE, t.p), (OBJECT, t.o))
    return Change(_mint_change(old, new, ctype, params), ctype, params)


def _change_sort_key(c: Change):
    return (
        c.type.value,
        tuple((p.ntriples(), v.ntriples()) for p, v in c.parameters),
    )


def diff_record_sets(
    old_reified: Graph,
    new_reified: Graph,
    old_version: Term,
    new_version: Term,
    old_data: Optional[Graph] = None,
    new_data: Optional[Graph] = None,
) -> List[Change]:
    """Low-level delta between two reified graphs, compared on de-reified triples.

    Sound and complete: applying the deletions and additions to the old
    triple set yields exactly the new one.  Output order is deterministic.
    Callers that already hold a side's de-reified triples can pass them
    to skip the de-reification here.
    """
    if old_data is None:
        old_data = dereify(old_reified)
    if new_data is None:
        new_data = dereify(new_reified)
    changes = [
        _attribute_change(old_version, new_version, DELETE_ATTRIBUTE, t)
        for t in old_data.difference(new_data)
    ]
    changes.extend(
        _attribute_change(old_version, new_version, ADD_ATTRIBUTE, t)
        for t in new_data.difference(old_data)
    )
    changes.sort(key=_change_sort_key)
    return changes


def detect_high_level(
    changes: Iterable[Change],
    old_version: Term,
    new_version: Term,
) -> List[Change]:
    """Promote delete/add pairs of rdfs:label statements on one subject.

    When a subject both loses and gains label attributes, the sorted
    deletions and additions are paired off positionally; any leftover
    stays a low-level change.
    """
    deletes: Dict[Term, List[Change]] = {}
    adds: Dict[Term, List[Change]] = {}
    rest: List[Change] = []
    for c in changes:
        if c.type in (DELETE_ATTRIBUTE, ADD_ATTRIBUTE) and c.parameter(PREDICATE) == RDFS_LABEL:
            bucket = deletes if c.type == DELETE_ATTRIBUTE else adds
            bucket.setdefault(c.parameter(SUBJECT), []).append(c)
        else:
            rest.append(c)

    out = list(rest)
    for subject in set(deletes) | set(adds):
        dels = sorted(deletes.get(subject, []), key=_change_sort_key)
        ads = sorted(adds.get(subject, []), key=_change_sort_key)
        for dc, ac in zip(dels, ads):
            old_obj = dc.parameter(OBJECT)
            new_obj = ac.parameter(OBJECT)
            old_attr = mint_entity_iri("record-att", old_version, subject, RDFS_LABEL, old_obj)
            new_attr = mint_entity_iri("record-att", new_version, subject, RDFS_LABEL, new_obj)
            params = (
                (PARAMETER_1, old_attr),
                (PARAMETER_2, new_attr),
                (SUBJECT, subject),
                (OLD_OBJECT, old_obj),
                (NEW_OBJECT, new_obj),
            )
            out.append(
                Change(_mint_change(old_version, new_version, LABEL_MODIFICATION, params),
                       LABEL_MODIFICATION, params)
            )
        leftover = dels[len(ads):] + ads[len(dels):]
        out.extend(leftover)
    out.sort(key=_change_sort_key)
    return out


def compute_change_set(
    old_reified: Graph,
    new_reified: Graph,
    old_version: Term,
    new_version: Term,
    old_data: Optional[Graph] = None,
    new_data: Optional[Graph] = None,
) -> ChangeSet:
    low = diff_record_sets(
        old_reified, new_reified, old_version, new_version, old_data, new_data
    )
    high = detect_high_level(low, old_version, new_version)
    return ChangeSet(changeset_iri(old_version, new_version), old_version, new_version, tuple(high))


def serialize_change_set(cs: ChangeSet) -> Graph:
    """The change set as triples: set node, membership arcs, change nodes."""
    triples = [
        Triple(cs.iri, RDF_TYPE, CHANGE_SET),
        Triple(cs.iri, OLD_VERSION, cs.old),
        Triple(cs.iri, NEW_VERSION, cs.new),
    ]
    for c in cs.changes:
        triples.append(Triple(cs.iri, HAS_CHANGE, c.iri))
        triples.append(Triple(c.iri, RDF_TYPE, c.type))
        for p, v in c.parameters:
            triples.append(Triple(c.iri, p, v))
    return Graph.of(triples)


_PARAM_ORDER = {
    p.value: i
    for i, p in enumerate((PARAMETER_1, PARAMETER_2, SUBJECT, PREDICATE, OBJECT, OLD_OBJECT, NEW_OBJECT))
}


def parse_change_set(g: Graph) -> ChangeSet:
    """Read a stored change-set graph back into a ChangeSet."""
    nodes = [t.s for t in g if t.p == RDF_TYPE and t.o == CHANGE_SET]
    if len(nodes) != 1:
        raise IntegrityError("change-set graph must contain exactly one change-set node")
    cs_node = nodes[0]
    old = new = None
    members = []
    by_subject: Dict[Term, List[Triple]] = {}
    for t in g:
        by_subject.setdefault(t.s, []).append(t)
        if t.s == cs_node:
            if t.p == OLD_VERSION:
                old = t.o
            elif t.p == NEW_VERSION:
                new = t.o
            elif t.p == HAS_CHANGE:
                members.append(t.o)
    if old is None or new is None:
        raise IntegrityError(f"change set {cs_node.ntriples()} lacks version arcs")

    changes = []
    for node in members:
        ctype = None
        params = []
        for t in by_subject.get(node, []):
            if t.p == RDF_TYPE and t.o in CHANGE_TYPES:
                ctype = t.o
            elif t.p != RDF_TYPE:
                params.append((t.p, t.o))
        if ctype is None:
            raise IntegrityError(f"change {node.ntriples()} has no recognized type")
        params.sort(key=lambda pv: (_PARAM_ORDER.get(pv[0].value, 99), pv[1].ntriples()))
        changes.append(Change(node, ctype, tuple(params)))
    changes.sort(key=_change_sort_key)
    return ChangeSet(cs_node, old, new, tuple(changes))


def _delta(cs: ChangeSet, direction: str) -> Tuple[List[Triple], List[Triple]]:
    """(deletions, additions) at triple level for the given direction."""
    dels: List[Triple] = []
    adds: List[Triple] = []
    for c in cs.changes:
        if c.type == LABEL_MODIFICATION:
            s = c.parameter(SUBJECT)
            old_o = c.parameter(OLD_OBJECT)
            new_o = c.parameter(NEW_OBJECT)
            if s is None or old_o is None or new_o is None:
                raise IntegrityError(f"label modification {c.iri.ntriples()} lacks recovery parameters")
            dels.append(Triple(s, RDFS_LABEL, old_o))
            adds.append(Triple(s, RDFS_LABEL, new_o))
            continue
        s, p, o = c.parameter(SUBJECT), c.parameter(PREDICATE), c.parameter(OBJECT)
        if s is None or p is None or o is None:
            raise IntegrityError(f"change {c.iri.ntriples()} lacks subject/predicate/object roles")
        t = Triple(s, p, o)
        if c.type == DELETE_ATTRIBUTE:
            dels.append(t)
        elif c.type == ADD_ATTRIBUTE:
            adds.append(t)
        else:
            raise IntegrityError(f"unknown change type {c.type.ntriples()}")
    if direction == BACKWARD:
        dels, adds = adds, dels
    elif direction != FORWARD:
        raise ValueError(f"direction must be forward or backward, not {direction!r}")
    return dels, adds


def apply_change_set(base: Graph, cs: ChangeSet, direction: str = FORWARD) -> Graph:
    """Apply a change set to a reified base graph, returning a reified graph.

    Forward expects the old version's reified content and produces the
    new version's; backward inverts.  The result is re-reified under the
    target version, so node IRIs equal those of a direct ingest.
    Deleting an absent attribute raises IntegrityError naming the triple.
    """
    data = dereify(base)
    dels, adds = _delta(cs, direction)
    for t in dels:
        if t not in data:
            raise IntegrityError(f"cannot delete absent attribute: {t.ntriples()}")
    target = cs.new if direction == FORWARD else cs.old
    result = data.difference(dels).union(adds)
    rs, ss = reify(result, target)
    return rs.union(ss)
