"""The archive: diachronic datasets, their versions, and change sets.

Layout on top of the quad store:

* the dictionary graph holds dataset nodes, version registrations
  (type, date, ordinal, storage policy, counts, record/schema set
  links), change-set registrations, and stored resource queries;
* each record set, schema set, and change set is its own named graph.

Versions are immutable once ingested.  A FULL version stores its
reified graphs; a DELTA version stores only the change set against its
predecessor and is rebuilt on demand from the nearest earlier FULL
version.  Every ingest after the first also stores the change set
against the predecessor, so diffs and change queries work on archives
of any policy mix.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as _date
from typing import Dict, List, Optional, Tuple

from .changes import (
    ChangeSet,
    apply_change_set,
    compute_change_set,
    parse_change_set,
    serialize_change_set,
    FORWARD,
)
from .reify import (
    dereify,
    parse_records,
    record_set_iri,
    reify,
    schema_set_iri,
    skolemize,
)
from .store import Quad, QuadStore
from .terms import Graph, Term, Triple, XSD_INTEGER, iri, literal, typed
from .vocab import (
    ATTRIBUTE_COUNT,
    CHANGE_SET,
    DATASET,
    DCT_DATE,
    DESCRIPTION_QUERY,
    DIACHRONIC_DATASET,
    DIACHRONIC_RESOURCE,
    HAS_CHANGE_SET,
    HAS_INSTANTIATION,
    HAS_RECORD_SET,
    HAS_SCHEMA_SET,
    NEW_VERSION,
    OLD_VERSION,
    RDF_TYPE,
    RECORD_COUNT,
    STORAGE_POLICY,
    VERSION_ORDINAL,
    XSD_DATE_T,
)

FULL = "FULL"
DELTA = "DELTA"


class ArchiveError(ValueError):
    """Bad archive operation: duplicate version, unknown IRI, and the like."""


@dataclass(frozen=True)
class VersionInfo:
    iri: Term
    dataset: Term
    ordinal: int
    policy: str
    date: Optional[str]
    record_set: Term
    schema_set: Term
    record_count: int
    attribute_count: int


@dataclass(frozen=True)
class ChangeSetInfo:
    iri: Term
    dataset: Term
    old: Term
    new: Term


class Archive:
    """Read/write view over a quad store holding the diachron layout."""

    def __init__(self, store: Optional[QuadStore] = None):
        self.store = store if store is not None else QuadStore()
        # The most recently ingested version: IRI, reified pair, and
        # skolemized data.  A run of consecutive ingests then never
        # rebuilds or re-dereifies its predecessor, even when the
        # predecessor is delta-stored.
        self._last_ingested: Optional[Tuple[Term, Graph, Graph, Graph]] = None

    # -- dictionary reads -------------------------------------------------

    def _dict_graph(self) -> Graph:
        return self.store.get_graph(self.store.dictionary)

    def datasets(self) -> List[Term]:
        g = self._dict_graph()
        out = sorted(
            (t.s for t in g if t.p == RDF_TYPE and t.o == DIACHRONIC_DATASET),
            key=lambda x: x.value,
        )
        return out

    def has_dataset(self, dataset: Term) -> bool:
        return Triple(dataset, RDF_TYPE, DIACHRONIC_DATASET) in self._dict_graph()

    def versions(self, dataset: Term) -> List[VersionInfo]:
        """All versions of a dataset in ingest (ordinal) order."""
        g = self._dict_graph()
        members = [t.o for t in g if t.s == dataset and t.p == HAS_INSTANTIATION]
        infos = [self._version_info(v, dataset, g) for v in members]
        infos.sort(key=lambda vi: vi.ordinal)
        return infos

    def _version_info(self, v: Term, dataset: Term, g: Graph) -> VersionInfo:
        ordinal = policy = date = None
        rcount = acount = 0
        rs = record_set_iri(v)
        ss = schema_set_iri(v)
        for t in g:
            if t.s != v:
                continue
            if t.p == VERSION_ORDINAL:
                ordinal = int(t.o.value)
            elif t.p == STORAGE_POLICY:
                policy = t.o.value
            elif t.p == DCT_DATE:
                date = t.o.value
            elif t.p == RECORD_COUNT:
                rcount = int(t.o.value)
            elif t.p == ATTRIBUTE_COUNT:
                acount = int(t.o.value)
            elif t.p == HAS_RECORD_SET:
                rs = t.o
            elif t.p == HAS_SCHEMA_SET:
                ss = t.o
        if ordinal is None or policy is None:
            raise ArchiveError(f"version {v.ntriples()} is not fully registered")
        return VersionInfo(v, dataset, ordinal, policy, date, rs, ss, rcount, acount)

    def version_info(self, version: Term) -> VersionInfo:
        g = self._dict_graph()
        for t in g:
            if t.p == HAS_INSTANTIATION and t.o == version:
                return self._version_info(version, t.s, g)
        raise ArchiveError(f"unknown version: {version.ntriples()}")

    def has_version(self, version: Term) -> bool:
        g = self._dict_graph()
        return any(t.p == HAS_INSTANTIATION and t.o == version for t in g)

    def change_sets(self, dataset: Optional[Term] = None) -> List[ChangeSetInfo]:
        g = self._dict_graph()
        links = {}
        for t in g:
            if t.p == HAS_CHANGE_SET:
                links[t.o] = t.s
        infos = []
        for cs_iri, ds in links.items():
            if dataset is not None and ds != dataset:
                continue
            old = new = None
            for t in g:
                if t.s == cs_iri and t.p == OLD_VERSION:
                    old = t.o
                elif t.s == cs_iri and t.p == NEW_VERSION:
                    new = t.o
            if old is not None and new is not None:
                infos.append(ChangeSetInfo(cs_iri, ds, old, new))
        infos.sort(key=lambda ci: ci.iri.value)
        return infos

    # -- ingest -----------------------------------------------------------

    def ingest_version(
        self,
        dataset: Term,
        source: Graph,
        version: Optional[Term] = None,
        date: Optional[str] = None,
        policy: str = FULL,
    ) -> VersionInfo:
        """Register a new version of a dataset from its source graph.

        The first version of a dataset must be FULL.  Returns the new
        version's descriptor.
        """
        if policy not in (FULL, DELTA):
            raise ArchiveError(f"unknown storage policy: {policy!r}")
        if date is not None:
            try:
                _date.fromisoformat(date)
            except ValueError as exc:
                raise ArchiveError(f"bad date {date!r}: expected YYYY-MM-DD") from exc

        existing = self.versions(dataset) if self.has_dataset(dataset) else []
        ordinal = len(existing) + 1
        if version is None:
            version = iri(f"{dataset.value}/version/{ordinal}")
        if self.has_version(version):
            raise ArchiveError(f"version already ingested: {version.ntriples()}")
        if not existing and policy == DELTA:
            raise ArchiveError("the first version of a dataset must be FULL")

        data = skolemize(source, version)
        rs_graph, ss_graph = reify(data, version)
        records = parse_records(rs_graph)
        rcount = len(records)
        acount = sum(len(r.attributes) for r in records)

        rs_iri = record_set_iri(version)
        ss_iri = schema_set_iri(version)
        dict_triples = []
        if not existing and not self.has_dataset(dataset):
            dict_triples.append(Triple(dataset, RDF_TYPE, DIACHRONIC_DATASET))
        dict_triples.extend(
            [
                Triple(dataset, HAS_INSTANTIATION, version),
                Triple(version, RDF_TYPE, DATASET),
                Triple(version, VERSION_ORDINAL, typed(str(ordinal), XSD_INTEGER)),
                Triple(version, STORAGE_POLICY, literal(policy)),
                Triple(version, HAS_RECORD_SET, rs_iri),
                Triple(version, HAS_SCHEMA_SET, ss_iri),
                Triple(version, RECORD_COUNT, typed(str(rcount), XSD_INTEGER)),
                Triple(version, ATTRIBUTE_COUNT, typed(str(acount), XSD_INTEGER)),
            ]
        )
        if date is not None:
            dict_triples.append(Triple(version, DCT_DATE, typed(date, XSD_DATE_T)))

        batches = []
        if existing:
            prev = existing[-1]
            prev_data = None
            if self._last_ingested is not None and self._last_ingested[0] == prev.iri:
                _, prev_rs, prev_ss, prev_data = self._last_ingested
            else:
                prev_rs, prev_ss = self._materialize_pair(prev)
            cs = compute_change_set(
                prev_rs.union(prev_ss),
                rs_graph.union(ss_graph),
                prev.iri,
                version,
                old_data=prev_data,
                new_data=data,
            )
            dict_triples.extend(
                [
                    Triple(dataset, HAS_CHANGE_SET, cs.iri),
                    Triple(cs.iri, RDF_TYPE, CHANGE_SET),
                    Triple(cs.iri, OLD_VERSION, prev.iri),
                    Triple(cs.iri, NEW_VERSION, version),
                ]
            )
            batches.append((cs.iri, serialize_change_set(cs)))

        if policy == FULL:
            batches.append((rs_iri, rs_graph))
            batches.append((ss_iri, ss_graph))
        batches.append((self.store.dictionary, dict_triples))
        for graph_name, triples in batches:
            self.store.add_graph(graph_name, triples)
        self._last_ingested = (version, rs_graph, ss_graph, data)
        return self._version_info(version, dataset, self._dict_graph())

    # -- materialization --------------------------------------------------

    def _materialize_pair(self, info: VersionInfo, cache: bool = False) -> Tuple[Graph, Graph]:
        if self.store.graph_exists(info.record_set):
            return self.store.get_graph(info.record_set), self.store.get_graph(info.schema_set)

        chain = self.versions(info.dataset)
        idx = next((i for i, vi in enumerate(chain) if vi.iri == info.iri), None)
        if idx is None:
            raise ArchiveError(f"unknown version: {info.iri.ntriples()}")
        base_idx = None
        for i in range(idx, -1, -1):
            if self.store.graph_exists(chain[i].record_set):
                base_idx = i
                break
        if base_idx is None:
            raise ArchiveError(
                f"no materialized ancestor for {info.iri.ntriples()}; archive is broken"
            )

        combined = self.store.get_graph(chain[base_idx].record_set).union(
            self.store.get_graph(chain[base_idx].schema_set)
        )
        for i in range(base_idx, idx):
            cs = self._stored_change_set(chain[i].iri, chain[i + 1].iri)
            combined = apply_change_set(combined, cs, FORWARD)

        rs, ss = _split_reified(combined, info.iri)
        if cache:
            self.store.add_graph(info.record_set, rs)
            self.store.add_graph(info.schema_set, ss)
        return rs, ss

    def _stored_change_set(self, old: Term, new: Term) -> ChangeSet:
        for ci in self.change_sets():
            if ci.old == old and ci.new == new:
                return parse_change_set(self.store.get_graph(ci.iri))
        raise ArchiveError(
            f"no stored change set between {old.ntriples()} and {new.ntriples()}"
        )

    def materialize_version(self, version: Term, cache: bool = False) -> Graph:
        """The version's record set graph, rebuilding DELTA versions on demand."""
        rs, _ = self._materialize_pair(self.version_info(version), cache)
        return rs

    def materialize_sets(self, version: Term, cache: bool = False) -> Tuple[Graph, Graph]:
        """(record set graph, schema set graph) for the version."""
        return self._materialize_pair(self.version_info(version), cache)

    def export_version(self, version: Term) -> Graph:
        """The de-reified (original) graph of the version."""
        rs, ss = self.materialize_sets(version)
        return dereify(rs, ss)

    def build_change_set(self, old: Term, new: Term) -> ChangeSet:
        """The change set between two ingested versions (stored or recomputed)."""
        old_info = self.version_info(old)
        new_info = self.version_info(new)
        for ci in self.change_sets():
            if ci.old == old and ci.new == new:
                return parse_change_set(self.store.get_graph(ci.iri))
        old_rs, old_ss = self._materialize_pair(old_info)
        new_rs, new_ss = self._materialize_pair(new_info)
        return compute_change_set(old_rs.union(old_ss), new_rs.union(new_ss), old, new)

    # -- stored resources -------------------------------------------------

    def define_resource(self, resource: Term, query_text: str) -> None:
        """Attach a description query to a diachronic resource IRI."""
        old = [
            t
            for t in self._dict_graph()
            if t.s == resource and t.p in (RDF_TYPE, DESCRIPTION_QUERY)
        ]
        # Redefinition replaces the stored query.
        if old:
            remaining = self._dict_graph().difference(old)
            self.store.remove_graph(self.store.dictionary)
            self.store.add_graph(self.store.dictionary, remaining)
        self.store.add_quads(
            [
                Quad(self.store.dictionary, Triple(resource, RDF_TYPE, DIACHRONIC_RESOURCE)),
                Quad(self.store.dictionary, Triple(resource, DESCRIPTION_QUERY, literal(query_text))),
            ]
        )

    def resource_query(self, resource: Term) -> str:
        for t in self._dict_graph():
            if t.s == resource and t.p == DESCRIPTION_QUERY:
                return t.o.value
        raise ArchiveError(f"no stored query for resource {resource.ntriples()}")


def _split_reified(combined: Graph, version: Term) -> Tuple[Graph, Graph]:
    """Split a combined reified graph into (record set, schema set) parts."""
    from .vocab import HAS_RECORD, HAS_RECORD_ATTRIBUTE, HAS_SCHEMA_OBJECT

    rs_node = record_set_iri(version)
    ss_node = schema_set_iri(version)
    by_subject: Dict[Term, List[Triple]] = {}
    for t in combined:
        by_subject.setdefault(t.s, []).append(t)

    def collect(set_node: Term) -> Graph:
        triples: List[Triple] = []
        members = []
        for t in by_subject.get(set_node, []):
            triples.append(t)
            if t.p in (HAS_RECORD, HAS_SCHEMA_OBJECT):
                members.append(t.o)
        for m in members:
            stack = [m]
            seen = set()
            while stack:
                node = stack.pop()
                if node in seen:
                    continue
                seen.add(node)
                for t in by_subject.get(node, []):
                    triples.append(t)
                    if t.p == HAS_RECORD_ATTRIBUTE:
                        stack.append(t.o)
        return Graph.of(triples)

    return collect(rs_node), collect(ss_node)
