"""Named-graph quad store with canonical N-Quads persistence.

The store is a dictionary-graph-plus-named-graphs layout: one fixed
dictionary graph carries archive metadata, every record set, schema set,
and change set lives in its own named graph.

Concurrency contract: a single writer at a time; mutating calls are
serialized by an internal lock.  Readers take no locks and are safe
whenever no write is in flight.  An ingest becomes visible graph by
graph; callers that need all-or-nothing visibility should build quads up
front and issue one add_quads call, which is applied atomically.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple, Union

from .ntriples import NTriplesError, parse_quad_line, parse_term
from .terms import Graph, Term, Triple, Variable
from .vocab import DICTIONARY_GRAPH

FORMAT_LINE = "diachron-archive/1"


class StoreError(ValueError):
    """Raised for malformed archive files or bad store operations."""


@dataclass(frozen=True)
class Quad:
    """A triple placed in a named graph."""

    g: Term
    t: Triple

    def __post_init__(self) -> None:
        if not self.g.is_iri:
            raise StoreError("graph label must be an IRI")

    def nquads(self) -> str:
        t = self.t
        return f"{t.s.ntriples()} {t.p.ntriples()} {t.o.ntriples()} {self.g.ntriples()} ."


PatternArg = Union[Term, Variable, None]


def _is_wild(x: PatternArg) -> bool:
    return x is None or isinstance(x, Variable)


class QuadStore:
    """In-memory quad store indexed by graph and by (graph, subject)."""

    def __init__(self, dictionary: Term = DICTIONARY_GRAPH):
        self.dictionary = dictionary
        self._graphs: Dict[Term, Set[Triple]] = {dictionary: set()}
        self._by_subject: Dict[Tuple[Term, Term], Set[Triple]] = {}
        self._lock = threading.Lock()

    # -- mutation ---------------------------------------------------------

    def add_quads(self, quads: Iterable[Quad]) -> "QuadStore":
        quads = list(quads)
        with self._lock:
            for q in quads:
                bucket = self._graphs.setdefault(q.g, set())
                if q.t in bucket:
                    continue
                bucket.add(q.t)
                self._by_subject.setdefault((q.g, q.t.s), set()).add(q.t)
        return self

    def add_graph(self, name: Term, g: Iterable[Triple]) -> "QuadStore":
        """Bulk insert into one graph; skips per-quad wrapping."""
        if not name.is_iri:
            raise StoreError("graph label must be an IRI")
        with self._lock:
            bucket = self._graphs.setdefault(name, set())
            by_subject = self._by_subject
            for t in g:
                if t in bucket:
                    continue
                bucket.add(t)
                key = (name, t.s)
                existing = by_subject.get(key)
                if existing is None:
                    by_subject[key] = {t}
                else:
                    existing.add(t)
        return self

    def remove_graph(self, name: Term) -> "QuadStore":
        """Drop a graph entirely.  The dictionary graph only empties."""
        with self._lock:
            triples = self._graphs.pop(name, set())
            for t in triples:
                key = (name, t.s)
                bucket = self._by_subject.get(key)
                if bucket is not None:
                    bucket.discard(t)
                    if not bucket:
                        del self._by_subject[key]
            if name == self.dictionary:
                self._graphs[name] = set()
        return self

    # -- access -----------------------------------------------------------

    def graph_exists(self, name: Term) -> bool:
        return name in self._graphs

    def get_graph(self, name: Term) -> Graph:
        """The graph with that name; missing names give the empty graph."""
        return Graph.of(self._graphs.get(name, ()))

    def list_graphs(self) -> List[Term]:
        return sorted(self._graphs, key=lambda t: t.value)

    def __len__(self) -> int:
        return sum(len(ts) for ts in self._graphs.values())

    def quads_matching(
        self,
        g: PatternArg = None,
        s: PatternArg = None,
        p: PatternArg = None,
        o: PatternArg = None,
    ) -> List[Quad]:
        """All quads matching the pattern; variables and None are wildcards.

        Results are in canonical quad order so callers see a stable listing.
        """
        if not _is_wild(g):
            graphs: Iterable[Tuple[Term, Iterable[Triple]]]
            if not _is_wild(s):
                graphs = [(g, self._by_subject.get((g, s), ()))]
            else:
                graphs = [(g, self._graphs.get(g, ()))]
        elif not _is_wild(s):
            graphs = [
                (gname, self._by_subject.get((gname, s), ()))
                for gname in self._graphs
            ]
        else:
            graphs = [(gname, ts) for gname, ts in self._graphs.items()]

        out = []
        for gname, triples in graphs:
            for t in triples:
                if not _is_wild(s) and t.s != s:
                    continue
                if not _is_wild(p) and t.p != p:
                    continue
                if not _is_wild(o) and t.o != o:
                    continue
                out.append(Quad(gname, t))
        out.sort(key=lambda q: q.nquads().encode("utf-8"))
        return out

    def copy(self) -> "QuadStore":
        clone = QuadStore(self.dictionary)
        for gname, triples in self._graphs.items():
            clone._graphs.setdefault(gname, set()).update(triples)
        for key, triples in self._by_subject.items():
            clone._by_subject[key] = set(triples)
        return clone


# ---------------------------------------------------------------------------
# Persistence


def _manifest_path(path: str) -> str:
    base, ext = os.path.splitext(path)
    return (base if ext == ".nq" else path) + ".manifest"


def persist(store: QuadStore, path: str) -> None:
    """Write the store as canonical N-Quads plus a manifest sidecar file.

    Lines are sorted bytewise, so equal stores produce identical bytes.
    """
    lines = []
    for gname, triples in store._graphs.items():
        for t in triples:
            lines.append(Quad(gname, t).nquads())
    lines.sort(key=lambda s: s.encode("utf-8"))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("".join(line + "\n" for line in lines))
    with open(_manifest_path(path), "w", encoding="utf-8") as fh:
        fh.write(f"format: {FORMAT_LINE}\n")
        fh.write(f"dictionary: {store.dictionary.ntriples()}\n")


def load(path: str) -> QuadStore:
    """Read an archive written by persist.

    Raises StoreError on a missing or malformed manifest and NTriplesError
    (with line number) on malformed quad lines.
    """
    manifest = _manifest_path(path)
    if not os.path.exists(manifest):
        raise StoreError(f"missing manifest: {manifest}")
    dictionary: Optional[Term] = None
    with open(manifest, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("format:"):
                fmt = line.split(":", 1)[1].strip()
                if fmt != FORMAT_LINE:
                    raise StoreError(f"unsupported archive format: {fmt!r}")
            elif line.startswith("dictionary:"):
                token = line.split(":", 1)[1].strip()
                try:
                    dictionary = parse_term(token)
                except NTriplesError as exc:
                    raise StoreError(f"bad dictionary IRI in manifest: {exc}") from exc
    if dictionary is None or not dictionary.is_iri:
        raise StoreError("manifest does not declare a dictionary graph IRI")

    store = QuadStore(dictionary)
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        quads = []
        for lineno, line in _quad_lines(text):
            s, p, o, g = parse_quad_line(line, lineno)
            if g is None:
                raise NTriplesError("quad lacks a graph label", lineno)
            quads.append(Quad(g, Triple(s, p, o)))
        store.add_quads(quads)
    return store


def _quad_lines(text: str) -> Iterator[Tuple[int, str]]:
    for i, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            yield i, stripped
