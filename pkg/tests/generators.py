"""Seeded random archives, graphs, and query texts for the property suites.

Everything takes an explicit random.Random so failures replay from the
seed alone.  Generated sources are blank-node-free: blank handling has
its own targeted tests, and keeping the oracle on named terms keeps it
an honest independent implementation.
"""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Tuple

from diachron.archive import Archive, DELTA, FULL
from diachron.terms import Graph, Term, Triple, iri, literal, typed
from diachron.terms import XSD_INTEGER
from diachron.vocab import RDF_TYPE, RDFS_LABEL

SUBJECTS = tuple(iri(f"urn:x:s{i}") for i in range(6))
PREDICATES = (iri("urn:x:p0"), iri("urn:x:p1"), iri("urn:x:p2"), RDF_TYPE, RDFS_LABEL)
CLASSES = tuple(iri(f"urn:x:C{i}") for i in range(3))
WORDS = ("ash", "birch", "cedar", "fir", "oak")


def random_object(rng: random.Random) -> Term:
    kind = rng.randrange(4)
    if kind == 0:
        return rng.choice(SUBJECTS + CLASSES)
    if kind == 1:
        return literal(rng.choice(WORDS))
    if kind == 2:
        return typed(str(rng.randrange(10)), XSD_INTEGER)
    return literal(rng.choice(WORDS), lang=rng.choice(("en", "de")))


def random_triple(rng: random.Random) -> Triple:
    p = rng.choice(PREDICATES)
    if p == RDF_TYPE:
        o: Term = rng.choice(CLASSES)
    elif p == RDFS_LABEL:
        o = literal(rng.choice(WORDS) + str(rng.randrange(4)))
    else:
        o = random_object(rng)
    return Triple(rng.choice(SUBJECTS), p, o)


def random_graph(rng: random.Random, max_triples: int = 40) -> Graph:
    n = rng.randrange(1, max_triples + 1)
    return Graph.of(random_triple(rng) for _ in range(n))


def mutate_graph(rng: random.Random, g: Graph, max_triples: int = 40) -> Graph:
    """A plausible next version: drop some triples, add others, relabel."""
    triples = list(g)
    kept = [t for t in triples if rng.random() > 0.25]
    for _ in range(rng.randrange(0, 6)):
        kept.append(random_triple(rng))
    out = []
    for t in kept:
        if t.p == RDFS_LABEL and rng.random() < 0.4:
            out.append(Triple(t.s, t.p, literal(rng.choice(WORDS) + str(rng.randrange(4)))))
        else:
            out.append(t)
    if not out:
        out.append(random_triple(rng))
    return Graph.of(out[:max_triples])


class ArchiveInfo:
    """An archive plus the raw sources the oracle evaluates against."""

    def __init__(self) -> None:
        self.archive = Archive()
        self.sources: Dict[Term, Graph] = {}
        self.datasets: List[Term] = []
        self.versions: Dict[Term, List[Term]] = {}

    def add_version(self, dataset: Term, source: Graph, policy: str, date: str) -> Term:
        vi = self.archive.ingest_version(dataset, source, date=date, policy=policy)
        if dataset not in self.versions:
            self.datasets.append(dataset)
            self.versions[dataset] = []
        self.versions[dataset].append(vi.iri)
        self.sources[vi.iri] = source
        return vi.iri

    def all_versions(self) -> List[Term]:
        return [v for vs in self.versions.values() for v in vs]


def random_archive(
    rng: random.Random,
    max_datasets: int = 3,
    max_versions: int = 4,
    max_triples: int = 40,
    all_full: bool = False,
) -> ArchiveInfo:
    info = ArchiveInfo()
    for d in range(rng.randrange(1, max_datasets + 1)):
        ds = iri(f"urn:ds:{d}")
        g = random_graph(rng, max_triples)
        month = 0
        for v in range(rng.randrange(1, max_versions + 1)):
            policy = FULL
            if v > 0 and not all_full and rng.random() < 0.5:
                policy = DELTA
            month += rng.randrange(1, 3)
            date = f"2015-{(month - 1) % 12 + 1:02d}-{(month * 7) % 28 + 1:02d}"
            info.add_version(ds, g, policy, date)
            g = mutate_graph(rng, g, max_triples)
    return info


# ---------------------------------------------------------------------------
# Query text generation


class _QueryBuilder:
    def __init__(self, rng: random.Random, info: ArchiveInfo):
        self.rng = rng
        self.info = info
        self.vars_used: List[str] = []
        self.binding_vars: List[str] = []
        # Fixed positions draw from triples that exist somewhere in the
        # archive, otherwise nearly every generated query comes back empty.
        self.content: List[Triple] = [t for g in info.sources.values() for t in g]
        self.last_subject: Optional[str] = None

    def content_triple(self) -> Triple:
        return self.rng.choice(self.content)

    def var(self, binds: bool = True) -> str:
        pool = ("a", "b", "c", "d", "s", "p", "o", "v")
        name = self.rng.choice(pool)
        if name not in self.vars_used:
            self.vars_used.append(name)
        if binds and name not in self.binding_vars:
            self.binding_vars.append(name)
        return f"?{name}"

    def term_text(self, t: Term) -> str:
        return t.ntriples()

    def subject(self) -> str:
        if self.rng.random() < 0.45:
            return self.var()
        return self.term_text(self.rng.choice(SUBJECTS))

    def predicate(self) -> str:
        if self.rng.random() < 0.3:
            return self.var()
        return self.term_text(self.rng.choice(PREDICATES))

    def obj(self) -> str:
        if self.rng.random() < 0.45:
            return self.var()
        return self.term_text(random_object(self.rng))

    def dataset_ref(self) -> str:
        return self.term_text(self.rng.choice(self.info.datasets))

    def _version_pool(self, ds_text: Optional[str]) -> List[Term]:
        if ds_text is not None and ds_text.startswith("<"):
            ds = iri(ds_text[1:-1])
            found = self.info.versions.get(ds)
            if found:
                return found
        # Unknown or variable dataset: bounds still need consistent
        # ordinals, so draw both from a single dataset's history.
        return self.info.versions[self.rng.choice(self.info.datasets)]

    def version_ref(self, ds_text: Optional[str] = None) -> str:
        return self.term_text(self.rng.choice(self._version_pool(ds_text)))

    def version_range(self, ds_text: Optional[str]) -> Tuple[str, str]:
        pool = self._version_pool(ds_text)
        i = self.rng.randrange(len(pool))
        j = self.rng.randrange(i, len(pool))
        return self.term_text(pool[i]), self.term_text(pool[j])

    # -- pattern pieces ---------------------------------------------------

    def triple(self) -> str:
        if self.rng.random() < 0.6:
            t = self.content_triple()
            s = self.var() if self.rng.random() < 0.5 else self.term_text(t.s)
            # Star joins: reusing the previous subject keeps conjunctions
            # satisfiable instead of joining unrelated entities to nothing.
            if self.last_subject is not None and self.rng.random() < 0.3:
                s = self.last_subject
            p = self.var() if self.rng.random() < 0.35 else self.term_text(t.p)
            o = self.var() if self.rng.random() < 0.5 else self.term_text(t.o)
            self.last_subject = s
            return f"{s} {p} {o} ."
        return f"{self.subject()} {self.predicate()} {self.obj()} ."

    def record_block(self) -> str:
        rec = self.var()
        t = self.content_triple()
        subj = self.var() if self.rng.random() < 0.5 else self.term_text(t.s)
        parts = [subj]
        for _ in range(self.rng.randrange(0, 3)):
            u = self.content_triple()
            p = self.var() if self.rng.random() < 0.4 else self.term_text(u.p)
            o = self.var() if self.rng.random() < 0.6 else self.term_text(u.o)
            if self.rng.random() < 0.3:
                parts.append(f"RECATT {self.var()} {{ {p} {o} }}")
            else:
                parts.append(f"{p} {o} ;")
        return f"RECORD {rec} {{ {' '.join(parts)} }}"

    def change_block(self) -> str:
        c = self.var()
        pairs = []
        preds = (
            "<http://diachron.org/model#subject>",
            "<http://diachron.org/model#oldObject>",
            "<http://diachron.org/model#newObject>",
            "a",
        )
        for _ in range(self.rng.randrange(0, 3)):
            # Change parameters are mostly opaque minted IRIs, so fixed
            # objects rarely match anything; bind variables instead.
            if self.rng.random() < 0.7:
                o = self.var()
            elif self.rng.random() < 0.5:
                o = self.term_text(self.content_triple().s)
            else:
                o = self.term_text(self.content_triple().o)
            pairs.append(f"{self.rng.choice(preds)} {o}")
        return f"CHANGE {c} {{ {' ; '.join(pairs)} }}"

    def dataset_block(self, depth: int) -> str:
        ds = self.dataset_ref() if self.rng.random() < 0.7 else self.var()
        mod = ""
        roll = self.rng.random()
        if roll < 0.35:
            mod = f" AT VERSION {self.var()}"
        elif roll < 0.55:
            mod = f" AT VERSION {self.version_ref(ds)}"
        elif roll < 0.65:
            lo, hi = self.version_range(ds)
            mod = f" BETWEEN VERSIONS {lo}, {hi}"
        elif roll < 0.72:
            mod = f" BEFORE VERSION {self.version_ref(ds)}"
        body = self.group_body(depth + 1, max_elements=2)
        return f"DATASET {ds}{mod} {{ {body} }}"

    def changes_block(self, depth: int) -> str:
        ds = self.dataset_ref() if self.rng.random() < 0.7 else self.var()
        roll = self.rng.random()
        if roll < 0.5:
            mod = f" BETWEEN VERSIONS {self.var()}, {self.var()}"
        elif roll < 0.7:
            lo, hi = self.version_range(ds)
            mod = f" BETWEEN VERSIONS {lo}, {hi}"
        else:
            mod = ""
        inner = [self.change_block() for _ in range(self.rng.randrange(1, 3))]
        return f"CHANGES {ds}{mod} {{ {' '.join(inner)} }}"

    def filter_el(self) -> str:
        if not self.binding_vars:
            return ""
        v = "?" + self.rng.choice(self.binding_vars)
        roll = self.rng.random()
        if roll < 0.3:
            op = self.rng.choice(("=", "!=", "<", ">=" ))
            if self.rng.random() < 0.5:
                val = self.term_text(self.content_triple().o)
            else:
                val = random_object(self.rng).ntriples()
            leaf = f"{v} {op} {val}"
        elif roll < 0.5:
            leaf = f'regex({v}, "{self.rng.choice(WORDS)[:2]}")'
        elif roll < 0.65:
            leaf = f"bound({v})"
        elif roll < 0.8:
            leaf = f'!regex({v}, "{self.rng.choice(WORDS)[:2]}", "i")'
        else:
            w = "?" + self.rng.choice(self.binding_vars)
            leaf = f"{v} = {w} || bound({v})"
        return f"FILTER ({leaf})"

    def group_body(self, depth: int, max_elements: int = 4) -> str:
        n = self.rng.randrange(1, max_elements + 1)
        parts = []
        for _ in range(n):
            roll = self.rng.random()
            if depth >= 2 or roll < 0.5:
                parts.append(self.triple())
            elif roll < 0.65:
                parts.append(self.record_block())
            elif roll < 0.75:
                parts.append(self.dataset_block(depth))
            elif roll < 0.83:
                parts.append(self.changes_block(depth))
            elif roll < 0.9:
                parts.append(self.change_block())
            elif roll < 0.95:
                parts.append(f"OPTIONAL {{ {self.triple()} }}")
            else:
                parts.append(f"{{ {self.triple()} }} UNION {{ {self.triple()} }}")
        f = self.filter_el()
        if f and self.rng.random() < 0.35:
            parts.append(f)
        return " ".join(parts)

    def sources_clause(self) -> str:
        roll = self.rng.random()
        if roll < 0.7:
            return ""
        if roll < 0.85:
            ds = self.dataset_ref()
            mod = ""
            if self.rng.random() < 0.4:
                mod = f" AT VERSION {self.version_ref(ds)}"
            elif self.rng.random() < 0.3:
                lo, hi = self.version_range(ds)
                mod = f" BETWEEN VERSIONS {lo}, {hi}"
            return f"FROM DATASET {ds}{mod} "
        ds = self.dataset_ref()
        mod = ""
        if self.rng.random() < 0.4:
            lo, hi = self.version_range(ds)
            mod = f" BETWEEN VERSIONS {lo}, {hi}"
        return f"FROM CHANGES {ds}{mod} "

    def head_and_tail(self, allow_star: bool) -> Tuple[str, str]:
        rng = self.rng
        tail = ""
        grouped = bool(self.binding_vars) and rng.random() < 0.12
        if grouped:
            key = rng.choice(self.binding_vars)
            counted = rng.choice(self.binding_vars)
            head = f"?{key} (COUNT(?{counted}) AS ?n)"
            tail = f" GROUP BY ?{key}"
            if rng.random() < 0.5:
                order = rng.choice((f"?{key}", "?n", f"DESC(?{key})"))
                tail += f" ORDER BY {order}"
        elif allow_star and (not self.binding_vars or rng.random() < 0.2):
            head = "*"
        else:
            if not self.binding_vars:
                head = "*" if allow_star else "?never"
            else:
                k = rng.randrange(1, len(self.binding_vars) + 1)
                chosen = rng.sample(self.binding_vars, k)
                head = " ".join(f"?{v}" for v in chosen)
                if rng.random() < 0.2:
                    pick = rng.choice(chosen)
                    key = f"?{pick}" if rng.random() < 0.6 else f"DESC(?{pick})"
                    tail = f" ORDER BY {key}"
        if rng.random() < 0.12:
            tail += f" LIMIT {rng.randrange(0, 8)}"
        if rng.random() < 0.06:
            tail += f" OFFSET {rng.randrange(0, 4)}"
        return head, tail


def random_query(rng: random.Random, info: ArchiveInfo, allow_star: bool = True) -> str:
    b = _QueryBuilder(rng, info)
    sources = b.sources_clause()
    body = b.group_body(0)
    head, tail = b.head_and_tail(allow_star)
    distinct = "DISTINCT " if rng.random() < 0.3 else ""
    return f"SELECT {distinct}{head} {sources}WHERE {{ {body} }}{tail}"
