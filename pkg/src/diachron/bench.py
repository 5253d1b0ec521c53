"""Timing harness: archive load, version retrieval, and a query suite.

Builds synthetic dataset series whose versions grow linearly in record
attributes, times the bulk operations and a fixed set of 14 queries,
and fits per-operation medians to a line.  Reported times are medians
over repetitions; the regression runs on the per-size medians.
"""

from __future__ import annotations

import csv
import gc
import io
import statistics
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .archive import Archive, DELTA, FULL
from .evaluator import evaluate
from .ntriples import serialize_ntriples
from .ql import has_errors, parse_query, validate
from .scopes import root_scope
from .terms import Graph, Term, Triple, iri, literal
from .translate import collect_materializations
from .vocab import RDF_TYPE, RDFS_LABEL


class BenchError(ValueError):
    """Bad benchmark configuration."""


BENCH_DATASET = iri("urn:bench:ds")
_WIDGET = iri("urn:bench:Widget")

# Attributes per subject in the synthetic graphs: one type, one label,
# eight plain data properties.  Profile sizes must divide evenly.
_ATTRS_PER_SUBJECT = 10


@dataclass(frozen=True)
class Profile:
    """A dataset series: `versions` versions sized start, start+step, ..."""

    versions: int
    start: int
    step: int
    delta_ordinals: frozenset

    def sizes(self) -> List[int]:
        return [self.start + k * self.step for k in range(self.versions)]


PROFILES: Dict[str, Profile] = {
    # Scaled-down series for quick runs and tests; version 2 is
    # delta-stored so mixed-policy paths get exercised cheaply.
    "smoke": Profile(3, 60, 60, frozenset({2})),
    # Ten versions, 100 -> 1000 attributes.
    "small": Profile(10, 100, 100, frozenset()),
    # Ten versions, 1k -> 10k attributes, fully materialized; the
    # load/retrieve linearity series runs here.
    "linear10": Profile(10, 1000, 1000, frozenset()),
    # linear10 with versions 4 and 8 delta-stored: retrieval of those
    # versions and scope resolution over variable versions pay the
    # rebuild cost.
    "hybrid10": Profile(10, 1000, 1000, frozenset({4, 8})),
    # Degenerate series: one point, no regression.
    "single": Profile(1, 100, 100, frozenset()),
}


def bench_graph(ordinal: int, total_attrs: int) -> Graph:
    """Synthetic version content with exactly `total_attrs` attributes.

    Growth across ordinals is purely additive except for subject s0,
    whose label carries the ordinal so every change set also contains
    one label modification.
    """
    if total_attrs % _ATTRS_PER_SUBJECT:
        raise BenchError(f"size {total_attrs} not divisible by {_ATTRS_PER_SUBJECT}")
    triples = []
    for i in range(total_attrs // _ATTRS_PER_SUBJECT):
        s = iri(f"urn:bench:s{i}")
        label = f"item 0 rev {ordinal}" if i == 0 else f"item {i}"
        triples.append(Triple(s, RDF_TYPE, _WIDGET))
        triples.append(Triple(s, RDFS_LABEL, literal(label)))
        for j in range(_ATTRS_PER_SUBJECT - 2):
            triples.append(Triple(s, iri(f"urn:bench:p{j}"), literal(f"v{i}.{j}")))
    return Graph.of(triples)


def build_archive(profile: Profile) -> Archive:
    a = Archive()
    for k, size in enumerate(profile.sizes(), start=1):
        policy = DELTA if k in profile.delta_ordinals else FULL
        a.ingest_version(BENCH_DATASET, bench_graph(k, size), policy=policy)
    return a


def _v(ordinal: int) -> str:
    return f"<urn:bench:ds/version/{ordinal}>"


# The suite covers, in rising complexity: record and attribute patterns
# over fixed versions, change enumeration, version windows, aggregation
# and ordering, unbound predicates, filters, variable datasets, and
# finally variable versions over a mixed storage policy (Q13, Q14),
# whose scope resolution has to rebuild delta-stored versions.
# Fixed version references stay at ordinals 1..3 so any profile with at
# least 3 versions can run the whole suite.
QUERY_SUITE: List[Tuple[str, str]] = [
    ("Q1", "SELECT DISTINCT ?r WHERE { DATASET <urn:bench:ds> AT VERSION "
           + _v(1) + " { RECORD ?r { <urn:bench:s1> rdf:type <urn:bench:Widget> } } }"),
    ("Q2", "SELECT DISTINCT ?ra WHERE { DATASET <urn:bench:ds> AT VERSION "
           + _v(2) + " { RECORD ?r { ?s RECATT ?ra { rdf:type <urn:bench:Widget> } } } }"),
    ("Q3", "SELECT DISTINCT ?r ?o WHERE { DATASET <urn:bench:ds> AT VERSION "
           + _v(3) + " { RECORD ?r { ?s rdf:type <urn:bench:Widget> . rdfs:label ?o } } }"),
    ("Q4", "SELECT DISTINCT ?r1 ?r2 WHERE { DATASET <urn:bench:ds> AT VERSION "
           + _v(3) + " { RECORD ?r1 { <urn:bench:s1> <urn:bench:p2> ?o } "
           "RECORD ?r2 { <urn:bench:s2> <urn:bench:p2> ?o2 } } }"),
    ("Q5", "SELECT DISTINCT ?o ?n WHERE { CHANGES <urn:bench:ds> BETWEEN VERSIONS ?o ?n "
           "{ CHANGE ?c { diachron:oldObject ?x } } }"),
    ("Q6", "SELECT DISTINCT ?s WHERE { DATASET <urn:bench:ds> BETWEEN VERSIONS "
           + _v(1) + ", " + _v(3) + " { ?s rdf:type <urn:bench:Widget> } }"),
    ("Q7", "SELECT DISTINCT ?s (COUNT(?o) AS ?k) FROM DATASET <urn:bench:ds> AT VERSION "
           + _v(3) + " WHERE { ?s <urn:bench:p2> ?o } GROUP BY ?s ORDER BY ?s LIMIT 20"),
    ("Q8", "SELECT DISTINCT ?p (COUNT(?s) AS ?k) FROM DATASET <urn:bench:ds> AT VERSION "
           + _v(3) + " WHERE { ?s ?p ?o } GROUP BY ?p ORDER BY ?p"),
    ("Q9", "SELECT DISTINCT ?p (COUNT(?s) AS ?k) WHERE { DATASET <urn:bench:ds> "
           "BETWEEN VERSIONS " + _v(1) + ", " + _v(3) + " { ?s ?p ?o } } "
           "GROUP BY ?p ORDER BY ?p"),
    ("Q10", "SELECT DISTINCT ?s (COUNT(?p) AS ?k) WHERE { DATASET <urn:bench:ds> "
            "BETWEEN VERSIONS " + _v(2) + ", " + _v(3) + " { ?s ?p ?o } } "
            "GROUP BY ?s ORDER BY DESC(?k) LIMIT 10"),
    ("Q11", "SELECT DISTINCT ?d (COUNT(?s) AS ?k) WHERE { DATASET ?d AT VERSION "
            + _v(3) + " { ?s ?p ?o FILTER regex(?o, \"rev\") } } GROUP BY ?d ORDER BY ?d"),
    ("Q12", "SELECT DISTINCT ?d (COUNT(?lbl) AS ?k) WHERE { DATASET ?d "
            "BETWEEN VERSIONS " + _v(1) + ", " + _v(3) + " { "
            "?s rdf:type <urn:bench:Widget> . ?s ?p ?o2 "
            "OPTIONAL { ?s rdfs:label ?lbl } FILTER bound(?s) } } GROUP BY ?d ORDER BY ?d"),
    ("Q13", "SELECT DISTINCT ?v (COUNT(?r) AS ?k) WHERE { DATASET <urn:bench:ds> "
            "AT VERSION ?v { RECORD ?r { <urn:bench:s0> rdfs:label ?lbl } "
            "?s2 ?p <urn:bench:Widget> FILTER regex(?lbl, \"rev\") } } "
            "GROUP BY ?v ORDER BY ?v"),
    ("Q14", "SELECT DISTINCT ?d ?v (COUNT(?ra) AS ?k) WHERE { DATASET ?d AT VERSION ?v "
            "{ RECORD ?r { <urn:bench:s0> RECATT ?ra { rdfs:label ?o } } "
            "FILTER regex(?o, \"rev\") } } GROUP BY ?d ?v ORDER BY ?v"),
]

# Feature tags per query, used by tests to pin the suite's shape.
SUITE_FEATURES: Dict[str, frozenset] = {
    "Q1": frozenset({"reified"}),
    "Q2": frozenset({"reified"}),
    "Q3": frozenset({"reified"}),
    "Q4": frozenset({"reified"}),
    "Q5": frozenset({"reified", "metadata"}),
    "Q6": frozenset({"dereified", "metadata"}),
    "Q7": frozenset({"dereified", "aggregate", "order_by"}),
    "Q8": frozenset({"dereified", "aggregate", "order_by", "unbound_pred"}),
    "Q9": frozenset({"dereified", "aggregate", "order_by", "unbound_pred", "metadata"}),
    "Q10": frozenset({"dereified", "aggregate", "order_by", "unbound_pred", "metadata"}),
    "Q11": frozenset({"dereified", "aggregate", "order_by", "unbound_pred", "metadata",
                      "filter", "unbound_graph"}),
    "Q12": frozenset({"dereified", "aggregate", "order_by", "unbound_pred", "metadata",
                      "filter", "unbound_graph", "optional"}),
    "Q13": frozenset({"reified", "dereified", "aggregate", "order_by", "unbound_pred",
                      "metadata", "filter", "unbound_graph", "non_materialized"}),
    "Q14": frozenset({"reified", "dereified", "aggregate", "order_by", "unbound_pred",
                      "metadata", "filter", "unbound_graph", "non_materialized"}),
}

# Queries whose scope covers delta-stored versions of variable datasets
# or versions; their preparation cost includes rebuilding those.
VARIABLE_DELTA_QUERIES = frozenset({"Q13", "Q14"})


def preprocess(text: str, archive: Archive):
    """Everything before execution: parse, check, resolve, rebuild.

    Returns the parsed query.  Delta-stored versions inside the query's
    scope are materialized (uncached), so queries over variable
    datasets with mixed storage pay their rebuild cost here.
    """
    q = parse_query(text)
    diagnostics = validate(q, archive)
    if has_errors(diagnostics):
        raise BenchError("; ".join(d.render() for d in diagnostics))
    root_scope(q, archive)
    for version in collect_materializations(q, archive):
        archive.materialize_sets(version)
    return q


@dataclass(frozen=True)
class BenchRecord:
    operation: str
    size: int
    rep: int
    ms: float


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float


def fit_series(points: Sequence[Tuple[int, float]]) -> Optional[FitResult]:
    """Least-squares line through (size, ms) points; None under 2 sizes."""
    if len({x for x, _ in points}) < 2:
        return None
    n = len(points)
    mx = sum(x for x, _ in points) / n
    my = sum(y for _, y in points) / n
    sxx = sum((x - mx) ** 2 for x, _ in points)
    sxy = sum((x - mx) * (y - my) for x, y in points)
    slope = sxy / sxx
    intercept = my - slope * mx
    ss_tot = sum((y - my) ** 2 for _, y in points)
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in points)
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return FitResult(slope, intercept, min(1.0, max(0.0, r2)))


@dataclass
class BenchReport:
    profile: str
    reps: int
    records: List[BenchRecord]

    def operations(self) -> List[str]:
        seen = dict.fromkeys(r.operation for r in self.records)
        return list(seen)

    def series(self, operation: str) -> List[Tuple[int, float]]:
        """(size, median ms) per size, sizes ascending."""
        by_size: Dict[int, List[float]] = {}
        for r in self.records:
            if r.operation == operation:
                by_size.setdefault(r.size, []).append(r.ms)
        return [(size, statistics.median(ms)) for size, ms in sorted(by_size.items())]

    def fits(self) -> Dict[str, FitResult]:
        out = {}
        for op in self.operations():
            fit = fit_series(self.series(op))
            if fit is not None:
                out[op] = fit
        return out

    def median_ms(self, operation: str) -> float:
        values = [r.ms for r in self.records if r.operation == operation]
        if not values:
            raise BenchError(f"no records for operation {operation!r}")
        return statistics.median(values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["operation", "size", "rep", "ms"])
        for r in self.records:
            w.writerow([r.operation, r.size, r.rep, f"{r.ms:.3f}"])
        return buf.getvalue()

    def summary_lines(self) -> List[str]:
        lines = [f"profile {self.profile}: {len(self.records)} records, {self.reps} reps"]
        fits = self.fits()
        for op in self.operations():
            pts = self.series(op)
            med = self.median_ms(op)
            line = f"{op}: median {med:.2f} ms over {len(pts)} size(s)"
            if op in fits:
                f = fits[op]
                line += f"; fit slope={f.slope:.4f} intercept={f.intercept:.2f} r2={f.r_squared:.4f}"
            lines.append(line)
        return lines


_OPERATIONS = ("load", "retrieve", "query-suite", "preprocess")


def _timed(fn: Callable[[], object]) -> float:
    # Collector pauses scale with the whole heap, which grows with the
    # archive; keeping the collector out of the timed region stops a
    # pause from being charged to whichever call crossed a threshold.
    # The structures built here are overwhelmingly acyclic, so garbage
    # still goes away by reference counting; cycles wait for the
    # collect at the next series sweep.
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        t0 = time.perf_counter()
        fn()
        return (time.perf_counter() - t0) * 1000.0
    finally:
        if was_enabled:
            gc.enable()


def run_bench(
    profile: str,
    reps: int = 10,
    operations: Optional[Sequence[str]] = None,
) -> BenchReport:
    prof = PROFILES.get(profile)
    if prof is None:
        known = ", ".join(sorted(PROFILES))
        raise BenchError(f"unknown bench profile {profile!r} (known: {known})")
    if reps < 1:
        raise BenchError("reps must be at least 1")
    ops = tuple(operations) if operations is not None else _OPERATIONS
    unknown = sorted(set(ops) - set(_OPERATIONS))
    if unknown:
        raise BenchError(f"unknown operations: {', '.join(unknown)}")
    needs_suite = {"query-suite", "preprocess"} & set(ops)
    if needs_suite and prof.versions < 3:
        raise BenchError(
            f"profile {profile!r} has {prof.versions} version(s); "
            "the query suite needs at least 3"
        )

    records: List[BenchRecord] = []
    sizes = prof.sizes()

    # Loading is timed on fresh archives; the last build is reused by
    # the other operations.
    archive = Archive()
    build_reps = reps if "load" in ops else 1
    for rep in range(build_reps):
        gc.collect()
        archive = Archive()
        for k, size in enumerate(sizes, start=1):
            g = bench_graph(k, size)
            policy = DELTA if k in prof.delta_ordinals else FULL
            ms = _timed(lambda: archive.ingest_version(BENCH_DATASET, g, policy=policy))
            if "load" in ops:
                records.append(BenchRecord("load", size, rep, ms))

    infos = archive.versions(BENCH_DATASET)
    total_attrs = sum(vi.attribute_count for vi in infos)

    if "retrieve" in ops:
        for rep in range(reps):
            gc.collect()
            for vi in infos:
                ms = _timed(lambda: serialize_ntriples(archive.export_version(vi.iri)))
                records.append(BenchRecord("retrieve", vi.attribute_count, rep, ms))

    if "query-suite" in ops:
        for name, text in QUERY_SUITE:
            q = parse_query(text)
            gc.collect()
            for rep in range(reps):
                ms = _timed(lambda: evaluate(q, archive))
                records.append(BenchRecord(f"query:{name}", total_attrs, rep, ms))

    if "preprocess" in ops:
        for name, text in QUERY_SUITE:
            gc.collect()
            for rep in range(reps):
                ms = _timed(lambda: preprocess(text, archive))
                records.append(BenchRecord(f"preprocess:{name}", total_attrs, rep, ms))

    return BenchReport(profile, reps, records)
