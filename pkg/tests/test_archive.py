import random

import pytest

from diachron.archive import Archive, ArchiveError, DELTA, FULL
from diachron.reify import record_set_iri, reify, skolemize
from diachron.store import load, persist
from diachron.terms import Graph, Triple, blank, iri, literal
from diachron.vocab import RDFS_LABEL

from generators import mutate_graph, random_archive, random_graph

DS = iri("urn:ds:main")


def g(*labels):
    return Graph.of(Triple(iri("urn:s"), RDFS_LABEL, literal(x)) for x in labels)


def test_first_ingest_registers_dataset_and_version():
    a = Archive()
    vi = a.ingest_version(DS, g("one"), date="2015-01-02")
    assert a.datasets() == [DS]
    assert a.has_dataset(DS)
    assert a.has_version(vi.iri)
    assert vi.ordinal == 1
    assert vi.policy == FULL
    assert vi.date == "2015-01-02"
    assert vi.record_count == 1
    assert vi.attribute_count == 1
    assert vi.iri.value == DS.value + "/version/1"


def test_explicit_version_iri_respected():
    a = Archive()
    v = iri("urn:ds:main/235")
    vi = a.ingest_version(DS, g("x"), version=v)
    assert vi.iri == v
    assert a.version_info(v).ordinal == 1


def test_first_version_must_be_full():
    with pytest.raises(ArchiveError, match="must be FULL"):
        Archive().ingest_version(DS, g("x"), policy=DELTA)


def test_unknown_policy_rejected():
    with pytest.raises(ArchiveError, match="storage policy"):
        Archive().ingest_version(DS, g("x"), policy="SPARSE")


def test_bad_date_rejected():
    with pytest.raises(ArchiveError, match="YYYY-MM-DD"):
        Archive().ingest_version(DS, g("x"), date="02/01/2015")


def test_duplicate_version_rejected():
    a = Archive()
    vi = a.ingest_version(DS, g("x"))
    with pytest.raises(ArchiveError, match="already ingested"):
        a.ingest_version(DS, g("y"), version=vi.iri)


def test_versions_come_back_in_ingest_order():
    a = Archive()
    for i in range(3):
        a.ingest_version(DS, g(f"v{i}"), policy=FULL if i == 0 else DELTA)
    assert [vi.ordinal for vi in a.versions(DS)] == [1, 2, 3]


def test_unknown_version_lookup_raises():
    with pytest.raises(ArchiveError, match="unknown version"):
        Archive().version_info(iri("urn:nope"))


def test_change_set_recorded_per_ingest_step():
    a = Archive()
    v1 = a.ingest_version(DS, g("a")).iri
    v2 = a.ingest_version(DS, g("b")).iri
    v3 = a.ingest_version(DS, g("c")).iri
    infos = a.change_sets(DS)
    assert {(ci.old, ci.new) for ci in infos} == {(v1, v2), (v2, v3)}
    assert a.change_sets(iri("urn:ds:other")) == []


def test_delta_version_not_stored_but_materializable():
    a = Archive()
    a.ingest_version(DS, g("a"))
    vi = a.ingest_version(DS, g("a", "b"), policy=DELTA)
    assert not a.store.graph_exists(vi.record_set)

    rs = a.materialize_version(vi.iri)
    expected_rs, _ = reify(g("a", "b"), vi.iri)
    assert rs == expected_rs
    # Uncached materialization leaves the store as it was.
    assert not a.store.graph_exists(vi.record_set)

    a.materialize_version(vi.iri, cache=True)
    assert a.store.graph_exists(vi.record_set)


def test_materialization_walks_multi_step_delta_chains():
    rng = random.Random(5)
    a = Archive()
    graphs = [random_graph(rng)]
    for _ in range(3):
        graphs.append(mutate_graph(rng, graphs[-1]))
    versions = []
    for i, src in enumerate(graphs):
        policy = FULL if i == 0 else DELTA
        versions.append(a.ingest_version(DS, src, policy=policy).iri)
    for v, src in zip(versions, graphs):
        assert a.export_version(v) == src


def test_export_round_trips_source_with_blanks_skolemized():
    src = Graph.of([Triple(blank("x"), iri("urn:p"), literal("v"))])
    a = Archive()
    vi = a.ingest_version(DS, src)
    assert a.export_version(vi.iri) == skolemize(src, vi.iri)


def test_storage_policy_does_not_change_content():
    rng = random.Random(11)
    graphs = [random_graph(rng)]
    for _ in range(2):
        graphs.append(mutate_graph(rng, graphs[-1]))

    full, mixed = Archive(), Archive()
    for i, src in enumerate(graphs):
        full.ingest_version(DS, src, policy=FULL)
        mixed.ingest_version(DS, src, policy=FULL if i == 0 else DELTA)

    for vf, vm in zip(full.versions(DS), mixed.versions(DS)):
        assert full.materialize_sets(vf.iri) == mixed.materialize_sets(vm.iri)
        assert full.export_version(vf.iri) == mixed.export_version(vm.iri)


def test_build_change_set_spans_non_adjacent_versions():
    a = Archive()
    v1 = a.ingest_version(DS, g("a")).iri
    a.ingest_version(DS, g("b"), policy=DELTA)
    v3 = a.ingest_version(DS, g("c"), policy=DELTA).iri
    cs = a.build_change_set(v1, v3)
    assert cs.old == v1 and cs.new == v3
    # One label flips end to end: a -> c.
    assert len(cs.changes) == 1


def test_build_change_set_returns_stored_set_for_adjacent_pair():
    a = Archive()
    v1 = a.ingest_version(DS, g("a")).iri
    v2 = a.ingest_version(DS, g("b")).iri
    stored = a.change_sets(DS)[0]
    assert a.build_change_set(v1, v2).iri == stored.iri


def test_resource_definition_round_trip_and_replacement():
    a = Archive()
    r = iri("urn:resource:r1")
    a.define_resource(r, "SELECT ?s WHERE { ?s ?p ?o . }")
    assert a.resource_query(r) == "SELECT ?s WHERE { ?s ?p ?o . }"
    a.define_resource(r, "SELECT * WHERE { }")
    assert a.resource_query(r) == "SELECT * WHERE { }"
    with pytest.raises(ArchiveError, match="no stored query"):
        a.resource_query(iri("urn:resource:other"))


def test_archive_survives_persist_and_load(tmp_path):
    rng = random.Random(3)
    info = random_archive(rng, max_datasets=2, max_versions=3)
    path = str(tmp_path / "arch.nq")
    persist(info.archive.store, path)

    back = Archive(load(path))
    assert back.datasets() == info.archive.datasets()
    for ds in back.datasets():
        for vi in back.versions(ds):
            assert back.export_version(vi.iri) == info.archive.export_version(vi.iri)
    assert len(back.change_sets()) == len(info.archive.change_sets())


def test_record_set_iri_matches_registered_layout():
    a = Archive()
    vi = a.ingest_version(DS, g("x"))
    assert vi.record_set == record_set_iri(vi.iri)
    assert a.store.graph_exists(vi.record_set)
