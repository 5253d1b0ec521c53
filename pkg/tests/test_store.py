import pytest

from diachron.store import FORMAT_LINE, Quad, QuadStore, StoreError, load, persist
from diachron.terms import Graph, Triple, Variable, blank, iri, literal
from diachron.vocab import DICTIONARY_GRAPH

G1, G2 = iri("urn:g:1"), iri("urn:g:2")
S, P = iri("urn:s"), iri("urn:p")


def t(o):
    return Triple(S, P, literal(o))


def test_dictionary_graph_exists_from_the_start():
    store = QuadStore()
    assert store.graph_exists(DICTIONARY_GRAPH)
    assert store.get_graph(DICTIONARY_GRAPH) == Graph()


def test_add_and_get_graph():
    store = QuadStore()
    store.add_graph(G1, [t("a"), t("b"), t("a")])
    assert store.get_graph(G1) == Graph.of([t("a"), t("b")])
    assert len(store) == 2


def test_missing_graph_reads_empty():
    assert QuadStore().get_graph(G1) == Graph()
    assert not QuadStore().graph_exists(G1)


def test_graph_label_must_be_iri():
    with pytest.raises(StoreError):
        QuadStore().add_graph(blank("g"), [t("a")])
    with pytest.raises(StoreError):
        Quad(blank("g"), t("a"))


def test_same_triple_in_two_graphs_is_two_quads():
    store = QuadStore()
    store.add_quads([Quad(G1, t("a")), Quad(G2, t("a"))])
    assert len(store) == 2
    assert store.get_graph(G1) == store.get_graph(G2)


def test_remove_graph_drops_everything_but_keeps_dictionary():
    store = QuadStore()
    store.add_graph(G1, [t("a")])
    store.add_graph(store.dictionary, [t("d")])
    store.remove_graph(G1)
    store.remove_graph(store.dictionary)
    assert not store.graph_exists(G1)
    # The dictionary never disappears, it only empties.
    assert store.graph_exists(store.dictionary)
    assert store.get_graph(store.dictionary) == Graph()


def test_quads_matching_wildcards_and_bound_positions():
    store = QuadStore()
    store.add_graph(G1, [t("a"), Triple(iri("urn:other"), P, literal("b"))])
    store.add_graph(G2, [t("c")])

    assert len(store.quads_matching()) == 3
    assert [q.g for q in store.quads_matching(g=G2)] == [G2]
    by_subject = store.quads_matching(s=S)
    assert {q.t.o.value for q in by_subject} == {"a", "c"}
    assert store.quads_matching(g=G1, s=S, p=P, o=literal("a"))
    assert not store.quads_matching(o=literal("zzz"))


def test_quads_matching_treats_variables_as_wildcards():
    store = QuadStore()
    store.add_graph(G1, [t("a")])
    assert store.quads_matching(g=Variable("g"), s=Variable("s")) == store.quads_matching()


def test_quads_matching_order_is_canonical():
    store = QuadStore()
    store.add_graph(G1, [t("b"), t("a")])
    lines = [q.nquads() for q in store.quads_matching()]
    assert lines == sorted(lines)


def test_copy_is_independent():
    store = QuadStore()
    store.add_graph(G1, [t("a")])
    clone = store.copy()
    clone.add_graph(G1, [t("b")])
    assert len(store.get_graph(G1)) == 1
    assert len(clone.get_graph(G1)) == 2
    assert clone.dictionary == store.dictionary


def test_persist_load_round_trip(tmp_path):
    store = QuadStore()
    store.add_graph(G1, [t("a"), t('tricky "quote"\n')])
    store.add_graph(store.dictionary, [t("d")])
    path = str(tmp_path / "arch.nq")
    persist(store, path)

    back = load(path)
    assert back.dictionary == store.dictionary
    assert back.get_graph(G1) == store.get_graph(G1)
    assert back.get_graph(store.dictionary) == store.get_graph(store.dictionary)


def test_persist_output_is_deterministic(tmp_path):
    a, b = QuadStore(), QuadStore()
    for target, order in ((a, [t("x"), t("y")]), (b, [t("y"), t("x")])):
        target.add_graph(G1, order)
    pa, pb = str(tmp_path / "a.nq"), str(tmp_path / "b.nq")
    persist(a, pa)
    persist(b, pb)
    assert open(pa).read() == open(pb).read()


def test_load_without_manifest_fails(tmp_path):
    path = str(tmp_path / "arch.nq")
    open(path, "w").write("")
    with pytest.raises(StoreError, match="missing manifest"):
        load(path)


def test_load_rejects_unknown_format(tmp_path):
    path = str(tmp_path / "arch.nq")
    open(path, "w").write("")
    open(str(tmp_path / "arch.manifest"), "w").write(
        "format: diachron-archive/9\ndictionary: <urn:diachron:dictionary>\n"
    )
    with pytest.raises(StoreError, match="unsupported archive format"):
        load(path)


def test_load_requires_dictionary_declaration(tmp_path):
    path = str(tmp_path / "arch.nq")
    open(path, "w").write("")
    open(str(tmp_path / "arch.manifest"), "w").write(f"format: {FORMAT_LINE}\n")
    with pytest.raises(StoreError, match="dictionary"):
        load(path)


def test_load_rejects_triple_lines(tmp_path):
    path = str(tmp_path / "arch.nq")
    open(path, "w").write("<urn:s> <urn:p> <urn:o> .\n")
    open(str(tmp_path / "arch.manifest"), "w").write(
        f"format: {FORMAT_LINE}\ndictionary: <urn:diachron:dictionary>\n"
    )
    with pytest.raises(ValueError, match="graph label"):
        load(path)
