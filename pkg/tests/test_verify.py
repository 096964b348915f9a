import pytest

from chronostore.docstore.store import DocStore
from chronostore.errors import CorruptLayout
from chronostore.graph import TemporalGraph
from chronostore.layouts.multi_table import E_IN_EXIST, E_OUT_EXIST, V_ATTR
from chronostore.layouts.single_table import NODES
from chronostore.synthetic import random_events
from chronostore.verify import CHECKS, expected_records, verify_graph
from tests.conftest import build_graph, scale


@pytest.mark.parametrize("seed", range(scale(4, 40)))
def test_random_graphs_verify(seed):
    graph = build_graph(random_events(seed=seed, vertices=25, events=300, id_style="mixed"))
    report = verify_graph(graph)
    assert report.ok, report.to_dict()
    assert report.counters["vertices"] == graph.vertex_count()
    assert report.counters["checks"] == len(CHECKS)
    assert report.counters["documents"] == graph.store.total_documents()


def test_expected_records_follow_the_model():
    graph = build_graph(random_events(seed=2, vertices=10, events=120))
    for name, layout in graph.layouts.items():
        nodes = list(layout.nodes(graph.store))
        assert expected_records(nodes, name) == layout.document_count(graph.store)


def _edge_graph(layouts):
    graph = TemporalGraph(DocStore(), layouts)
    w = graph.writer()
    w.insert_node(1, 0)
    w.insert_node(2, 0)
    w.insert_edge(1, 2, 1)
    w.delete_node(2, 5)
    return graph


def test_stale_index_entry_is_reported():
    graph = _edge_graph(("st", "mt"))
    graph.store.collection(NODES).index_entries("vid").pop()
    report = verify_graph(graph)
    assert not report.ok
    assert "index_consistency" in report.codes()


def test_missing_in_edge_breaks_symmetry():
    graph = _edge_graph(("mt",))
    graph.store.batch().delete(E_IN_EXIST, (2, 1, 1)).commit()
    codes = verify_graph(graph).codes()
    assert "symmetry" in codes
    assert "space_accounting" in codes


def test_orphan_rows_break_space_accounting():
    graph = _edge_graph(("mt",))
    graph.store.batch().upsert(E_OUT_EXIST, {"source": 9, "target": 1, "start": 0, "end": 3}).commit()
    assert verify_graph(graph).codes() == ["space_accounting"]


def test_attribute_outside_lifespan_breaks_containment():
    graph = _edge_graph(("mt",))
    batch = graph.store.batch()
    graph.primary.prepare(graph.store, [V_ATTR + "p"], batch)
    batch.upsert(V_ATTR + "p", {"vid": 2, "start": 7, "end": 9, "value": 1}).commit()
    report = verify_graph(graph)
    assert report.codes() == ["containment"]


def test_lifespan_index_drift_is_reported():
    graph = _edge_graph(("st", "mt"))
    graph.lifespans.discard(1)
    assert verify_graph(graph).codes() == ["lifespan_index"]


def test_undecodable_layout_is_reported(monkeypatch):
    graph = _edge_graph(("st", "mt"))

    def broken(store):
        raise CorruptLayout("unreadable")

    monkeypatch.setattr(graph.layouts["mt"], "nodes", broken)
    report = verify_graph(graph)
    assert report.codes() == ["corrupt_layout"]
    assert report.counters["vertices"] == 2
