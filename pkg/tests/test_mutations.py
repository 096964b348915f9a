import json
import random

import pytest

from chronostore.docstore import RandomFaultInjector
from chronostore.docstore.store import DocStore
from chronostore.errors import (AlreadyAliveError, ChronostoreError, EdgeAlreadyAlive,
                                EndpointNotAlive, InjectedFault, InvariantViolation,
                                NotAliveAtError, OutOfOrderError, OwnerNotAlive,
                                PropertyAlreadyAlive, TickOverflowError)
from chronostore.graph import TemporalGraph
from chronostore.mutations import EdgeRecord, EdgeRef, MutationEvent, NodeRecord
from chronostore.report import Severity
from chronostore.synthetic import random_events
from chronostore.temporal import ALIVE_END, Interval
from chronostore.verify import verify_graph
from tests.conftest import build_graph, scale


def stored_state(graph: TemporalGraph) -> dict:
    """Every collection's documents, in a canonical order."""
    out = {}
    for name in graph.store.collection_names():
        docs = graph.store.scan(name, batch_size=0).to_list()
        out[name] = sorted(json.dumps(d, sort_keys=True, default=str) for d in docs)
    return out


def test_node_lifecycle(graph):
    w = graph.writer()
    w.insert_node("a", 5)
    with pytest.raises(AlreadyAliveError):
        w.insert_node("a", 6)
    w.delete_node("a", 9)
    with pytest.raises(NotAliveAtError):
        w.delete_node("a", 12)
    with pytest.raises(AlreadyAliveError):
        w.insert_node("a", 7)
    w.insert_node("a", 20)
    assert graph.node("a").lifespan.to_pairs() == [[5, 9], [20, ALIVE_END]]
    assert graph.lifespans.stab(8) == {"a"}
    assert graph.lifespans.stab(10) == set()


def test_reinsert_at_the_delete_tick_coalesces(graph):
    w = graph.writer()
    w.insert_node(1, 0)
    w.delete_node(1, 4)
    w.insert_node(1, 4)
    assert graph.node(1).lifespan.to_pairs() == [[0, ALIVE_END]]


def test_delete_at_the_insert_tick_leaves_no_history(graph):
    w = graph.writer()
    w.insert_node(1, 3)
    w.delete_node(1, 3)
    assert graph.node(1) is None
    assert graph.vertex_count() == 0
    assert graph.primary.document_count(graph.store) == 0


def test_edge_needs_live_endpoints(graph):
    w = graph.writer()
    w.insert_node(1, 0)
    with pytest.raises(EndpointNotAlive):
        w.insert_edge(1, 2, 1)
    w.insert_node(2, 1)
    w.insert_edge(1, 2, 1)
    with pytest.raises(EdgeAlreadyAlive):
        w.insert_edge(1, 2, 3)
    w.delete_edge(1, 2, 5)
    with pytest.raises(NotAliveAtError):
        w.delete_edge(1, 2, 6)
    with pytest.raises(NotAliveAtError):
        w.delete_edge(2, 1, 6)
    w.insert_edge(1, 2, 8)
    assert graph.node(1).out_edges[2].intervals.to_pairs() == [[1, 5], [8, ALIVE_END]]
    assert graph.node(2).in_edges[1].intervals.to_pairs() == [[1, 5], [8, ALIVE_END]]


def test_edge_interval_stops_at_the_first_endpoint_end(both):
    w = both.writer()
    w.insert_node(1, 0)
    w.delete_node(1, 10)
    w.insert_node(2, 0)
    w.insert_edge(2, 1, 2)
    assert both.node(2).out_edges[1].intervals.to_pairs() == [[2, 10]]
    assert verify_graph(both).ok


def test_delete_node_cascades_on_both_sides(both):
    w = both.writer()
    for v in (1, 2, 3):
        w.insert_node(v, 0)
    w.insert_edge(1, 2, 1)
    w.insert_edge(3, 1, 1)
    w.insert_property(1, "name", "x", 1)
    w.insert_property(EdgeRef(1, 2), "w", 7, 2)
    w.delete_node(1, 5)
    one, two, three = both.node(1), both.node(2), both.node(3)
    assert one.lifespan.to_pairs() == [[0, 5]]
    assert one.attributes["name"][0].interval == Interval(1, 5)
    assert two.in_edges[1].intervals.to_pairs() == [[1, 5]]
    assert two.in_edges[1].attributes["w"][0].interval == Interval(2, 5)
    assert three.out_edges[1].intervals.to_pairs() == [[1, 5]]
    assert two.lifespan.alive and three.lifespan.alive
    assert verify_graph(both).ok


def test_self_loop_is_kept_once_per_side(both):
    w = both.writer()
    w.insert_node(1, 0)
    w.insert_edge(1, 1, 2)
    w.delete_node(1, 6)
    node = both.node(1)
    assert node.out_edges[1].intervals.to_pairs() == [[2, 6]]
    assert node.in_edges[1].intervals.to_pairs() == [[2, 6]]
    assert verify_graph(both).ok


def test_properties(graph):
    w = graph.writer()
    with pytest.raises(OwnerNotAlive):
        w.insert_property(1, "a", 1, 0)
    w.insert_node(1, 0)
    w.insert_property(1, "a", "x", 2)
    with pytest.raises(PropertyAlreadyAlive):
        w.insert_property(1, "a", "y", 3)
    w.delete_property(1, "a", 4)
    with pytest.raises(NotAliveAtError):
        w.delete_property(1, "a", 5)
    w.insert_property(1, "a", "y", 4)
    w.delete_property(1, "a", 6)
    w.insert_property(1, "a", "y", 6)
    history = graph.node(1).attributes["a"]
    assert [(a.value, a.interval.start, a.interval.end) for a in history] == [("x", 2, 4), ("y", 4, ALIVE_END)]
    assert graph.node(1).attribute_at("a", 3) == "x"
    assert graph.node(1).attributes_at(1) == {}


def test_edge_property_needs_a_live_edge(graph):
    w = graph.writer()
    w.insert_node(1, 0)
    w.insert_node(2, 0)
    with pytest.raises(OwnerNotAlive):
        w.insert_property(EdgeRef(1, 2), "w", 1, 1)
    w.insert_edge(1, 2, 1)
    w.insert_property(EdgeRef(1, 2), "w", 1, 1)
    w.delete_edge(1, 2, 3)
    assert graph.node(2).in_edges[1].attributes["w"][0].interval == Interval(1, 3)


def test_event_validation():
    with pytest.raises(ValueError):
        MutationEvent.insert_node(-1, 1)
    with pytest.raises(TickOverflowError):
        MutationEvent.insert_node(ALIVE_END, 1)
    with pytest.raises(ValueError):
        MutationEvent.insert_property(0, 1, "", 3)
    ev = MutationEvent.insert_property(4, EdgeRef("a", "b"), "w", 2)
    assert MutationEvent.from_payload(ev.kind.value, 4, ev.payload()) == ev


def test_out_of_order_always_raises(graph):
    events = [MutationEvent.insert_node(5, 1), MutationEvent.insert_node(4, 2)]
    with pytest.raises(OutOfOrderError) as info:
        graph.writer().apply_stream(events, skip_errors=True)
    assert info.value.line == 2
    assert graph.node(1) is not None


def test_skip_errors_records_findings(graph):
    events = [
        MutationEvent.insert_node(0, 1),
        MutationEvent.insert_node(1, 1),
        MutationEvent.insert_edge(2, 1, 9),
        MutationEvent.delete_node(3, 1),
    ]
    with pytest.raises(AlreadyAliveError):
        graph.writer().apply_stream(events)
    fresh = TemporalGraph(DocStore(), (graph.primary.name,))
    report = fresh.writer().apply_stream(events, skip_errors=True)
    assert report.counters["events"] == 2
    assert report.counters["skipped"] == 2
    assert report.counters["InsertNode"] == 1 and report.counters["DeleteNode"] == 1
    assert set(report.codes()) == {"AlreadyAliveError", "EndpointNotAlive"}
    assert all(f.severity is Severity.SKIPPED for f in report.findings)
    assert report.ok


@pytest.mark.parametrize("seed", range(scale(3, 20)))
def test_random_streams_keep_every_invariant(seed):
    graph = build_graph(random_events(seed=seed, vertices=25, events=scale(300, 2000), id_style="mixed"))
    report = verify_graph(graph)
    assert report.ok, report.to_dict()


def test_cascade_closure_under_many_deletes():
    rng = random.Random(5)
    graph = TemporalGraph(DocStore(), ("st", "mt"))
    w = graph.writer()
    t, next_vid, deletes = 0, 0, 0
    target = scale(150, 1000)
    while deletes < target:
        t += 1
        alive = sorted(graph.lifespans.stab(t))
        if len(alive) < 6:
            w.insert_node(next_vid, t)
            next_vid += 1
            continue
        roll = rng.random()
        if roll < 0.45:
            s, d = rng.choice(alive), rng.choice(alive)
            e = graph.node(s).out_edges.get(d)
            if s != d and (e is None or e.intervals.last.end <= t):
                w.insert_edge(s, d, t)
                w.insert_property(EdgeRef(s, d), "w", t, t)
        elif roll < 0.6:
            v = rng.choice(alive)
            if graph.node(v).attribute_at("p", t) is None:
                w.insert_property(v, "p", t, t)
            else:
                w.delete_property(v, "p", t)
        elif roll < 0.8:
            w.delete_node(rng.choice(alive), t)
            deletes += 1
            w.insert_node(next_vid, t)
            next_vid += 1
        else:
            v = rng.choice(alive)
            live = [u for u, e in graph.node(v).out_edges.items() if e.intervals.contains(t)]
            if live:
                w.delete_edge(v, rng.choice(live), t)
                deletes += 1
    report = verify_graph(graph)
    assert report.ok, report.to_dict()


def test_failed_batches_leave_exactly_the_committed_events(layout_name):
    events = random_events(seed=21, vertices=20, events=scale(300, 1500))
    graph = TemporalGraph(DocStore(), (layout_name,))
    graph.store.fault_injector = RandomFaultInjector(rate=0.1, seed=4)
    w = graph.writer()
    committed = []
    for ev in events:
        try:
            w.apply(ev)
        except ChronostoreError:
            continue
        committed.append(ev)
    assert graph.store.fault_injector.injected > 0

    replayed = build_graph(committed, (layout_name,))
    assert stored_state(graph) == stored_state(replayed)
    assert dict(graph.lifespans.items()) == dict(replayed.lifespans.items())
    assert verify_graph(graph).ok


def test_injected_fault_is_a_skippable_error(graph):
    graph.store.fault_injector = RandomFaultInjector(rate=1.0)
    report = graph.writer().apply_stream([MutationEvent.insert_node(0, 1)], skip_errors=True)
    assert report.codes() == ["InjectedFault"]
    assert graph.node(1) is None
    with pytest.raises(InjectedFault):
        graph.writer().insert_node(1, 0)


def test_aborted_property_leaves_no_new_collection():
    graph = TemporalGraph(DocStore(), ("mt",))
    graph.writer().insert_node(1, 0)
    before = graph.store.content_hash()
    names = graph.store.collection_names()
    graph.store.fault_injector = RandomFaultInjector(rate=1.0)
    with pytest.raises(InjectedFault):
        graph.writer().insert_property(1, "color", "red", 2)
    assert graph.store.collection_names() == names
    assert graph.store.content_hash() == before

    graph.store.fault_injector = None
    graph.writer().insert_property(1, "color", "red", 2)
    assert graph.store.count("v_attr_color") == 1


def test_failed_bulk_load_writes_nothing(both):
    before = both.store.content_hash()
    both.store.fault_injector = RandomFaultInjector(rate=1.0)
    nodes = [NodeRecord(v, [Interval(0, 10)], {"name": [(str(v), Interval(0, 5))]}) for v in range(5)]
    edges = [EdgeRecord(0, v, [Interval(1, 4)]) for v in range(1, 5)]
    with pytest.raises(InjectedFault):
        both.writer().bulk_load(nodes, edges)
    assert both.store.content_hash() == before
    assert both.vertex_count() == 0



def test_bulk_load(both):
    nodes = [
        NodeRecord(1, [Interval(0, 10), Interval(20, 30)], {"name": [("a", Interval(0, 5))]}),
        NodeRecord(2, [Interval(0, 30)]),
    ]
    edges = [EdgeRecord(1, 2, [Interval(1, 4), Interval(22, 25)], {"w": [(3, Interval(1, 2))]})]
    report = both.writer().bulk_load(nodes, edges)
    assert report.counters["vertices"] == 2
    assert report.counters["lifespan_intervals"] == 3
    assert report.counters["edge_intervals"] == 2
    assert report.counters["edge_attribute_intervals"] == 1
    assert both.node(2).in_edges[1].attributes["w"][0].value == 3
    assert verify_graph(both).ok


@pytest.mark.parametrize("nodes,edges", [
    ([NodeRecord(1, [Interval(0, 5), Interval(3, 8)])], []),
    ([NodeRecord(1, [Interval(0, 5)]), NodeRecord(1, [Interval(6, 8)])], []),
    ([NodeRecord(1, [Interval(0, 5)])], [EdgeRecord(1, 9, [Interval(0, 2)])]),
    ([NodeRecord(1, [Interval(0, 5)]), NodeRecord(2, [Interval(3, 9)])], [EdgeRecord(1, 2, [Interval(0, 4)])]),
    ([NodeRecord(1, [Interval(0, 5)], {"a": [("x", Interval(4, 7))]})], []),
])
def test_bulk_load_rejects_broken_input(both, nodes, edges):
    with pytest.raises(InvariantViolation) as info:
        both.writer().bulk_load(nodes, edges)
    assert info.value.problems
    assert both.vertex_count() == 0
    assert both.layout("st").document_count(both.store) == 0


def test_bulk_load_rejects_stored_vertices(graph):
    graph.writer().insert_node(1, 0)
    with pytest.raises(InvariantViolation):
        graph.writer().bulk_load([NodeRecord(1, [Interval(5, 9)])])
