import random
from fractions import Fraction

import pytest

from chronostore.docstore.store import DocStore
from chronostore.graph import TemporalGraph
from chronostore.layouts import FetchStats, QueryMode
from chronostore.mutations import NodeRecord, EdgeRecord
from chronostore.queries import (QueryPlan, average_degree, degree_distribution, execute, execute_global,
                                 one_hop, result_payload, snapshot_at, vertex_history)
from chronostore.synthetic import random_events, uniform_records
from chronostore.temporal import ALIVE_END, Interval
from tests.conftest import build_graph, scale
from tests.simulator import Replay

MODES = (QueryMode.RA, QueryMode.RR, QueryMode.ID)


@pytest.fixture
def small(both):
    """Three vertices and a few edges with hand-checked degrees."""
    w = both.writer()
    w.insert_node(1, 0)
    w.insert_node(2, 0)
    w.insert_node(3, 2)
    w.insert_edge(1, 2, 1)
    w.insert_edge(3, 1, 2)
    w.insert_property(1, "name", "one", 0)
    w.delete_edge(1, 2, 4)
    w.delete_node(3, 5)
    return both


@pytest.mark.parametrize("layout", ["st", "mt"])
@pytest.mark.parametrize("mode", MODES)
def test_degree_distribution_by_hand(small, layout, mode):
    hist = degree_distribution(small, Interval(0, 6), 1, mode, layout)
    assert [h.bucket for h in hist] == [0, 1, 2, 3, 4, 5]
    assert [h.counts for h in hist] == [
        {0: 2},
        {1: 2},
        {1: 2, 2: 1},
        {1: 2, 2: 1},
        {0: 1, 1: 2},
        {0: 2},
    ]


def test_granularity_evaluates_bucket_starts(small):
    hist = degree_distribution(small, Interval(0, 6), 4)
    assert [(h.bucket, h.counts) for h in hist] == [(0, {0: 2}), (4, {0: 1, 1: 2})]
    means = average_degree(small, Interval(0, 6), 4)
    assert means == [(0, Fraction(0)), (4, Fraction(2, 3))]


def test_empty_buckets_have_empty_counts(both):
    w = both.writer()
    w.insert_node(1, 10)
    hist = degree_distribution(both, Interval(0, 12), 5)
    assert [(h.bucket, h.counts) for h in hist] == [(0, {}), (5, {}), (10, {0: 1})]
    assert average_degree(both, Interval(0, 5), 5) == [(0, Fraction(0))]


def test_self_loop_counts_once(both):
    both.writer().bulk_load([NodeRecord(1, [Interval(0, 10)])], [EdgeRecord(1, 1, [Interval(2, 6)])])
    for layout in ("st", "mt"):
        for mode in MODES:
            hist = degree_distribution(both, Interval(0, 8), 2, mode, layout)
            assert [h.counts for h in hist] == [{0: 1}, {1: 1}, {1: 1}, {0: 1}]


def test_global_queries_need_a_finite_end(small):
    with pytest.raises(ValueError):
        degree_distribution(small, Interval(0, ALIVE_END), 1)
    with pytest.raises(ValueError):
        degree_distribution(small, Interval(0, 6), 0)


@pytest.mark.parametrize("seed", range(scale(12, 200)))
def test_every_layout_and_mode_agrees(seed):
    events = random_events(seed=seed, vertices=scale(20, 60), events=scale(250, 1500))
    graph = build_graph(events)
    rng = random.Random(seed)
    last = events[-1].t
    start = rng.randrange(0, last + 1)
    q = Interval(start, rng.randrange(start + 1, last + 10))
    g = rng.randint(1, 7)
    for query in ("degree", "avg_degree"):
        payloads = set()
        for layout in ("st", "mt"):
            for mode in MODES:
                result, _ = execute(graph, QueryPlan(query, q, layout, mode, g, batch_size=rng.choice([0, 3, 64])))
                payloads.add(repr(result_payload(query, result)))
        assert len(payloads) == 1


@pytest.mark.parametrize("seed", range(scale(6, 100)))
def test_results_match_a_naive_replay(seed):
    events = random_events(seed=seed, vertices=15, events=scale(200, 800), id_style="mixed")
    graph = build_graph(events)
    replay = Replay(events)
    rng = random.Random(seed)
    last = replay.last_tick
    vids = sorted({ev.target for ev in events if ev.kind.value.endswith("Node")}, key=str)

    for _ in range(8):
        t = rng.randrange(0, last + 3)
        state = replay.at(t)
        for layout in ("st", "mt"):
            snap = snapshot_at(graph, t, layout)
            assert snap.vertices == state.vertices
            assert snap.edges == state.edges
            assert snap.vertex_attributes == state.vertex_attributes
            assert snap.edge_attributes == state.edge_attributes

    for _ in range(8):
        v = rng.choice(vids)
        start = rng.randrange(0, last + 2)
        end = rng.randrange(start + 1, last + 4)
        q = Interval(start, end)
        for layout in ("st", "mt"):
            assert one_hop(graph, v, q, layout) == replay.one_hop(v, start, end)
            node = vertex_history(graph, v, q, layout)
            for t in replay.instants(start, end):
                state = replay.at(t)
                alive = node is not None and node.lifespan.contains(t)
                assert alive == (v in state.vertices)
                if alive:
                    assert node.attributes_at(t) == state.vertex_attributes.get(v, {})

    g = rng.randint(1, 4)
    q = Interval(0, last + 2)
    expected = replay.degree_counts(q.start, q.end, g)
    for layout in ("st", "mt"):
        for mode in MODES:
            got = degree_distribution(graph, q, g, mode, layout)
            assert [h.counts for h in got] == expected


def test_unknown_vertex_has_no_history(small):
    assert vertex_history(small, 99, Interval(0, 10)) is None
    assert one_hop(small, 99, Interval(0, 10)) == set()
    assert one_hop(small, 1, Interval(5, 10)) == set()
    assert one_hop(small, 1, Interval(0, 10)) == {2, 3}


def test_snapshot_includes_attributes(small):
    snap = snapshot_at(small, 2, "mt")
    assert snap.vertices == {1, 2, 3}
    assert snap.edges == {(1, 2), (3, 1)}
    assert snap.vertex_attributes == {1: {"name": "one"}}
    assert snapshot_at(small, 2, "st").to_dict() == snap.to_dict()


@pytest.fixture(scope="module")
def uniform():
    graph = TemporalGraph(DocStore(), ("st", "mt"))
    nodes, edges = uniform_records(seed=1, vertices=scale(400, 5000), edges=scale(1500, 25000), horizon=1000)
    graph.writer().bulk_load(nodes, edges)
    return graph


@pytest.mark.parametrize("layout", ["st", "mt"])
def test_ra_fetches_every_document(uniform, layout):
    _, metrics = execute(uniform, QueryPlan("degree", Interval(0, 100), layout, QueryMode.RA, 10))
    assert metrics.documents_fetched == uniform.layout(layout).document_count(uniform.store)
    assert metrics.keys_fetched == 0


@pytest.mark.parametrize("layout", ["st", "mt"])
@pytest.mark.parametrize("batch_size", [16, 64])
def test_id_buffers_one_batch_per_open_stream(uniform, layout, batch_size):
    _, metrics = execute(uniform, QueryPlan("degree", Interval(0, 1000), layout, QueryMode.ID, 10,
                                             batch_size=batch_size))
    assert metrics.documents_fetched > 0
    assert 0 < metrics.peak_batch <= batch_size
    if layout == "st":
        assert 0 < metrics.peak_buffered <= batch_size
        return
    widest = max(len(n.lifespan) + sum(len(e.intervals) for e in n.out_edges.values())
                 + sum(len(e.intervals) for e in n.in_edges.values())
                 for n in uniform.layout("mt").nodes(uniform.store))
    assert 3 * batch_size <= metrics.peak_buffered <= 3 * (batch_size + widest)


@pytest.mark.parametrize("mode", [QueryMode.ID, QueryMode.RR])
def test_peak_includes_a_high_degree_vertex(mode):
    graph = TemporalGraph(DocStore(), ("mt",))
    w = graph.writer()
    for v in range(21):
        w.insert_node(v, 0)
    for v in range(1, 21):
        w.insert_edge(0, v, 1)
    result, metrics = execute(graph, QueryPlan("degree", Interval(0, 10), "mt", mode, 5, batch_size=4))
    assert [h.counts for h in result] == [{0: 21}, {1: 20, 20: 1}]
    assert metrics.peak_buffered >= 20


def test_rr_reads_keys_before_documents(uniform):
    q = Interval(0, 100)
    _, rr = execute(uniform, QueryPlan("degree", q, "st", QueryMode.RR, 10))
    _, ra = execute(uniform, QueryPlan("degree", q, "st", QueryMode.RA, 10))
    assert rr.keys_fetched == uniform.vertex_count()
    assert rr.documents_fetched <= ra.documents_fetched


def test_single_batch_buffers_the_whole_result(uniform):
    stats = FetchStats()
    degree_distribution(uniform, Interval(0, 1000), 100, QueryMode.ID, "st", batch_size=0, stats=stats)
    assert stats.documents.peak_buffered == uniform.vertex_count()


def test_local_plans_report_direct_mode():
    plan = QueryPlan("one_hop", Interval(0, 5), vid=1, mode=QueryMode.RA)
    assert plan.mode_label == "direct"
    with pytest.raises(ValueError):
        QueryPlan("history", Interval(0, 5))
    with pytest.raises(ValueError):
        QueryPlan("pagerank", Interval(0, 5))


def test_execute_global_refuses_local_queries(small):
    result, metrics = execute_global(small, QueryPlan("degree", Interval(0, 6), "mt", QueryMode.RR, 4))
    assert [h.counts for h in result] == [{0: 2}, {0: 1, 1: 2}]
    assert metrics.keys_fetched > 0
    with pytest.raises(ValueError):
        execute_global(small, QueryPlan("one_hop", Interval(0, 6), vid=1))
