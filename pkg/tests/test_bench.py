import csv
import json

import pytest
from pydantic import ValidationError

from chronostore import bench
from chronostore.bench import (Timing, default_granularity, fraction_interval, history_span,
                               run_bench, write_report)
from chronostore.docstore.store import DocStore
from chronostore.errors import MismatchError
from chronostore.graph import TemporalGraph
from chronostore.layouts.base import QueryMode
from chronostore.schemas import BenchSpec
from chronostore.synthetic import random_events
from chronostore.temporal import Interval
from tests.conftest import build_graph


@pytest.fixture
def store_path(tmp_path):
    graph = build_graph(random_events(seed=9, vertices=20, events=200))
    path = str(tmp_path / "store.chrn")
    graph.persist(path)
    return path


def test_history_span_and_fractions():
    graph = TemporalGraph(DocStore(), ("st",))
    assert history_span(graph) == (0, 1)
    w = graph.writer()
    w.insert_node(1, 10)
    w.insert_node(2, 12)
    w.insert_edge(1, 2, 15)
    w.delete_node(2, 40)
    assert history_span(graph) == (10, 41)
    assert fraction_interval((10, 41), 100) == Interval(10, 41)
    assert fraction_interval((10, 41), 50) == Interval(10, 26)
    assert fraction_interval((10, 41), 1) == Interval(10, 11)
    assert default_granularity((10, 41)) == 1
    assert default_granularity((0, 5000)) == 50


def test_p95_is_nearest_rank():
    t = Timing.from_samples([float(i) for i in range(1, 21)])
    assert t.p95 == 19.0 and t.min == 1.0 and t.max == 20.0 and t.median == 10.5
    assert Timing.from_samples([5.0, 1.0, 3.0]).p95 == 5.0
    assert Timing.from_samples([]).reps == 0


def test_bench_spec_validation():
    with pytest.raises(ValidationError):
        BenchSpec(store="x", query="snapshot")
    with pytest.raises(ValidationError):
        BenchSpec(store="x", fractions=[0])
    with pytest.raises(ValidationError):
        BenchSpec(store="x", reps=0)
    with pytest.raises(ValidationError):
        BenchSpec(store="x", layouts=["xt"])


def test_degree_grid(store_path, tmp_path):
    spec = BenchSpec(store=store_path, reps=2, warmup=1)
    report = run_bench(spec)
    assert len(report.cells) == 24
    assert {(c.layout, c.mode) for c in report.cells} == {
        (layout, mode) for layout in ("st", "mt") for mode in ("ra", "rr", "id")}
    assert report.attestation["verified"] is True
    assert report.attestation["cells_per_fraction"] == 6
    for fraction in (1, 25, 50, 100):
        hashes = {c.result_sha256 for c in report.cells if c.fraction == fraction}
        assert hashes == {report.attestation["payload_sha256"][str(fraction)]}
    assert all(c.timing.reps == 2 for c in report.cells)
    ra = [c for c in report.cells if c.mode == "ra" and c.fraction == 1]
    assert all(c.metrics.keys_fetched == 0 for c in ra)
    assert all(c.metrics.peak_batch <= 64 for c in report.cells if c.mode == "id")

    json_path, csv_path = write_report(report, str(tmp_path / "out" / "bench.json"))
    assert json_path.endswith("bench.json") and csv_path.endswith("bench.csv")
    data = json.loads(open(json_path).read())
    assert len(data["cells"]) == 24
    with open(csv_path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 24
    assert rows[0]["query"] == "degree" and rows[0]["reps"] == "2"


def test_same_seed_gives_the_same_payloads(store_path):
    spec = BenchSpec(store=store_path, query="avg_degree", reps=1, warmup=0, fractions=[50, 100])
    assert run_bench(spec).payloads() == run_bench(spec).payloads()


def test_local_query_grid(store_path):
    spec = BenchSpec(store=store_path, query="one_hop", reps=1, warmup=0, seed=3)
    report = run_bench(spec)
    assert len(report.cells) == 8
    assert {c.mode for c in report.cells} == {"direct"}
    assert report.vid is not None


def test_disagreeing_cells_abort_the_run(store_path, monkeypatch):
    real = bench.execute

    def broken(graph, plan):
        result, metrics = real(graph, plan)
        if plan.layout == "mt" and plan.mode is QueryMode.RR:
            result = result[:-1]
        return result, metrics

    monkeypatch.setattr(bench, "execute", broken)
    with pytest.raises(MismatchError) as info:
        run_bench(BenchSpec(store=store_path, reps=1, warmup=0))
    assert "mt/rr" in info.value.cells


def test_missing_store_or_layout(tmp_path):
    with pytest.raises(FileNotFoundError):
        run_bench(BenchSpec(store=str(tmp_path / "absent.chrn")))
    graph = build_graph(random_events(seed=1, vertices=5, events=20), ("st",))
    path = str(tmp_path / "st-only.chrn")
    graph.persist(path)
    with pytest.raises(ValueError):
        run_bench(BenchSpec(store=path, reps=1))
