import json
import os

import pytest

from chronostore import bench, cli, settings_store
from chronostore.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, detect_format, main
from chronostore.graph import TemporalGraph
from chronostore.layouts.base import QueryMode
from chronostore.report import LoadReport, Severity


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def events_store(data_dir, capsys):
    path = str(data_dir / "events.tsv")
    code, out, _ = run(capsys, "generate", "events", "--out", path, "--vertices", "20", "--events", "200")
    assert code == EXIT_OK and json.loads(out)["events"] == 200
    code, out, _ = run(capsys, "load", path)
    assert code == EXIT_OK
    body = json.loads(out)
    assert body["format"] == "events"
    assert body["report"]["ok"] is True
    assert body["report"]["counters"]["events"] == 200
    assert os.path.exists(settings_store.default_store_path())
    return path


def test_usage_errors(capsys):
    assert run(capsys)[0] == EXIT_USAGE
    assert run(capsys, "query")[0] == EXIT_USAGE
    assert run(capsys, "frobnicate")[0] == EXIT_USAGE
    assert run(capsys, "--version")[0] == EXIT_OK


def test_missing_store_is_a_usage_error(data_dir, capsys):
    code, _, err = run(capsys, "verify")
    assert code == EXIT_USAGE
    assert "store not found" in err


def test_load_query_verify(events_store, capsys):
    graph = TemporalGraph.open(settings_store.default_store_path(), create=False)
    assert list(graph.layouts) == ["st", "mt"]
    assert graph.get_meta("build")["format"] == "events"

    code, out, _ = run(capsys, "verify")
    assert code == EXIT_OK and json.loads(out)["ok"] is True

    code, out, err = run(capsys, "query", "degree", "--end", "20", "--granularity", "5", "--mode", "rr")
    assert code == EXIT_OK
    assert [row["bucket"] for row in json.loads(out)] == [0, 5, 10, 15]
    assert '"mode": "rr"' in err

    code, out, err = run(capsys, "query", "one_hop", "--vid", "1", "--layout", "mt")
    assert code == EXIT_OK
    assert isinstance(json.loads(out), list)
    assert '"mode": "direct"' in err

    code, out, _ = run(capsys, "query", "snapshot", "--at", "10")
    assert code == EXIT_OK and "vertices" in json.loads(out)
    assert run(capsys, "query", "snapshot")[0] == EXIT_USAGE
    assert run(capsys, "query", "history")[0] == EXIT_USAGE


def test_load_replaces_unless_appending(events_store, capsys):
    first = TemporalGraph.open(settings_store.default_store_path(), create=False).vertex_count()
    assert run(capsys, "load", events_store, "--layout", "mt")[0] == EXIT_OK
    graph = TemporalGraph.open(settings_store.default_store_path(), create=False)
    assert list(graph.layouts) == ["mt"] and graph.vertex_count() == first
    assert run(capsys, "load", events_store, "--append")[0] == EXIT_USAGE


def test_snapshot_and_ldbc_loads(data_dir, capsys):
    edges = str(data_dir / "snap.tsv")
    assert run(capsys, "generate", "snapshots", "--out", edges, "--vertices", "15",
               "--edges", "40", "--snapshots", "5")[0] == EXIT_OK
    assert detect_format(edges) == "snapshots"
    assert run(capsys, "load", edges)[0] == EXIT_USAGE
    code, out, _ = run(capsys, "load", edges, "--snapshots", "5", "--all-alive", "--layout", "st")
    assert code == EXIT_OK and json.loads(out)["format"] == "snapshots"

    dump = str(data_dir / "dump")
    assert run(capsys, "generate", "ldbc", "--out", dump, "--persons", "20", "--forums", "4",
               "--knows", "30", "--memberships", "20")[0] == EXIT_OK
    assert detect_format(dump) == "ldbc"
    code, out, _ = run(capsys, "load", dump, "--bulk")
    assert code == EXIT_OK and json.loads(out)["vertices"] == 24
    assert run(capsys, "verify")[0] == EXIT_OK

    stream = str(data_dir / "ldbc.events")
    code, out, _ = run(capsys, "transform", dump, "--out", stream)
    assert code == EXIT_OK
    assert detect_format(stream) == "events"
    code, out, _ = run(capsys, "load", stream, "--store", str(data_dir / "replayed.chrn"))
    assert code == EXIT_OK and json.loads(out)["vertices"] == 24


def test_bench_writes_both_reports(events_store, data_dir, capsys):
    code, out, _ = run(capsys, "bench", "--reps", "1", "--warmup", "0", "--fractions", "50,100",
                       "--layout", "st", "--mode", "ra,id")
    assert code == EXIT_OK
    body = json.loads(out)
    assert body["cells"] == 4 and body["attestation"]["verified"] is True
    assert body["json"] == str(data_dir / "bench" / "bench-degree.json")
    assert os.path.exists(body["csv"])
    assert run(capsys, "bench", "--fractions", "0,50")[0] == EXIT_USAGE


def test_bench_mismatch_exits_1(events_store, monkeypatch, capsys):
    real = bench.execute

    def broken(graph, plan):
        result, metrics = real(graph, plan)
        if plan.mode is QueryMode.RR:
            result = result[1:]
        return result, metrics

    monkeypatch.setattr(bench, "execute", broken)
    code, _, err = run(capsys, "bench", "--reps", "1", "--warmup", "0", "--fractions", "100")
    assert code == EXIT_FAILED
    assert "st/rr" in err


def test_failed_verification_exits_1(events_store, monkeypatch, capsys):
    def failing(graph):
        report = LoadReport()
        report.add("symmetry", Severity.ERROR, "out-edge and in-edge copies disagree")
        return report

    monkeypatch.setattr(cli, "verify_graph", failing)
    code, out, _ = run(capsys, "verify")
    assert code == EXIT_FAILED
    assert json.loads(out)["findings"][0]["code"] == "symmetry"


def test_config_round_trip(data_dir, capsys):
    code, out, _ = run(capsys, "config", "--set", "reps=3", "mode=rr", "fractions=10,100")
    assert code == EXIT_OK
    body = json.loads(out)
    assert body["settings"]["reps"] == 3 and body["settings"]["fractions"] == [10, 100]
    assert settings_store.get_settings()["mode"] == "rr"
    assert run(capsys, "config", "--set", "reps=0")[0] == EXIT_USAGE
    assert run(capsys, "config", "--set", "colour=red")[0] == EXIT_USAGE
    assert run(capsys, "config", "--set", "reps")[0] == EXIT_USAGE
    assert settings_store.get_settings()["reps"] == 3


def test_settings_validation(data_dir):
    assert settings_store.get_settings() == settings_store.DEFAULTS
    with pytest.raises(ValueError):
        settings_store.update_settings(layout="xt")
    with pytest.raises(ValueError):
        settings_store.update_settings(batch_size=True)
    assert not os.path.exists(settings_store.settings_path())
    saved = settings_store.update_settings(skip_errors="yes", log_level="debug", batch_size="0")
    assert saved["skip_errors"] is True and saved["log_level"] == "DEBUG" and saved["batch_size"] == 0


def test_unreadable_settings_fall_back_to_defaults(data_dir):
    data_dir.mkdir(parents=True, exist_ok=True)
    (data_dir / "settings.json").write_text("{not json")
    assert settings_store.get_settings() == settings_store.DEFAULTS
    (data_dir / "settings.json").write_text(json.dumps({"reps": 9, "stale": 1}))
    assert settings_store.get_settings()["reps"] == 9
    assert "stale" not in settings_store.get_settings()


def test_parse_helpers():
    assert settings_store.parse_fractions("1, 2.5,100") == [1, 2.5, 100]
    with pytest.raises(ValueError):
        settings_store.parse_fractions("abc")
    with pytest.raises(ValueError):
        settings_store.parse_fractions("150")
    assert settings_store.parse_assignments(["a=1", " b = x=y "]) == {"a": "1", "b": "x=y"}
