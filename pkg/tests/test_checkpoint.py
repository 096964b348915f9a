import pytest

from chronostore.docstore.checkpoint import load_checkpoint, persist_checkpoint
from chronostore.errors import CorruptCheckpoint, StoreIOError
from chronostore.graph import TemporalGraph
from chronostore.synthetic import random_events
from tests.conftest import build_graph


@pytest.fixture
def saved(tmp_path):
    graph = build_graph(random_events(seed=11, vertices=20, events=250, id_style="mixed"))
    path = str(tmp_path / "store.chrn")
    graph.persist(path)
    return graph, path


def test_round_trip_preserves_content_hash(saved):
    graph, path = saved
    loaded = load_checkpoint(path)
    assert loaded.content_hash() == graph.store.content_hash()
    assert loaded.verify_indexes() == []
    assert loaded.collection_names() == graph.store.collection_names()


def test_reopened_graph_keeps_layouts_and_lifespans(saved):
    graph, path = saved
    reopened = TemporalGraph.open(path, layouts=("st",), create=False)
    assert list(reopened.layouts) == ["st", "mt"]
    assert dict(reopened.lifespans.items()) == dict(graph.lifespans.items())


def test_flipped_byte_is_detected(saved):
    _, path = saved
    data = bytearray(open(path, "rb").read())
    data[len(data) // 2] ^= 0xFF
    open(path, "wb").write(bytes(data))
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(path)


@pytest.mark.parametrize("keep", [3, 40, -9, -1])
def test_truncation_is_detected(saved, keep):
    _, path = saved
    data = open(path, "rb").read()
    open(path, "wb").write(data[:keep])
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(path)


def test_bad_magic(tmp_path):
    path = tmp_path / "x.chrn"
    path.write_bytes(b"NOPE\x01\x00")
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(str(path))


def test_missing_file_is_an_io_error(tmp_path):
    with pytest.raises(StoreIOError):
        load_checkpoint(str(tmp_path / "absent.chrn"))
    with pytest.raises(FileNotFoundError):
        TemporalGraph.open(str(tmp_path / "absent.chrn"), create=False)


def test_failed_write_keeps_the_previous_checkpoint(saved, monkeypatch):
    graph, path = saved
    before = open(path, "rb").read()
    graph.writer().insert_node("late", 10_000)

    def broken(*args, **kwargs):
        raise OSError("disk full")

    monkeypatch.setattr("chronostore.docstore.checkpoint.os.replace", broken)
    with pytest.raises(StoreIOError):
        persist_checkpoint(graph.store, path)
    assert open(path, "rb").read() == before
