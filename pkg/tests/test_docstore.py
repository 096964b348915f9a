import threading

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chronostore.docstore import (TRUE, And, AnyElement, Compare, DocStore, IndexDef, Or,
                                  Overlaps, RandomFaultInjector)
from chronostore.docstore.paths import order_key, projection_tree, project, resolve
from chronostore.errors import (ConflictError, DuplicateCollection, InjectedFault,
                                PredicateTypeError, UnknownCollection, UnknownIndex,
                                ValidationError)
from chronostore.temporal import Interval


def people() -> DocStore:
    store = DocStore()
    store.create_collection("people", ("id",), [
        IndexDef("age", ("age",)),
        IndexDef("tag", ("tags",), multikey=True),
    ])
    batch = store.batch()
    for i, (age, tags) in enumerate([(30, ["a", "b"]), (25, ["b"]), (41, []), (25, ["c", "a"])]):
        batch.upsert("people", {"id": i, "age": age, "tags": tags, "name": f"p{i}"})
    batch.commit()
    return store


def test_catalog_errors():
    store = people()
    with pytest.raises(DuplicateCollection):
        store.create_collection("people", ("id",))
    with pytest.raises(UnknownCollection):
        store.count("nobody")
    with pytest.raises(UnknownIndex):
        store.find("people", "missing", (1,))
    assert store.ensure_collection("people", ("id",)) is store.collection("people")


def test_index_range_scan_is_ordered_and_inclusive():
    store = people()
    ages = [d["age"] for d in store.index_range_scan("people", "age", lower=(25,), upper=(30,))]
    assert ages == [25, 25, 30]
    assert [d["id"] for d in store.find("people", "age", (25,))] == [1, 3]


def test_multikey_index_yields_each_document_once():
    store = people()
    ids = [d["id"] for d in store.index_range_scan("people", "tag", lower=("a",), upper=("b",))]
    assert sorted(ids) == [0, 1, 3]
    assert len(ids) == 3


def test_list_on_plain_index_is_rejected():
    store = DocStore()
    store.create_collection("c", ("id",), [IndexDef("v", ("v",))])
    with pytest.raises(ValidationError):
        store.batch().upsert("c", {"id": 1, "v": [1, 2]}).commit()
    assert store.count("c") == 0


def test_mixed_id_types_share_one_order():
    store = DocStore()
    store.create_collection("c", ("id",), [IndexDef("id", ("id",))])
    batch = store.batch()
    for v in ["b", 3, "a", 1, None, 2.5]:
        batch.upsert("c", {"id": v})
    batch.commit()
    assert [d["id"] for d in store.index_range_scan("c", "id")] == [None, 1, 2.5, 3, "a", "b"]
    assert order_key(2) < order_key("1")


def test_update_and_delete_maintain_indexes():
    store = people()
    store.batch().update("people", 0, {"age": 50}).delete("people", 1).commit()
    assert [d["id"] for d in store.find("people", "age", (50,))] == [0]
    assert store.find("people", "age", (25,)).to_list()[0]["id"] == 3
    assert store.get_by_key("people", 1) is None
    assert store.verify_indexes() == []
    with pytest.raises(ValidationError):
        store.batch().update("people", 0, {"id": 9}).commit()


def test_overwrite_replaces_every_index_entry():
    store = people()
    store.batch().upsert("people", {"id": 0, "age": 31, "tags": ["z"], "name": "p0"}).commit()
    store.batch().upsert("people", {"id": 0, "age": 31, "tags": ["z"], "name": "p0"}).commit()
    assert store.find("people", "age", (30,)).to_list() == []
    assert [d["id"] for d in store.find("people", "tag", ("a",))] == [3]
    assert [d["id"] for d in store.find("people", "tag", ("z",))] == [0]
    assert len(store.collection("people").index_entries("tag")) == 5
    store.batch().delete("people", 0).delete("people", 0).commit()
    assert store.find("people", "tag", ("z",)).to_list() == []
    assert store.verify_indexes() == []


def test_batch_creates_collections_on_commit_only():
    store = people()
    before = store.content_hash()
    batch = store.batch().create_collection("pets", ("id",), [IndexDef("owner", ("owner",))])
    batch.upsert("pets", {"id": 1, "owner": 0}).update("people", 77, {"age": 2})
    with pytest.raises(ValidationError):
        batch.commit()
    assert not store.has_collection("pets")
    assert store.content_hash() == before

    store.fault_injector = RandomFaultInjector(rate=1.0)
    batch = store.batch().create_collection("pets", ("id",)).upsert("pets", {"id": 1})
    with pytest.raises(InjectedFault):
        batch.commit()
    assert store.collection_names() == ["people"]

    store.fault_injector = None
    batch = store.batch().create_collection("pets", ("id",), [IndexDef("owner", ("owner",))])
    batch.upsert("pets", {"id": 1, "owner": 0}).commit()
    assert [d["id"] for d in store.find("pets", "owner", (0,))] == [1]
    store.batch().create_collection("pets", ("other",)).upsert("pets", {"id": 2}).commit()
    assert store.collection("pets").key_fields == ("id",) and store.count("pets") == 2


def test_index_range_scan_filters_inside_the_store():
    store = people()
    cursor = store.index_range_scan("people", "age", upper=(30,),
                                    predicate=Compare("name", "==", "p3"))
    assert [d["id"] for d in cursor] == [3]
    assert cursor.stats.scanned == 3 and cursor.stats.fetched == 1



def test_failed_batch_leaves_nothing_behind():
    store = people()
    before = store.content_hash()
    batch = store.batch().upsert("people", {"id": 9, "age": 1, "tags": []})
    batch.update("people", 77, {"age": 2})
    with pytest.raises(ValidationError):
        batch.commit()
    assert store.content_hash() == before
    assert store.get_by_key("people", 9) is None


def test_injected_fault_aborts_the_whole_batch():
    store = people()
    before = store.content_hash()
    store.fault_injector = RandomFaultInjector(rate=1.0, seed=3)
    batch = store.batch()
    for i in range(10, 20):
        batch.upsert("people", {"id": i, "age": i, "tags": []})
    with pytest.raises(InjectedFault):
        batch.commit()
    assert store.content_hash() == before
    assert store.fault_injector.injected == 1


def test_second_committer_gets_conflict():
    store = people()
    store._writer.acquire()
    try:
        with pytest.raises(ConflictError):
            store.batch().upsert("people", {"id": 5, "age": 5, "tags": []}).commit()
    finally:
        store._writer.release()


def test_cursor_is_isolated_from_later_commits():
    store = people()
    cursor = store.scan("people", batch_size=2)
    store.batch().delete("people", 0).update("people", 1, {"age": 99}).commit()
    docs = cursor.to_list()
    assert {d["id"] for d in docs} == {0, 1, 2, 3}
    assert next(d for d in docs if d["id"] == 1)["age"] == 25


def test_cursor_batches_and_stats():
    store = people()
    cursor = store.scan("people", batch_size=3)
    sizes = [len(b) for b in cursor.batches()]
    assert sizes == [3, 1]
    assert cursor.stats.fetched == 4 and cursor.stats.peak_buffered == 3
    single = store.scan("people", batch_size=0)
    assert [len(b) for b in single.batches()] == [4]
    with pytest.raises(RuntimeError):
        list(single.batches())


def test_filtered_scan_projects_and_counts():
    store = people()
    cursor = store.filtered_scan("people", Compare("age", "<", 30), projection=["id"])
    docs = cursor.to_list()
    assert sorted(d["id"] for d in docs) == [1, 3]
    assert all(set(d) == {"id"} for d in docs)
    assert cursor.stats.scanned == 4 and cursor.stats.fetched == 2


def test_predicates_compose():
    doc = {"a": 3, "ivs": [{"start": 0, "end": 4}, {"start": 10, "end": 12}], "tags": ["x", "y"]}
    assert Compare("tags", "==", "y").matches(doc)
    assert (Compare("a", ">=", 3) & Compare("a", "<", 4)).matches(doc)
    assert (Compare("a", ">", 5) | Compare("a", "==", 3)).matches(doc)
    assert AnyElement("ivs", Overlaps("start", "end", Interval(11, 20))).matches(doc)
    assert not AnyElement("ivs", Overlaps("start", "end", Interval(4, 10))).matches(doc)
    assert not And((TRUE, Compare("missing", "==", 1))).matches(doc)
    assert Or((Compare("missing", "==", 1), TRUE)).matches(doc)


def test_predicate_type_errors():
    store = DocStore()
    store.create_collection("c", ("id",), fields=("id", "v"))
    store.batch().upsert("c", {"id": 1, "v": "text"}).commit()
    with pytest.raises(PredicateTypeError):
        store.filtered_scan("c", Compare("nope", "==", 1))
    with pytest.raises(PredicateTypeError):
        store.filtered_scan("c", Compare("v", "<", 3)).to_list()
    with pytest.raises(TypeError):
        Compare("v", "~", 1)


def test_resolve_and_project_paths():
    doc = {"a": {"b": 1, "c": 2}, "l": [{"x": 1, "y": 2}, {"x": 3}], "s": 5}
    assert resolve(doc, "l.x") == ([1, 3], True)
    assert resolve(doc, "a.b") == ([1], False)
    assert resolve(doc, "missing") == ([], False)
    tree = projection_tree(["a.b", "l.x", "s"])
    assert project(doc, tree) == {"a": {"b": 1}, "l": [{"x": 1}, {"x": 3}], "s": 5}


def test_readers_run_while_a_writer_commits():
    store = people()
    errors = []

    def write():
        try:
            for i in range(100, 160):
                store.batch().upsert("people", {"id": i, "age": i % 50, "tags": ["z"]}).commit()
        except Exception as e:  # pragma: no cover
            errors.append(e)

    t = threading.Thread(target=write)
    t.start()
    for _ in range(50):
        with store.read_transaction():
            n = store.count("people")
            assert len(store.scan("people").to_list()) == n
    t.join()
    assert not errors
    assert store.count("people") == 64
    assert store.verify_indexes() == []


@given(st.lists(st.tuples(st.integers(0, 30), st.integers(-5, 5), st.booleans()), max_size=60))
def test_indexes_match_a_rebuild_after_any_batch_sequence(ops):
    store = DocStore()
    store.create_collection("c", ("id",), [IndexDef("v", ("v",)), IndexDef("vs", ("vs",), multikey=True)])
    model = {}
    for key, value, delete in ops:
        if delete:
            store.batch().delete("c", key).commit()
            model.pop(key, None)
        else:
            store.batch().upsert("c", {"id": key, "v": value, "vs": [value, value + 1]}).commit()
            model[key] = value
    assert store.verify_indexes() == []
    got = [(d["id"], d["v"]) for d in store.index_range_scan("c", "v", lower=(0,))]
    expected = sorted(((k, v) for k, v in model.items() if v >= 0), key=lambda kv: (kv[1], kv[0]))
    assert got == expected
