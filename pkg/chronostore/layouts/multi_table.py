"""
MT: the multi-table layout.

The diachronic node is split into three groups of collections, vertices,
outgoing edges and incoming edges, each holding an existence collection plus
one collection per attribute:

    v_exist              (vid, start)           -> end
    v_attr_<name>        (vid, start)           -> end, value
    e_out_exist          (source, target, start) -> end
    e_out_attr_<name>    (source, target, start) -> end, value
    e_in_exist           (target, source, start) -> end
    e_in_attr_<name>     (target, source, start) -> end, value

Every row is one interval, so each change to the graph writes a bounded
number of rows. Edge attributes are kept on both sides, like the edges
themselves. Attribute collections appear the first time a batch needs them.

Vertex collections are indexed on ``vid`` (with ``start`` as a suffix, which
also serves ``(vid, start)`` lookups) and on ``lifespan`` ``(start, end)``; a
third ``(vid, start, end)`` index would add nothing, since ``(vid, start)``
is already the key.

Edge collections carry multikey indexes on ``source``, ``target`` and
``start``. Walking ``v_exist`` by its ``vid`` index and the edge collections
by ``source``/``target`` gives several streams in the same vertex order, which
the ID mode merges holding one batch per stream plus one vertex's rows.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from chronostore.docstore.cursor import Cursor
from chronostore.docstore.paths import order_key
from chronostore.docstore.predicates import Overlaps
from chronostore.docstore.store import DocStore, IndexDef, WriteBatch
from chronostore.errors import CorruptLayout
from chronostore.layouts.base import (BufferGauge, FetchStats, Layout, QueryMode, Records,
                                      VertexSlice, drain, overlaps_doc)
from chronostore.layouts.model import (AttrHistory, AttrValue, DiachronicNode, Direction,
                                       EdgeHistory, Vid, sort_history, vid_order)
from chronostore.temporal import Interval, IntervalSet

V_EXIST = "v_exist"
E_OUT_EXIST = "e_out_exist"
E_IN_EXIST = "e_in_exist"
V_ATTR = "v_attr_"
E_OUT_ATTR = "e_out_attr_"
E_IN_ATTR = "e_in_attr_"

_VERTEX_INDEXES = (IndexDef("vid", ("vid", "start")), IndexDef("lifespan", ("start", "end")))
_EDGE_INDEXES = (
    IndexDef("source", ("source",), multikey=True),
    IndexDef("target", ("target",), multikey=True),
    IndexDef("start", ("start",), multikey=True),
)
_EDGE_ATTR_INDEXES = _EDGE_INDEXES[:2]

_OUT_KEY = ("source", "target", "start")
_IN_KEY = ("target", "source", "start")

Group = Tuple[tuple, List[dict]]


def _schema(collection: str) -> Tuple[Tuple[str, ...], Sequence[IndexDef], Tuple[str, ...]]:
    """(key fields, indexes, declared fields) for any MT collection name."""
    if collection == V_EXIST:
        return ("vid", "start"), _VERTEX_INDEXES, ("vid", "start", "end")
    if collection == E_OUT_EXIST:
        return _OUT_KEY, _EDGE_INDEXES, ("source", "target", "start", "end")
    if collection == E_IN_EXIST:
        return _IN_KEY, _EDGE_INDEXES, ("source", "target", "start", "end")
    if collection.startswith(V_ATTR):
        return ("vid", "start"), _VERTEX_INDEXES, ("vid", "start", "end", "value")
    if collection.startswith(E_OUT_ATTR):
        return _OUT_KEY, _EDGE_ATTR_INDEXES, ("source", "target", "start", "end", "value")
    if collection.startswith(E_IN_ATTR):
        return _IN_KEY, _EDGE_ATTR_INDEXES, ("source", "target", "start", "end", "value")
    raise ValueError(f"{collection!r} is not a multi-table collection")


def _grouped(docs: Iterable[dict], field: str, gauge: BufferGauge) -> Iterator[Group]:
    """Consecutive rows with the same ``field``; each group counts as held until the next."""
    for ok, rows in itertools.groupby(docs, key=lambda d: order_key(d[field])):
        group = list(rows)
        gauge.hold(len(group))
        try:
            yield ok, group
        finally:
            gauge.release(len(group))


def _join(primary: Iterator[Group], others: List[Iterator[Group]]) -> Iterator[Tuple[List[dict], List[List[dict]]]]:
    """For each primary group, the group with the same vertex from every other stream."""
    heads = [next(it, None) for it in others]
    for ok, rows in primary:
        matched: List[List[dict]] = []
        for i, it in enumerate(others):
            while heads[i] is not None and heads[i][0] < ok:
                heads[i] = next(it, None)
            matched.append(heads[i][1] if heads[i] is not None and heads[i][0] == ok else [])
        yield rows, matched


def _history(rows: Iterable[dict]) -> AttrHistory:
    return sort_history(AttrValue(r["value"], Interval(r["start"], r["end"])) for r in rows)


class MultiTableLayout(Layout):
    name = "mt"

    def install(self, store: DocStore) -> None:
        for name in (V_EXIST, E_OUT_EXIST, E_IN_EXIST):
            store.ensure_collection(name, *_schema(name))

    def owns(self, collection: str) -> bool:
        return collection in (V_EXIST, E_OUT_EXIST, E_IN_EXIST) or collection.startswith(
            (V_ATTR, E_OUT_ATTR, E_IN_ATTR))

    def prepare(self, store: DocStore, collections: Iterable[str], batch: WriteBatch) -> None:
        for name in collections:
            if not store.has_collection(name):
                batch.create_collection(name, *_schema(name))

    def _attr_collections(self, store: DocStore, prefix: str) -> List[Tuple[str, str]]:
        return [(c, c[len(prefix):]) for c in store.collection_names() if c.startswith(prefix)]

    # -- encoding ------------------------------------------------------------
    def records(self, node: DiachronicNode) -> Records:
        vid = node.vid
        out: Records = {}
        for iv in node.lifespan:
            out[(V_EXIST, (vid, iv.start))] = {"vid": vid, "start": iv.start, "end": iv.end}
        for name, history in node.attributes.items():
            for a in history:
                out[(V_ATTR + name, (vid, a.interval.start))] = {
                    "vid": vid, "start": a.interval.start, "end": a.interval.end, "value": a.value}
        for direction, exist, attr in ((Direction.OUT, E_OUT_EXIST, E_OUT_ATTR),
                                       (Direction.IN, E_IN_EXIST, E_IN_ATTR)):
            for u, e in node.edges(direction).items():
                source, target = (vid, u) if direction is Direction.OUT else (u, vid)
                for iv in e.intervals:
                    out[(exist, (vid, u, iv.start))] = {
                        "source": source, "target": target, "start": iv.start, "end": iv.end}
                for name, history in e.attributes.items():
                    for a in history:
                        out[(attr + name, (vid, u, a.interval.start))] = {
                            "source": source, "target": target, "start": a.interval.start,
                            "end": a.interval.end, "value": a.value}
        return out

    # -- decoding ------------------------------------------------------------
    @staticmethod
    def _assemble(vid: Vid, v_rows: List[dict], attrs: Dict[str, List[dict]],
                  out_rows: List[dict], out_attrs: Dict[str, List[dict]],
                  in_rows: List[dict], in_attrs: Dict[str, List[dict]]) -> DiachronicNode:
        node = DiachronicNode(
            vid,
            IntervalSet(Interval(r["start"], r["end"]) for r in v_rows),
            {name: _history(rows) for name, rows in attrs.items() if rows},
        )
        for direction, rows, attr_rows, other in ((Direction.OUT, out_rows, out_attrs, "target"),
                                                  (Direction.IN, in_rows, in_attrs, "source")):
            ivs: Dict[Vid, List[Interval]] = defaultdict(list)
            for r in rows:
                ivs[r[other]].append(Interval(r["start"], r["end"]))
            per_edge: Dict[Vid, Dict[str, List[dict]]] = defaultdict(lambda: defaultdict(list))
            for name, arows in attr_rows.items():
                for r in arows:
                    per_edge[r[other]][name].append(r)
            target = node.edges(direction)
            for u in sorted(ivs, key=vid_order):
                target[u] = EdgeHistory(
                    u, direction, IntervalSet(ivs[u]),
                    {name: _history(r) for name, r in per_edge.get(u, {}).items() if r},
                )
        return node

    def decode_node(self, store: DocStore, vid: Vid) -> Optional[DiachronicNode]:
        def rows(coll: str, index: str) -> List[dict]:
            return store.find(coll, index, (vid,), batch_size=0).to_list()

        v_rows = rows(V_EXIST, "vid")
        attrs = {name: rows(c, "vid") for c, name in self._attr_collections(store, V_ATTR)}
        out_rows = rows(E_OUT_EXIST, "source")
        in_rows = rows(E_IN_EXIST, "target")
        out_attrs = {name: [r for r in rows(c, "source") if r["source"] == vid]
                     for c, name in self._attr_collections(store, E_OUT_ATTR)}
        in_attrs = {name: [r for r in rows(c, "target") if r["target"] == vid]
                    for c, name in self._attr_collections(store, E_IN_ATTR)}
        out_rows = [r for r in out_rows if r["source"] == vid]
        in_rows = [r for r in in_rows if r["target"] == vid]
        others = (any(attrs.values()) or out_rows or in_rows
                  or any(out_attrs.values()) or any(in_attrs.values()))
        if not v_rows:
            if others:
                raise CorruptLayout(f"rows for {vid!r} exist without a {V_EXIST} row")
            return None
        return self._assemble(vid, v_rows, attrs, out_rows, out_attrs, in_rows, in_attrs)

    def vertex_ids(self, store: DocStore) -> List[Vid]:
        out: List[Vid] = []
        for doc in store.index_range_scan(V_EXIST, "vid", projection=("vid",), batch_size=1024):
            if not out or out[-1] != doc["vid"]:
                out.append(doc["vid"])
        return out

    def nodes(self, store: DocStore) -> Iterator[DiachronicNode]:
        for vid in self.vertex_ids(store):
            node = self.decode_node(store, vid)
            if node is not None:
                yield node

    # -- query access paths --------------------------------------------------
    def relevance_keys(self, store: DocStore, q: Interval,
                       batch_size: Optional[int] = 64) -> Cursor:
        return store.index_range_scan(V_EXIST, "lifespan", upper=(q.end - 1,),
                                      projection=("vid", "start", "end"), batch_size=batch_size,
                                      predicate=Overlaps("start", "end", q))

    def pushdown_scan(self, store: DocStore, q: Interval, needed: Optional[Sequence[str]],
                      batch_size: Optional[int] = 64, collection: Optional[str] = None) -> Cursor:
        return store.filtered_scan(collection or V_EXIST, Overlaps("start", "end", q),
                                   projection=needed, batch_size=batch_size)

    def _ordered(self, store: DocStore, coll: str, index: str, q: Interval,
                 needed: Optional[Sequence[str]], batch_size: Optional[int]) -> Cursor:
        return store.filtered_scan(coll, Overlaps("start", "end", q), projection=needed,
                                   batch_size=batch_size, order_by=index)

    @staticmethod
    def _slices_for(vid: Vid, v_rows: List[dict], out_rows: List[dict],
                    in_rows: List[dict], q: Interval) -> Iterator[VertexSlice]:
        edges = [(r["start"], r["end"]) for r in out_rows]
        edges.extend((r["start"], r["end"]) for r in in_rows if r["source"] != vid)
        edges.sort()
        for v in v_rows:
            if not overlaps_doc(v, q):
                continue
            life = Interval(v["start"], v["end"])
            yield VertexSlice(vid, life, [e for e in edges if life.contains(e[0])])

    def slices(self, store: DocStore, q: Interval, mode: QueryMode, stats: FetchStats,
               batch_size: Optional[int] = 64) -> Iterator[VertexSlice]:
        if mode is QueryMode.RA:
            yield from self._slices_ra(store, q, stats, batch_size)
        elif mode is QueryMode.RR:
            yield from self._slices_rr(store, q, stats, batch_size)
        else:
            yield from self._slices_id(store, q, stats, batch_size)

    def _slices_ra(self, store, q, stats, batch_size):
        lifespans: Dict[Vid, List[dict]] = defaultdict(list)
        outs: Dict[Vid, List[dict]] = defaultdict(list)
        ins: Dict[Vid, List[dict]] = defaultdict(list)
        for coll in self.collections(store):
            for doc in drain(store.scan(coll, batch_size=batch_size), stats.documents,
                             stats.buffered):
                if not overlaps_doc(doc, q):
                    continue
                if coll == V_EXIST:
                    lifespans[doc["vid"]].append(doc)
                elif coll == E_OUT_EXIST:
                    outs[doc["source"]].append(doc)
                elif coll == E_IN_EXIST:
                    ins[doc["target"]].append(doc)
        for vid in sorted(lifespans, key=vid_order):
            rows = sorted(lifespans[vid], key=lambda r: r["start"])
            yield from self._slices_for(vid, rows, outs.get(vid, []), ins.get(vid, []), q)

    def _edge_rows(self, store, coll, index, vid, stats, batch_size) -> List[dict]:
        cursor = store.find(coll, index, (vid,), batch_size=batch_size)
        return list(drain(cursor, stats.documents, stats.buffered))

    def _slices_rr(self, store, q, stats, batch_size):
        # a vertex whose lifespan rows span two key batches is fetched once per batch
        for keys in self.relevant_keys(store, q, stats, batch_size):
            per_vertex: Dict[Vid, List[dict]] = defaultdict(list)
            for k in keys:
                per_vertex[k["vid"]].append(k)
            for vid, rows in per_vertex.items():
                out_rows = self._edge_rows(store, E_OUT_EXIST, "source", vid, stats, batch_size)
                in_rows = self._edge_rows(store, E_IN_EXIST, "target", vid, stats, batch_size)
                held = len(out_rows) + len(in_rows)
                stats.buffered.hold(held)
                try:
                    rows.sort(key=lambda r: r["start"])
                    yield from self._slices_for(vid, rows, out_rows, in_rows, q)
                finally:
                    stats.buffered.release(held)

    def _slices_id(self, store, q, stats, batch_size):
        def stream(coll: str, index: str, needed: Sequence[str], into) -> Iterator[Group]:
            cursor = self._ordered(store, coll, index, q, needed, batch_size)
            return _grouped(drain(cursor, into, stats.buffered), index, stats.buffered)

        vertices = stream(V_EXIST, "vid", ("vid", "start", "end"), stats.keys)
        outs = stream(E_OUT_EXIST, "source", ("source", "start", "end"), stats.documents)
        ins = stream(E_IN_EXIST, "target", ("source", "target", "start", "end"), stats.documents)
        for v_rows, (out_rows, in_rows) in _join(vertices, [outs, ins]):
            yield from self._slices_for(v_rows[0]["vid"], v_rows, out_rows, in_rows, q)

    def fragments(self, store: DocStore, q: Interval, stats: FetchStats,
                  batch_size: Optional[int] = 64) -> Iterator[DiachronicNode]:
        def stream(coll: str, index: str, field: str) -> Iterator[Group]:
            cursor = self._ordered(store, coll, index, q, None, batch_size)
            return _grouped(drain(cursor, stats.documents, stats.buffered), field, stats.buffered)

        v_attr = self._attr_collections(store, V_ATTR)
        out_attr = self._attr_collections(store, E_OUT_ATTR)
        in_attr = self._attr_collections(store, E_IN_ATTR)
        others = [stream(c, "vid", "vid") for c, _ in v_attr]
        others.append(stream(E_OUT_EXIST, "source", "source"))
        others.extend(stream(c, "source", "source") for c, _ in out_attr)
        others.append(stream(E_IN_EXIST, "target", "target"))
        others.extend(stream(c, "target", "target") for c, _ in in_attr)
        vertices = stream(V_EXIST, "vid", "vid")
        n_v, n_o = len(v_attr), len(out_attr)
        for v_rows, matched in _join(vertices, others):
            attrs = {name: matched[i] for i, (_, name) in enumerate(v_attr)}
            out_rows = matched[n_v]
            out_attrs = {name: matched[n_v + 1 + i] for i, (_, name) in enumerate(out_attr)}
            in_rows = matched[n_v + 1 + n_o]
            in_attrs = {name: matched[n_v + 2 + n_o + i] for i, (_, name) in enumerate(in_attr)}
            yield self._assemble(v_rows[0]["vid"], v_rows, attrs, out_rows, out_attrs,
                                 in_rows, in_attrs)
