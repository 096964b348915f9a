"""
ST: the single-table layout.

One collection, ``nodes``, with one document per (vertex, lifespan interval),
keyed by ``(vid, start, end)``. The document carries everything that happens
inside that interval: the attribute history and the incoming and outgoing
edge histories as embedded sub-documents::

    {"vid": 7, "start": 0, "end": ALIVE_END,
     "attributes": [{"name": "color", "value": "red", "start": 3, "end": 9}],
     "out_edges": [{"neighbor": 8, "intervals": [{"start": 4, "end": 6}],
                    "attributes": [...]}],
     "in_edges": [...]}

Indexes: ``vid`` for keyed access to one vertex, ``lifespan`` on
``(start, end)`` for stabbing and range queries, and ``key`` on the complete
key. Ending a lifespan interval changes the key, so truncation is a delete
plus an upsert in the same batch.
"""
from __future__ import annotations

from collections import defaultdict
from typing import Dict, Iterator, List, Optional, Sequence

from chronostore.docstore.cursor import Cursor
from chronostore.docstore.predicates import Overlaps
from chronostore.docstore.store import DocStore, IndexDef
from chronostore.layouts.base import (FetchStats, Layout, QueryMode, Records, VertexSlice,
                                      drain, overlaps_doc)
from chronostore.layouts.model import (AttrHistory, AttrValue, DiachronicNode, Direction,
                                       EdgeHistory, Vid, sort_history, vid_order)
from chronostore.temporal import Interval, IntervalSet

NODES = "nodes"

NODE_FIELDS = (
    "vid", "start", "end",
    "attributes.name", "attributes.value", "attributes.start", "attributes.end",
    "out_edges.neighbor", "out_edges.intervals.start", "out_edges.intervals.end",
    "out_edges.attributes.name", "out_edges.attributes.value",
    "out_edges.attributes.start", "out_edges.attributes.end",
    "in_edges.neighbor", "in_edges.intervals.start", "in_edges.intervals.end",
    "in_edges.attributes.name", "in_edges.attributes.value",
    "in_edges.attributes.start", "in_edges.attributes.end",
)

NODE_INDEXES = (
    IndexDef("vid", ("vid",)),
    IndexDef("lifespan", ("start", "end")),
    IndexDef("key", ("vid", "start", "end")),
)

# What a degree computation needs from a node document.
DEGREE_FIELDS = (
    "vid", "start", "end",
    "out_edges.neighbor", "out_edges.intervals",
    "in_edges.neighbor", "in_edges.intervals",
)


def _attr_docs(attributes: Dict[str, AttrHistory], within: Interval) -> List[dict]:
    out = []
    for name in sorted(attributes):
        for a in attributes[name]:
            if within.covers(a.interval):
                out.append({"name": name, "value": a.value,
                            "start": a.interval.start, "end": a.interval.end})
    return out


def _edge_docs(edges: Dict[Vid, EdgeHistory], within: Interval) -> List[dict]:
    out = []
    for u in sorted(edges, key=vid_order):
        e = edges[u]
        ivs = [iv for iv in e.intervals if within.covers(iv)]
        if not ivs:
            continue
        out.append({
            "neighbor": u,
            "intervals": [{"start": iv.start, "end": iv.end} for iv in ivs],
            "attributes": _attr_docs(e.attributes, within),
        })
    return out


def _read_attrs(docs: List[dict], into: Dict[str, AttrHistory]) -> None:
    for a in docs:
        into.setdefault(a["name"], []).append(
            AttrValue(a["value"], Interval(a["start"], a["end"])))


class SingleTableLayout(Layout):
    name = "st"

    def install(self, store: DocStore) -> None:
        store.ensure_collection(NODES, ("vid", "start", "end"), NODE_INDEXES, NODE_FIELDS)

    def owns(self, collection: str) -> bool:
        return collection == NODES

    def records(self, node: DiachronicNode) -> Records:
        out: Records = {}
        for iv in node.lifespan:
            doc = {
                "vid": node.vid, "start": iv.start, "end": iv.end,
                "attributes": _attr_docs(node.attributes, iv),
                "out_edges": _edge_docs(node.out_edges, iv),
                "in_edges": _edge_docs(node.in_edges, iv),
            }
            out[(NODES, (node.vid, iv.start, iv.end))] = doc
        return out

    # -- decoding ------------------------------------------------------------
    @staticmethod
    def _assemble(vid: Vid, docs: List[dict]) -> DiachronicNode:
        lifespan = []
        attrs: Dict[str, AttrHistory] = {}
        edges = {Direction.OUT: defaultdict(list), Direction.IN: defaultdict(list)}
        edge_attrs = {Direction.OUT: defaultdict(dict), Direction.IN: defaultdict(dict)}
        for doc in docs:
            lifespan.append(Interval(doc["start"], doc["end"]))
            _read_attrs(doc.get("attributes", []), attrs)
            for direction, field_name in ((Direction.OUT, "out_edges"), (Direction.IN, "in_edges")):
                for e in doc.get(field_name, []):
                    u = e["neighbor"]
                    edges[direction][u].extend(
                        Interval(iv["start"], iv["end"]) for iv in e.get("intervals", []))
                    _read_attrs(e.get("attributes", []), edge_attrs[direction][u])
        node = DiachronicNode(vid, IntervalSet(lifespan),
                              {k: sort_history(h) for k, h in attrs.items()})
        for direction in (Direction.OUT, Direction.IN):
            target = node.edges(direction)
            for u in sorted(edges[direction], key=vid_order):
                target[u] = EdgeHistory(
                    u, direction, IntervalSet(edges[direction][u]),
                    {k: sort_history(h) for k, h in edge_attrs[direction][u].items()},
                )
        return node

    def decode_node(self, store: DocStore, vid: Vid) -> Optional[DiachronicNode]:
        docs = store.find(NODES, "vid", (vid,), batch_size=0).to_list()
        if not docs:
            return None
        return self._assemble(vid, docs)

    def nodes(self, store: DocStore) -> Iterator[DiachronicNode]:
        group: List[dict] = []
        for doc in store.index_range_scan(NODES, "key", batch_size=256):
            if group and group[0]["vid"] != doc["vid"]:
                yield self._assemble(group[0]["vid"], group)
                group = []
            group.append(doc)
        if group:
            yield self._assemble(group[0]["vid"], group)

    def vertex_ids(self, store: DocStore) -> List[Vid]:
        out: List[Vid] = []
        for doc in store.index_range_scan(NODES, "vid", projection=("vid",), batch_size=1024):
            if not out or out[-1] != doc["vid"]:
                out.append(doc["vid"])
        return out

    # -- query access paths --------------------------------------------------
    def relevance_keys(self, store: DocStore, q: Interval,
                       batch_size: Optional[int] = 64) -> Cursor:
        return store.index_range_scan(NODES, "lifespan", upper=(q.end - 1,),
                                      projection=("vid", "start", "end"), batch_size=batch_size,
                                      predicate=Overlaps("start", "end", q))

    def pushdown_scan(self, store: DocStore, q: Interval, needed: Optional[Sequence[str]],
                      batch_size: Optional[int] = 64, collection: Optional[str] = None) -> Cursor:
        return store.filtered_scan(collection or NODES, Overlaps("start", "end", q),
                                   projection=needed, batch_size=batch_size)

    @staticmethod
    def _slice(doc: dict) -> VertexSlice:
        vid = doc["vid"]
        edges = [(iv["start"], iv["end"])
                 for e in doc.get("out_edges", []) for iv in e.get("intervals", [])]
        edges.extend((iv["start"], iv["end"])
                     for e in doc.get("in_edges", []) if e["neighbor"] != vid
                     for iv in e.get("intervals", []))
        return VertexSlice(vid, Interval(doc["start"], doc["end"]), edges)

    def slices(self, store: DocStore, q: Interval, mode: QueryMode, stats: FetchStats,
               batch_size: Optional[int] = 64) -> Iterator[VertexSlice]:
        if mode is QueryMode.RA:
            cursor = store.scan(NODES, batch_size=batch_size)
            for doc in drain(cursor, stats.documents, stats.buffered):
                if overlaps_doc(doc, q):
                    yield self._slice(doc)
        elif mode is QueryMode.RR:
            for keys in self.relevant_keys(store, q, stats, batch_size):
                cursor = store.get_many(NODES, [(k["vid"], k["start"], k["end"]) for k in keys],
                                        batch_size=batch_size)
                for doc in drain(cursor, stats.documents, stats.buffered):
                    yield self._slice(doc)
        else:
            cursor = self.pushdown_scan(store, q, DEGREE_FIELDS, batch_size)
            for doc in drain(cursor, stats.documents, stats.buffered):
                yield self._slice(doc)

    def fragments(self, store: DocStore, q: Interval, stats: FetchStats,
                  batch_size: Optional[int] = 64) -> Iterator[DiachronicNode]:
        cursor = self.pushdown_scan(store, q, None, batch_size)
        for doc in drain(cursor, stats.documents, stats.buffered):
            yield self._assemble(doc["vid"], [doc])
