"""
What every physical layout provides.

A layout is a stateless mapper between ``DiachronicNode`` values and
documents in a ``DocStore``. The mutation layer only needs ``records``: the
complete set of documents that represent one node, keyed by
``(collection, key)``. ``diff`` turns two versions of a node into the minimal
upserts and deletes, so encoding, cascades and truncations all go through the
same path.

Global queries read the graph as a stream of ``VertexSlice`` values, one per
(vertex, lifespan interval), carrying the intervals of the incident edge
records. How a layout produces that stream depends on the query mode:

* RA fetches every document of the layout and filters on the client.
* RR first reads only key fields through the lifespan index to find the
  vertices overlapping the query interval (the overlap test runs in the store
  and these fetches are counted as keys, not documents), then fetches those
  vertices' documents by key, one key batch at a time.
* ID pushes the interval-overlap test and a projection into the store and
  streams the projected matches.

Every batch and join group the client holds is counted on one shared
``BufferGauge``, so ``peak`` is the most documents held at once across all
open cursors of a query.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from chronostore.docstore.cursor import Cursor, CursorStats
from chronostore.docstore.store import DocStore, WriteBatch
from chronostore.errors import LayoutMismatch
from chronostore.layouts.model import DiachronicNode, Vid
from chronostore.temporal import Interval

RecordKey = Tuple[str, tuple]
Records = Dict[RecordKey, dict]


class QueryMode(str, Enum):
    RA = "ra"
    RR = "rr"
    ID = "id"


@dataclass
class BufferGauge:
    current: int = 0
    peak: int = 0

    def hold(self, n: int) -> None:
        self.current += n
        self.peak = max(self.peak, self.current)

    def release(self, n: int) -> None:
        self.current -= n


@dataclass
class FetchStats:
    documents: CursorStats = field(default_factory=CursorStats)
    keys: CursorStats = field(default_factory=CursorStats)
    buffered: BufferGauge = field(default_factory=BufferGauge)


@dataclass
class VertexSlice:
    vid: Vid
    lifespan: Interval
    edges: List[Tuple[int, int]]    # incident edge-record intervals, self-loops once


def drain(cursor: Cursor, into: CursorStats, gauge: BufferGauge) -> Iterator[dict]:
    """Iterate a cursor batch by batch, folding its stats into ``into`` at the end."""
    try:
        for batch in cursor.batches():
            gauge.hold(len(batch))
            try:
                yield from batch
            finally:
                gauge.release(len(batch))
    finally:
        into.absorb(cursor.stats)


def overlaps_doc(doc: dict, q: Interval) -> bool:
    return doc["start"] < q.end and q.start < doc["end"]


class Layout(abc.ABC):
    name: str = ""

    # -- schema --------------------------------------------------------------
    @abc.abstractmethod
    def install(self, store: DocStore) -> None:
        """Create the fixed collections and indexes (idempotent)."""

    @abc.abstractmethod
    def owns(self, collection: str) -> bool:
        """Whether ``collection`` belongs to this layout."""

    def collections(self, store: DocStore) -> List[str]:
        return [c for c in store.collection_names() if self.owns(c)]

    def prepare(self, store: DocStore, collections: Iterable[str], batch: WriteBatch) -> None:
        """Have ``batch`` create every collection it will touch that does not exist yet."""

    def document_count(self, store: DocStore) -> int:
        return sum(store.count(c) for c in self.collections(store))

    # -- node <-> documents ----------------------------------------------------
    @abc.abstractmethod
    def records(self, node: DiachronicNode) -> Records:
        """Every document that represents ``node`` in this layout."""

    @abc.abstractmethod
    def decode_node(self, store: DocStore, vid: Vid) -> Optional[DiachronicNode]:
        """Reassemble a node from its documents; None when nothing is stored."""

    def encode_node(self, store: DocStore, node: DiachronicNode,
                    batch: Optional[WriteBatch] = None) -> WriteBatch:
        problems = node.problems()
        if problems:
            raise LayoutMismatch(f"cannot encode {node.vid!r}: {'; '.join(problems[:3])}")
        batch = batch if batch is not None else store.batch()
        return self.diff(store, None, node, batch)

    def diff(self, store: DocStore, before: Optional[DiachronicNode],
             after: Optional[DiachronicNode], batch: WriteBatch) -> WriteBatch:
        old = self.records(before) if before is not None and before.lifespan else {}
        new = self.records(after) if after is not None and after.lifespan else {}
        self.prepare(store, {c for c, _ in new}, batch)
        for (coll, key) in old.keys() - new.keys():
            batch.delete(coll, key)
        for rk, doc in new.items():
            if old.get(rk) != doc:
                batch.upsert(rk[0], doc)
        return batch

    @abc.abstractmethod
    def nodes(self, store: DocStore) -> Iterator[DiachronicNode]:
        """Every stored node, in vid order."""

    @abc.abstractmethod
    def vertex_ids(self, store: DocStore) -> List[Vid]:
        ...

    # -- query access paths ----------------------------------------------------
    @abc.abstractmethod
    def relevance_keys(self, store: DocStore, q: Interval,
                       batch_size: Optional[int] = 64) -> Cursor:
        """Key-only cursor (vid, start, end) over exactly the lifespan rows overlapping ``q``."""

    @abc.abstractmethod
    def pushdown_scan(self, store: DocStore, q: Interval, needed: Optional[Sequence[str]],
                      batch_size: Optional[int] = 64, collection: Optional[str] = None) -> Cursor:
        """Server-side overlap filter on ``q`` plus projection onto ``needed``."""

    @abc.abstractmethod
    def slices(self, store: DocStore, q: Interval, mode: QueryMode, stats: FetchStats,
               batch_size: Optional[int] = 64) -> Iterator[VertexSlice]:
        """One slice per (vertex, lifespan interval) overlapping ``q``."""

    @abc.abstractmethod
    def fragments(self, store: DocStore, q: Interval, stats: FetchStats,
                  batch_size: Optional[int] = 64) -> Iterator[DiachronicNode]:
        """Nodes (or per-lifespan-interval parts of them) overlapping ``q``, via pushdown."""

    def relevant_keys(self, store: DocStore, q: Interval, stats: FetchStats,
                      batch_size: Optional[int] = 64) -> Iterator[List[dict]]:
        """RR phase one, one key batch at a time."""
        cursor = self.relevance_keys(store, q, batch_size)
        try:
            for batch in cursor.batches():
                stats.buffered.hold(len(batch))
                try:
                    yield batch
                finally:
                    stats.buffered.release(len(batch))
        finally:
            stats.keys.absorb(cursor.stats)
