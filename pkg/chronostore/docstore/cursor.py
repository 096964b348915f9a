"""
Streaming cursors.

A cursor owns a snapshot of document references taken when the scan was
opened, so later commits never show through. Matching and projection happen
while the cursor advances ("inside the store"); the consumer only ever holds
one batch of projected copies. ``batch_size`` of 0 or None delivers the whole
result as a single batch.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence

from chronostore.docstore.paths import logical_size, project
from chronostore.docstore.predicates import Predicate

Document = Dict[str, Any]


@dataclass
class CursorStats:
    scanned: int = 0        # documents the store looked at
    fetched: int = 0        # documents handed to the client
    peak_buffered: int = 0  # largest batch the client held at once
    bytes: int = 0          # logical size of what was handed over

    def absorb(self, other: "CursorStats") -> None:
        self.scanned += other.scanned
        self.fetched += other.fetched
        self.bytes += other.bytes
        self.peak_buffered = max(self.peak_buffered, other.peak_buffered)


class Cursor:
    def __init__(self, source: Sequence[Document],
                 predicate: Optional[Predicate] = None,
                 projection: Optional[Dict[str, Any]] = None,
                 batch_size: Optional[int] = 64,
                 measure_bytes: bool = True) -> None:
        if batch_size is not None and batch_size < 0:
            raise ValueError("batch_size must be >= 0")
        self._source = source
        self._predicate = predicate
        self._projection = projection
        self.batch_size = batch_size or 0
        self._measure = measure_bytes
        self.stats = CursorStats()
        self._consumed = False

    def batches(self) -> Iterator[List[Document]]:
        if self._consumed:
            raise RuntimeError("cursor already consumed")
        self._consumed = True
        limit = self.batch_size
        batch: List[Document] = []
        for doc in self._source:
            self.stats.scanned += 1
            if self._predicate is not None and not self._predicate.matches(doc):
                continue
            out = project(doc, self._projection)
            batch.append(out)
            if limit and len(batch) >= limit:
                yield self._hand_over(batch)
                batch = []
        if batch:
            yield self._hand_over(batch)

    def _hand_over(self, batch: List[Document]) -> List[Document]:
        self.stats.fetched += len(batch)
        self.stats.peak_buffered = max(self.stats.peak_buffered, len(batch))
        if self._measure:
            self.stats.bytes += sum(logical_size(d) for d in batch)
        return batch

    def __iter__(self) -> Iterator[Document]:
        for batch in self.batches():
            yield from batch

    def to_list(self) -> List[Document]:
        return list(self)
