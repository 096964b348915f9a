"""
Time, validity intervals and the vertex lifespan index.

Time is a 64-bit unsigned tick count. Every validity period is a half-open
interval ``[start, end)``: an entity is alive at ``start`` and dead at ``end``,
so two intervals that touch never overlap and adjacency is unambiguous. A
single instant ``t`` is the interval ``[t, t + 1)``. "Still alive" is spelled
``end == ALIVE_END``, the largest 64-bit value, which no loader may produce as
a real timestamp.

``IntervalSet`` is the lifespan of one entity: sorted, disjoint, with adjacent
pieces merged. It is an immutable value; every operation returns a new set.

``LifespanIndex`` answers "who is alive at t" and "who is alive somewhere in
q" for vertices. The workload is append-mostly, so it keeps a static interval
tree built at the last rebuild plus an overflow list of intervals that changed
since, and checks every candidate against the authoritative per-id sets.
"""
from __future__ import annotations

import bisect
import logging
import threading
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, Iterator, List, Optional, Set, Tuple

from chronostore.errors import NotAliveAtError, OverlapError
from chronostore.interval_tree import IntervalTree

logger = logging.getLogger("chronostore")

ALIVE_END = 2 ** 64 - 1
MAX_TICK = ALIVE_END - 1   # largest instant a loader may produce


@dataclass(frozen=True, order=True)
class Interval:
    start: int
    end: int

    def __post_init__(self) -> None:
        if not (isinstance(self.start, int) and isinstance(self.end, int)):
            raise TypeError(f"interval bounds must be ints, got {self.start!r}, {self.end!r}")
        if self.start < 0 or self.end > ALIVE_END:
            raise ValueError(f"interval [{self.start}, {self.end}) outside the tick range")
        if self.start >= self.end:
            raise ValueError(f"empty interval [{self.start}, {self.end})")

    @classmethod
    def point(cls, t: int) -> "Interval":
        """The single instant ``t`` as ``[t, t + 1)``."""
        return cls(t, t + 1)

    @classmethod
    def alive_from(cls, start: int) -> "Interval":
        return cls(start, ALIVE_END)

    @property
    def alive(self) -> bool:
        return self.end == ALIVE_END

    @property
    def length(self) -> int:
        return self.end - self.start

    def contains(self, t: int) -> bool:
        return self.start <= t < self.end

    def overlaps(self, other: "Interval") -> bool:
        return self.start < other.end and other.start < self.end

    def covers(self, other: "Interval") -> bool:
        return self.start <= other.start and other.end <= self.end

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo, hi = max(self.start, other.start), min(self.end, other.end)
        return Interval(lo, hi) if lo < hi else None

    def to_pair(self) -> Tuple[int, int]:
        return (self.start, self.end)

    def __repr__(self) -> str:
        end = "ALIVE" if self.alive else str(self.end)
        return f"[{self.start},{end})"


def interval_overlaps(a: Interval, b: Interval) -> bool:
    return a.overlaps(b)


class IntervalSet:
    """Sorted, disjoint, coalesced intervals. Immutable."""

    __slots__ = ("_ivs", "_starts")

    def __init__(self, intervals: Iterable[Interval] = ()) -> None:
        ivs = sorted(intervals)
        merged: List[Interval] = []
        for iv in ivs:
            if merged and merged[-1].end > iv.start:
                raise OverlapError(f"{iv!r} overlaps {merged[-1]!r}")
            if merged and merged[-1].end == iv.start:
                merged[-1] = Interval(merged[-1].start, iv.end)
            else:
                merged.append(iv)
        self._ivs: Tuple[Interval, ...] = tuple(merged)
        self._starts: Tuple[int, ...] = tuple(iv.start for iv in merged)

    @classmethod
    def union_of(cls, intervals: Iterable[Interval]) -> "IntervalSet":
        """Coalesced union; unlike the constructor, overlapping inputs are merged."""
        merged: List[Interval] = []
        for iv in sorted(intervals):
            if merged and merged[-1].end >= iv.start:
                if iv.end > merged[-1].end:
                    merged[-1] = Interval(merged[-1].start, iv.end)
            else:
                merged.append(iv)
        return cls(merged)

    # -- lookups --------------------------------------------------------------
    def _index_at(self, t: int) -> int:
        i = bisect.bisect_right(self._starts, t) - 1
        if i >= 0 and self._ivs[i].contains(t):
            return i
        return -1

    def containing(self, t: int) -> Optional[Interval]:
        i = self._index_at(t)
        return self._ivs[i] if i >= 0 else None

    def contains(self, t: int) -> bool:
        return self._index_at(t) >= 0

    def overlaps(self, q: Interval) -> bool:
        i = bisect.bisect_left(self._starts, q.end) - 1
        return i >= 0 and self._ivs[i].end > q.start

    def covers(self, iv: Interval) -> bool:
        """True when ``iv`` lies inside a single member interval."""
        i = bisect.bisect_right(self._starts, iv.start) - 1
        return i >= 0 and self._ivs[i].covers(iv)

    def covers_set(self, other: "IntervalSet") -> bool:
        return all(self.covers(iv) for iv in other)

    def intersect(self, q: Interval) -> "IntervalSet":
        out = [x for x in (iv.intersect(q) for iv in self._ivs) if x is not None]
        return IntervalSet(out)

    @property
    def covered_length(self) -> int:
        return sum(iv.length for iv in self._ivs)

    @property
    def first(self) -> Optional[Interval]:
        return self._ivs[0] if self._ivs else None

    @property
    def last(self) -> Optional[Interval]:
        return self._ivs[-1] if self._ivs else None

    @property
    def alive(self) -> bool:
        return bool(self._ivs) and self._ivs[-1].alive

    # -- edits ----------------------------------------------------------------
    def insert(self, iv: Interval) -> "IntervalSet":
        i = bisect.bisect_left(self._starts, iv.start)
        for j in (i - 1, i):
            if 0 <= j < len(self._ivs) and self._ivs[j].overlaps(iv):
                raise OverlapError(f"{iv!r} overlaps {self._ivs[j]!r}")
        return IntervalSet(self._ivs + (iv,))

    def truncate(self, end: int) -> "IntervalSet":
        """
        Drop everything at or after ``end``; the member containing ``end`` is
        cut to ``[start, end)`` (and vanishes if that is empty).

        Truncating again at the instant a set already ends at is a no-op.
        Anything else that finds no member alive at ``end`` raises
        ``NotAliveAtError``.
        """
        if self._index_at(end) < 0:
            if self._ivs and self._ivs[-1].end == end:
                return self
            raise NotAliveAtError(f"nothing alive at {end} in {self!r}")
        return self.clip(end)

    def clip(self, end: int) -> "IntervalSet":
        """Like ``truncate`` but never raises: content at or after ``end`` is dropped."""
        out = []
        for iv in self._ivs:
            if iv.start >= end:
                break
            out.append(iv if iv.end <= end else Interval(iv.start, end))
        if len(out) == len(self._ivs) and (not out or out[-1] == self._ivs[-1]):
            return self
        return IntervalSet(out)

    # -- value protocol -------------------------------------------------------
    def to_pairs(self) -> List[List[int]]:
        return [[iv.start, iv.end] for iv in self._ivs]

    def __iter__(self) -> Iterator[Interval]:
        return iter(self._ivs)

    def __len__(self) -> int:
        return len(self._ivs)

    def __bool__(self) -> bool:
        return bool(self._ivs)

    def __getitem__(self, i: int) -> Interval:
        return self._ivs[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self._ivs == other._ivs

    def __hash__(self) -> int:
        return hash(self._ivs)

    def __repr__(self) -> str:
        return "{" + ", ".join(repr(iv) for iv in self._ivs) + "}"


EMPTY = IntervalSet()


def intervalset_insert(s: IntervalSet, iv: Interval) -> IntervalSet:
    return s.insert(iv)


def intervalset_truncate(s: IntervalSet, end: int) -> IntervalSet:
    return s.truncate(end)


class LifespanIndex:
    """
    id -> IntervalSet, plus stabbing and range queries over all of them.

    One writer or many readers. Writers replace whole sets; the replaced id's
    current intervals go to the overflow list until the next rebuild, so a
    query never misses an interval and stale tree entries are filtered out by
    checking the authoritative set.
    """

    MIN_REBUILD = 1024

    def __init__(self, entries: Optional[Dict[Hashable, IntervalSet]] = None) -> None:
        self._entries: Dict[Hashable, IntervalSet] = {}
        self._tree: Optional[IntervalTree] = None
        self._overflow: List[Tuple[int, int, Hashable]] = []
        self._lock = threading.Lock()
        for k, v in (entries or {}).items():
            if v:
                self._entries[k] = v
        self.rebuild()

    # -- writes ---------------------------------------------------------------
    def set(self, key: Hashable, intervals: IntervalSet) -> None:
        with self._lock:
            if intervals:
                self._entries[key] = intervals
                self._overflow.extend((iv.start, iv.end, key) for iv in intervals)
            else:
                self._entries.pop(key, None)
            tree_size = len(self._tree) if self._tree else 0
            if len(self._overflow) > max(self.MIN_REBUILD, tree_size // 4):
                self._rebuild_locked()

    def insert(self, key: Hashable, iv: Interval) -> IntervalSet:
        new = self.get(key).insert(iv)
        self.set(key, new)
        return new

    def truncate(self, key: Hashable, end: int) -> IntervalSet:
        new = self.get(key).truncate(end)
        self.set(key, new)
        return new

    def discard(self, key: Hashable) -> None:
        self.set(key, EMPTY)

    def rebuild(self) -> None:
        with self._lock:
            self._rebuild_locked()

    def _rebuild_locked(self) -> None:
        records = [(iv.start, iv.end, k) for k, s in self._entries.items() for iv in s]
        self._tree = IntervalTree.build(records)
        self._overflow = []
        logger.debug(f"lifespan index rebuilt over {len(records)} intervals")

    # -- reads ----------------------------------------------------------------
    def get(self, key: Hashable) -> IntervalSet:
        return self._entries.get(key, EMPTY)

    def stab(self, t: int) -> Set[Hashable]:
        with self._lock:
            tree, overflow = self._tree, list(self._overflow)
        cands = {r[2] for r in tree.stab(t)} if tree else set()
        cands.update(k for s, e, k in overflow if s <= t < e)
        return {k for k in cands if self.get(k).contains(t)}

    def range(self, q: Interval) -> Set[Hashable]:
        with self._lock:
            tree, overflow = self._tree, list(self._overflow)
        cands = {r[2] for r in tree.overlap(q.start, q.end)} if tree else set()
        cands.update(k for s, e, k in overflow if s < q.end and q.start < e)
        return {k for k in cands if self.get(k).overlaps(q)}

    def ids(self) -> List[Hashable]:
        return list(self._entries)

    def items(self) -> List[Tuple[Hashable, IntervalSet]]:
        return list(self._entries.items())

    def __contains__(self, key: object) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def lifespan_stab(idx: LifespanIndex, t: int) -> Set[Hashable]:
    return idx.stab(t)


def lifespan_range(idx: LifespanIndex, q: Interval) -> Set[Hashable]:
    return idx.range(q)
