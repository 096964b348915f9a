"""
Static centred interval tree over half-open integer intervals ``[start, end)``.

Built once from a list of ``(start, end, data)`` records and never edited in
place: ``LifespanIndex`` rebuilds it when its overflow list grows. Each node
keeps the intervals that contain its centre twice, sorted by start and by end
(descending), so a stabbing query only walks the part of each list that
matches. The centre is the median start of the records it was built from,
which keeps the tree balanced even when most intervals run to ``ALIVE_END``.

>>> t = IntervalTree.build([(10, 25, "a"), (15, 27, "b")])
>>> sorted(d for _, _, d in t.stab(24))
['a', 'b']
>>> [d for _, _, d in t.stab(25)]
['b']
>>> t.stab(27)
[]
"""
from __future__ import annotations

from typing import Any, Iterator, List, Optional, Sequence, Tuple

Record = Tuple[int, int, Any]


class IntervalTree:
    __slots__ = ("center", "by_start", "by_end", "left", "right", "size")

    def __init__(self, center: int, mid: List[Record],
                 left: Optional["IntervalTree"], right: Optional["IntervalTree"]) -> None:
        self.center = center
        self.by_start = sorted(mid, key=lambda r: r[0])
        self.by_end = sorted(mid, key=lambda r: r[1], reverse=True)
        self.left = left
        self.right = right
        self.size = len(mid) + (left.size if left else 0) + (right.size if right else 0)

    @classmethod
    def build(cls, records: Sequence[Record]) -> Optional["IntervalTree"]:
        """Tree over ``records``; None for an empty input. Empty intervals are ignored."""
        items = [r for r in records if r[1] > r[0]]
        if not items:
            return None
        starts = sorted(r[0] for r in items)
        center = starts[len(starts) // 2]
        left, mid, right = [], [], []
        for r in items:
            if r[1] <= center:
                left.append(r)
            elif r[0] > center:
                right.append(r)
            else:
                mid.append(r)
        return cls(center, mid, cls.build(left), cls.build(right))

    def stab(self, x: int) -> List[Record]:
        """All records with ``start <= x < end``."""
        out: List[Record] = []
        node: Optional[IntervalTree] = self
        while node is not None:
            if x < node.center:
                for r in node.by_start:
                    if r[0] > x:
                        break
                    out.append(r)
                node = node.left
            else:
                for r in node.by_end:
                    if r[1] <= x:
                        break
                    out.append(r)
                node = node.right
        return out

    def overlap(self, start: int, end: int) -> List[Record]:
        """All records intersecting ``[start, end)``."""
        out: List[Record] = []
        self._overlap(start, end, out)
        return out

    def _overlap(self, a: int, b: int, out: List[Record]) -> None:
        if b <= self.center:
            for r in self.by_start:
                if r[0] >= b:
                    break
                out.append(r)
            if self.left is not None:
                self.left._overlap(a, b, out)
        elif a > self.center:
            for r in self.by_end:
                if r[1] <= a:
                    break
                out.append(r)
            if self.right is not None:
                self.right._overlap(a, b, out)
        else:
            out.extend(self.by_start)
            if self.left is not None:
                self.left._overlap(a, b, out)
            if self.right is not None:
                self.right._overlap(a, b, out)

    def __len__(self) -> int:
        return self.size

    def __iter__(self) -> Iterator[Record]:
        if self.left is not None:
            yield from self.left
        yield from self.by_start
        if self.right is not None:
            yield from self.right
