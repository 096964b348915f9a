"""
Local and global queries over a ``TemporalGraph``.

Local queries (vertex history, one-hop neighbours) decode the one vertex they
need by key. ``snapshot_at`` reconstructs the static graph at one instant
through the layout's pushdown path.

Global queries (degree distribution, average degree) run in one of three
modes, RA, RR or ID, over either layout, and return identical results in all
six combinations; only the access path and therefore the metrics differ. They
consume the layout's stream of vertex slices and fold it incrementally.

Degrees are evaluated at each bucket's start instant ``b`` in
``q.start, q.start + g, ...`` below ``q.end``: ``degree(v, b)`` is the number
of incident edge records alive at ``b`` (out plus in, a self-loop once). For
one slice, the degree is piecewise constant between edge endpoints, so the
fold walks the endpoints once and adds each constant piece to the range of
buckets it covers through per-degree difference arrays. The cost is in the
number of edge endpoints, not in the number of buckets.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

from chronostore.graph import TemporalGraph
from chronostore.layouts.base import FetchStats, QueryMode, VertexSlice
from chronostore.layouts.model import DiachronicNode, Vid, vid_order
from chronostore.temporal import ALIVE_END, Interval

GLOBAL_QUERIES = ("degree", "avg_degree")
LOCAL_QUERIES = ("one_hop", "history")
QUERIES = GLOBAL_QUERIES + LOCAL_QUERIES + ("snapshot",)

__all__ = [
    "DegreeHistogram", "QueryMetrics", "QueryMode", "QueryPlan", "Snapshot",
    "average_degree", "degree_distribution", "execute", "execute_global", "one_hop",
    "result_payload", "snapshot_at", "vertex_history",
]


@dataclass
class QueryMetrics:
    wall_time: float = 0.0
    documents_fetched: int = 0
    keys_fetched: int = 0
    peak_buffered: int = 0
    peak_batch: int = 0
    bytes: int = 0

    @classmethod
    def from_stats(cls, stats: FetchStats, wall_time: float) -> "QueryMetrics":
        return cls(
            wall_time=wall_time,
            documents_fetched=stats.documents.fetched,
            keys_fetched=stats.keys.fetched,
            peak_buffered=max(stats.buffered.peak, stats.documents.peak_buffered,
                              stats.keys.peak_buffered),
            peak_batch=max(stats.documents.peak_buffered, stats.keys.peak_buffered),
            bytes=stats.documents.bytes + stats.keys.bytes,
        )

    def to_dict(self) -> dict:
        return {
            "wall_time": self.wall_time,
            "documents_fetched": self.documents_fetched,
            "keys_fetched": self.keys_fetched,
            "peak_buffered": self.peak_buffered,
            "peak_batch": self.peak_batch,
            "bytes": self.bytes,
        }


@dataclass(frozen=True)
class DegreeHistogram:
    bucket: int
    counts: Dict[int, int]

    @property
    def vertices(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        return {"bucket": self.bucket, "counts": {str(d): self.counts[d] for d in sorted(self.counts)}}


@dataclass
class Snapshot:
    at: int
    vertices: Set[Vid] = field(default_factory=set)
    edges: Set[Tuple[Vid, Vid]] = field(default_factory=set)
    vertex_attributes: Dict[Vid, Dict[str, Any]] = field(default_factory=dict)
    edge_attributes: Dict[Tuple[Vid, Vid], Dict[str, Any]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        edges = sorted(self.edges, key=lambda e: (vid_order(e[0]), vid_order(e[1])))
        return {
            "at": self.at,
            "vertices": sorted(self.vertices, key=vid_order),
            "edges": [list(e) for e in edges],
            "vertex_attributes": [
                {"vid": v, "attributes": self.vertex_attributes[v]}
                for v in sorted(self.vertex_attributes, key=vid_order)
            ],
            "edge_attributes": [
                {"source": e[0], "target": e[1], "attributes": self.edge_attributes[e]}
                for e in sorted(self.edge_attributes, key=lambda e: (vid_order(e[0]), vid_order(e[1])))
            ],
        }


# -- local queries ----------------------------------------------------------

def vertex_history(graph: TemporalGraph, vid: Vid, q: Interval,
                   layout: Optional[str] = None) -> Optional[DiachronicNode]:
    node = graph.node(vid, layout)
    return node.restrict(q) if node is not None else None


def one_hop(graph: TemporalGraph, vid: Vid, q: Interval, layout: Optional[str] = None) -> Set[Vid]:
    node = graph.node(vid, layout)
    if node is None:
        return set()
    out = {u for u, e in node.out_edges.items() if e.intervals.overlaps(q)}
    out.update(u for u, e in node.in_edges.items() if e.intervals.overlaps(q))
    return out


def snapshot_at(graph: TemporalGraph, t: int, layout: Optional[str] = None,
                batch_size: Optional[int] = 64,
                stats: Optional[FetchStats] = None) -> Snapshot:
    snap = Snapshot(t)
    stats = stats if stats is not None else FetchStats()
    lay = graph.layout(layout)
    with graph.store.read_transaction():
        for frag in lay.fragments(graph.store, Interval.point(t), stats, batch_size):
            if not frag.lifespan.contains(t):
                continue
            snap.vertices.add(frag.vid)
            attrs = frag.attributes_at(t)
            if attrs:
                snap.vertex_attributes[frag.vid] = attrs
            for u, e in frag.out_edges.items():
                if not e.intervals.contains(t):
                    continue
                snap.edges.add((frag.vid, u))
                eattrs = {}
                for name, history in e.attributes.items():
                    for a in history:
                        if a.interval.contains(t):
                            eattrs[name] = a.value
                if eattrs:
                    snap.edge_attributes[(frag.vid, u)] = eattrs
    return snap


# -- global queries ---------------------------------------------------------

def _check_global(q: Interval, granularity: int) -> None:
    if granularity < 1:
        raise ValueError("granularity must be >= 1")
    if q.end >= ALIVE_END:
        raise ValueError("global queries need a finite query end")


class DegreeFold:
    """Streaming per-bucket degree histogram over vertex slices."""

    def __init__(self, q: Interval, granularity: int) -> None:
        _check_global(q, granularity)
        self.q = q
        self.g = granularity
        self.buckets = -(-(q.end - q.start) // granularity)
        self._diff: Dict[int, List[int]] = {}

    def _bucket_ceil(self, x: int) -> int:
        return -(-(x - self.q.start) // self.g)

    def _emit(self, x: int, y: int, degree: int) -> None:
        lo, hi = self._bucket_ceil(x), self._bucket_ceil(y)
        if lo >= hi:
            return
        arr = self._diff.get(degree)
        if arr is None:
            arr = self._diff[degree] = [0] * (self.buckets + 1)
        arr[lo] += 1
        arr[hi] -= 1

    def add(self, s: VertexSlice) -> None:
        life = s.lifespan.intersect(self.q)
        if life is None:
            return
        a, c = life.start, life.end
        if self._bucket_ceil(a) >= self._bucket_ceil(c):
            return
        deltas: Dict[int, int] = {}
        for start, end in s.edges:
            lo, hi = max(start, a), min(end, c)
            if lo < hi:
                deltas[lo] = deltas.get(lo, 0) + 1
                deltas[hi] = deltas.get(hi, 0) - 1
        pos, degree = a, 0
        for t in sorted(deltas):
            if t > pos:
                self._emit(pos, t, degree)
                pos = t
            degree += deltas[t]
        if pos < c:
            self._emit(pos, c, degree)

    def histograms(self) -> List[DegreeHistogram]:
        running = {d: 0 for d in self._diff}
        out = []
        for k in range(self.buckets):
            counts = {}
            for d in sorted(self._diff):
                running[d] += self._diff[d][k]
                if running[d]:
                    counts[d] = running[d]
            out.append(DegreeHistogram(self.q.start + k * self.g, counts))
        return out


def _fold(graph: TemporalGraph, q: Interval, granularity: int, mode: QueryMode,
          layout: Optional[str], batch_size: Optional[int],
          stats: FetchStats) -> List[DegreeHistogram]:
    fold = DegreeFold(q, granularity)
    lay = graph.layout(layout)
    with graph.store.read_transaction():
        for s in lay.slices(graph.store, q, QueryMode(mode), stats, batch_size):
            fold.add(s)
    return fold.histograms()


def degree_distribution(graph: TemporalGraph, q: Interval, granularity: int,
                        mode: QueryMode = QueryMode.ID, layout: Optional[str] = None,
                        batch_size: Optional[int] = 64,
                        stats: Optional[FetchStats] = None) -> List[DegreeHistogram]:
    return _fold(graph, q, granularity, mode, layout, batch_size,
                 stats if stats is not None else FetchStats())


def mean_degrees(histograms: Iterable[DegreeHistogram]) -> List[Tuple[int, Fraction]]:
    out = []
    for h in histograms:
        n = h.vertices
        total = sum(d * c for d, c in h.counts.items())
        out.append((h.bucket, Fraction(total, n) if n else Fraction(0)))
    return out


def average_degree(graph: TemporalGraph, q: Interval, granularity: int,
                   mode: QueryMode = QueryMode.ID, layout: Optional[str] = None,
                   batch_size: Optional[int] = 64,
                   stats: Optional[FetchStats] = None) -> List[Tuple[int, Fraction]]:
    return mean_degrees(degree_distribution(graph, q, granularity, mode, layout, batch_size, stats))


# -- plans ------------------------------------------------------------------

@dataclass(frozen=True)
class QueryPlan:
    """A query bound to a layout and a mode. Local queries ignore the mode."""
    query: str
    interval: Interval
    layout: Optional[str] = None
    mode: QueryMode = QueryMode.ID
    granularity: int = 1
    batch_size: Optional[int] = 64
    vid: Optional[Vid] = None

    def __post_init__(self) -> None:
        if self.query not in QUERIES:
            raise ValueError(f"unknown query {self.query!r}; choose from {list(QUERIES)}")
        if self.query in LOCAL_QUERIES and self.vid is None:
            raise ValueError(f"{self.query} needs a vertex id")

    @property
    def mode_label(self) -> str:
        return "direct" if self.query in LOCAL_QUERIES else QueryMode(self.mode).value


def execute(graph: TemporalGraph, plan: QueryPlan) -> Tuple[Any, QueryMetrics]:
    """Run ``plan`` and time it with a monotonic clock. Returns (result, metrics)."""
    stats = FetchStats()
    started = time.perf_counter()
    if plan.query == "degree":
        result: Any = degree_distribution(graph, plan.interval, plan.granularity, plan.mode,
                                          plan.layout, plan.batch_size, stats)
    elif plan.query == "avg_degree":
        result = average_degree(graph, plan.interval, plan.granularity, plan.mode,
                                plan.layout, plan.batch_size, stats)
    elif plan.query == "one_hop":
        result = one_hop(graph, plan.vid, plan.interval, plan.layout)
    elif plan.query == "history":
        result = vertex_history(graph, plan.vid, plan.interval, plan.layout)
    else:
        result = snapshot_at(graph, plan.interval.start, plan.layout, plan.batch_size, stats)
    elapsed = time.perf_counter() - started
    return result, QueryMetrics.from_stats(stats, elapsed)


def execute_global(graph: TemporalGraph, plan: QueryPlan) -> Tuple[Any, QueryMetrics]:
    if plan.query not in GLOBAL_QUERIES:
        raise ValueError(f"{plan.query} is not a global query")
    return execute(graph, plan)


def result_payload(query: str, result: Any) -> Any:
    """JSON-ready form of a query result; equal results give equal payloads."""
    if query == "degree":
        return [h.to_dict() for h in result]
    if query == "avg_degree":
        return [{"bucket": b, "mean": float(m), "exact": f"{m.numerator}/{m.denominator}"}
                for b, m in result]
    if query == "one_hop":
        return sorted(result, key=vid_order)
    if query == "history":
        return result.to_dict() if result is not None else None
    return result.to_dict()
