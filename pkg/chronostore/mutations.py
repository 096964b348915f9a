"""
The streaming mutation API and bulk loading.

Six event kinds change a historical graph: inserting and deleting nodes,
edges and properties. Deleting never removes history; it ends intervals. A
node deletion cascades to the node's properties, to every incident edge on
both endpoints' records, and to those edges' properties.

Every event is compiled into exactly one ``WriteBatch`` covering all
installed layouts and every vertex it touches, so an event is applied
completely or not at all. The writer works on decoded ``DiachronicNode``
values: it loads the nodes an event touches, edits copies, and lets each
layout diff the old and new versions into upserts and deletes.

Intervals written by an insert run to the end of the owner's current
lifespan interval (normally ``ALIVE_END``). Re-inserting an edge or the same
property value exactly where the previous interval ended merges the two.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import (Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple,
                    Union)

from chronostore.errors import (AlreadyAliveError, ChronostoreError, EdgeAlreadyAlive,
                                EndpointNotAlive, InvariantViolation, NotAliveAtError,
                                OutOfOrderError, OwnerNotAlive, PropertyAlreadyAlive,
                                TickOverflowError)
from chronostore.graph import TemporalGraph
from chronostore.layouts.model import (AttrHistory, AttrValue, DiachronicNode, Direction,
                                       EdgeHistory, Vid, copy_node, sort_history)
from chronostore.report import LoadReport, Severity
from chronostore.temporal import ALIVE_END, EMPTY, Interval, IntervalSet

logger = logging.getLogger("chronostore")


class EventKind(str, Enum):
    INSERT_NODE = "InsertNode"
    INSERT_EDGE = "InsertEdge"
    INSERT_PROPERTY = "InsertProperty"
    DELETE_NODE = "DeleteNode"
    DELETE_EDGE = "DeleteEdge"
    DELETE_PROPERTY = "DeleteProperty"

    @property
    def is_insert(self) -> bool:
        return self.value.startswith("Insert")


class EdgeRef(NamedTuple):
    source: Vid
    target: Vid


Target = Union[Vid, EdgeRef]


@dataclass(frozen=True)
class MutationEvent:
    """
    One event. ``target`` is a vid for node events, an ``EdgeRef`` for edge
    events, and either for property events (the property's owner).
    """
    kind: EventKind
    t: int
    target: Target
    name: Optional[str] = None
    value: Any = None
    line: Optional[int] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.t, int) or self.t < 0:
            raise ValueError(f"event time must be a non-negative int, got {self.t!r}")
        if self.t >= ALIVE_END:
            raise TickOverflowError(f"event time {self.t} reaches the ALIVE_END sentinel")
        edge_kind = self.kind in (EventKind.INSERT_EDGE, EventKind.DELETE_EDGE)
        if edge_kind and not isinstance(self.target, EdgeRef):
            raise ValueError(f"{self.kind.value} needs an EdgeRef target")
        if self.kind in (EventKind.INSERT_NODE, EventKind.DELETE_NODE) and isinstance(self.target, EdgeRef):
            raise ValueError(f"{self.kind.value} needs a vertex target")
        if self.kind in (EventKind.INSERT_PROPERTY, EventKind.DELETE_PROPERTY) and not self.name:
            raise ValueError(f"{self.kind.value} needs a property name")

    # -- constructors --------------------------------------------------------
    @classmethod
    def insert_node(cls, t: int, vid: Vid) -> "MutationEvent":
        return cls(EventKind.INSERT_NODE, t, vid)

    @classmethod
    def delete_node(cls, t: int, vid: Vid) -> "MutationEvent":
        return cls(EventKind.DELETE_NODE, t, vid)

    @classmethod
    def insert_edge(cls, t: int, source: Vid, target: Vid) -> "MutationEvent":
        return cls(EventKind.INSERT_EDGE, t, EdgeRef(source, target))

    @classmethod
    def delete_edge(cls, t: int, source: Vid, target: Vid) -> "MutationEvent":
        return cls(EventKind.DELETE_EDGE, t, EdgeRef(source, target))

    @classmethod
    def insert_property(cls, t: int, owner: Target, name: str, value: Any) -> "MutationEvent":
        return cls(EventKind.INSERT_PROPERTY, t, owner, name, value)

    @classmethod
    def delete_property(cls, t: int, owner: Target, name: str) -> "MutationEvent":
        return cls(EventKind.DELETE_PROPERTY, t, owner, name)

    # -- payloads (event stream files, HTTP) --------------------------------
    def payload(self) -> Dict[str, Any]:
        if isinstance(self.target, EdgeRef):
            out: Dict[str, Any] = {"source": self.target.source, "target": self.target.target}
        else:
            out = {"vid": self.target}
        if self.name is not None:
            out["name"] = self.name
        if self.kind is EventKind.INSERT_PROPERTY:
            out["value"] = self.value
        return out

    @classmethod
    def from_payload(cls, kind: Union[str, EventKind], t: int, payload: Dict[str, Any],
                     line: Optional[int] = None) -> "MutationEvent":
        kind = EventKind(kind)
        if "source" in payload or "target" in payload:
            target: Target = EdgeRef(payload["source"], payload["target"])
        else:
            target = payload["vid"]
        return cls(kind, t, target, payload.get("name"), payload.get("value"), line)

    def describe(self) -> str:
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}{self.t} {self.kind.value} {self.payload()}"


# -- attribute history helpers ---------------------------------------------

def _clip_history(history: AttrHistory, end: int) -> AttrHistory:
    out = []
    for a in history:
        if a.interval.start >= end:
            continue
        out.append(a if a.interval.end <= end else AttrValue(a.value, Interval(a.interval.start, end)))
    return out


def _add_value(history: AttrHistory, new: AttrValue) -> AttrHistory:
    out = []
    for a in history:
        if a.interval.overlaps(new.interval):
            raise PropertyAlreadyAlive(f"value {a.value!r} already alive over {a.interval!r}")
        if a.interval.end == new.interval.start and a.value == new.value:
            new = AttrValue(a.value, Interval(a.interval.start, new.interval.end))
            continue
        out.append(a)
    out.append(new)
    return sort_history(out)


def _cut_attrs(attrs: Dict[str, AttrHistory], end: int) -> Dict[str, AttrHistory]:
    out = {}
    for name, history in attrs.items():
        clipped = _clip_history(history, end)
        if clipped:
            out[name] = clipped
    return out


def _cut_edge(edges: Dict[Vid, EdgeHistory], u: Vid, end: int) -> bool:
    """End the edge to ``u`` at ``end``. Returns whether anything changed."""
    e = edges.get(u)
    if e is None or e.intervals.last.end <= end:
        return False
    intervals = e.intervals.clip(end)
    if not intervals:
        del edges[u]
    else:
        edges[u] = EdgeHistory(u, e.direction, intervals, _cut_attrs(e.attributes, end))
    return True


class _Edit:
    """The nodes one event touches: originals plus editable copies."""

    def __init__(self, writer: "GraphWriter") -> None:
        self._writer = writer
        self.before: Dict[Vid, Optional[DiachronicNode]] = {}
        self.after: Dict[Vid, Optional[DiachronicNode]] = {}

    def node(self, vid: Vid) -> Optional[DiachronicNode]:
        if vid not in self.after:
            original = self._writer.load(vid)
            self.before[vid] = original
            self.after[vid] = copy_node(original) if original is not None else None
        return self.after[vid]

    def put(self, node: DiachronicNode) -> None:
        if node.vid not in self.before:
            self.before[node.vid] = self._writer.load(node.vid)
        self.after[node.vid] = node


class GraphWriter:
    """The single logical writer of a ``TemporalGraph``."""

    def __init__(self, graph: TemporalGraph) -> None:
        self.graph = graph
        self.store = graph.store

    def load(self, vid: Vid) -> Optional[DiachronicNode]:
        return self.graph.primary.decode_node(self.store, vid)

    def _commit(self, edit: _Edit) -> None:
        batch = self.store.batch()
        for layout in self.graph.layouts.values():
            for vid, after in edit.after.items():
                layout.diff(self.store, edit.before.get(vid), after, batch)
        if len(batch):
            self.store.commit_batch(batch)
        for vid, after in edit.after.items():
            self.graph.lifespans.set(vid, after.lifespan if after is not None else EMPTY)

    @staticmethod
    def _alive(node: Optional[DiachronicNode], t: int) -> Optional[Interval]:
        return node.lifespan.containing(t) if node is not None else None

    # -- vertices ------------------------------------------------------------
    def insert_node(self, vid: Vid, start: int) -> None:
        edit = _Edit(self)
        node = edit.node(vid)
        if node is None:
            node = DiachronicNode(vid, EMPTY)
            edit.put(node)
        if node.lifespan.contains(start):
            raise AlreadyAliveError(f"{vid!r} is already alive at {start}")
        if node.lifespan and node.lifespan.last.end > start:
            raise AlreadyAliveError(f"{vid!r} has history after {start}")
        node.lifespan = node.lifespan.insert(Interval.alive_from(start))
        self._commit(edit)

    def delete_node(self, vid: Vid, end: int) -> None:
        edit = _Edit(self)
        node = edit.node(vid)
        if self._alive(node, end) is None:
            raise NotAliveAtError(f"{vid!r} is not alive at {end}")
        node.lifespan = node.lifespan.truncate(end)
        node.attributes = _cut_attrs(node.attributes, end)
        for u in list(node.out_edges):
            if _cut_edge(node.out_edges, u, end):
                _cut_edge(edit.node(u).in_edges, vid, end)
        for u in list(node.in_edges):
            if _cut_edge(node.in_edges, u, end):
                _cut_edge(edit.node(u).out_edges, vid, end)
        self._commit(edit)

    # -- edges ---------------------------------------------------------------
    def insert_edge(self, source: Vid, target: Vid, start: int) -> None:
        edit = _Edit(self)
        src, dst = edit.node(source), edit.node(target)
        life_s, life_t = self._alive(src, start), self._alive(dst, start)
        if life_s is None or life_t is None:
            dead = source if life_s is None else target
            raise EndpointNotAlive(f"endpoint {dead!r} of {source!r}->{target!r} is not alive at {start}")
        existing = src.out_edges.get(target)
        intervals = existing.intervals if existing is not None else EMPTY
        if intervals.contains(start) or (intervals and intervals.last.end > start):
            raise EdgeAlreadyAlive(f"edge {source!r}->{target!r} is already alive at {start}")
        iv = Interval(start, min(life_s.end, life_t.end))
        for node, edges, other, direction in ((src, src.out_edges, target, Direction.OUT),
                                              (dst, dst.in_edges, source, Direction.IN)):
            e = edges.get(other)
            if e is None:
                edges[other] = EdgeHistory(other, direction, IntervalSet([iv]))
            else:
                edges[other] = EdgeHistory(other, direction, e.intervals.insert(iv), e.attributes)
        self._commit(edit)

    def delete_edge(self, source: Vid, target: Vid, end: int) -> None:
        edit = _Edit(self)
        src = edit.node(source)
        e = src.out_edges.get(target) if src is not None else None
        if e is None or not e.intervals.contains(end):
            raise NotAliveAtError(f"edge {source!r}->{target!r} is not alive at {end}")
        _cut_edge(src.out_edges, target, end)
        _cut_edge(edit.node(target).in_edges, source, end)
        self._commit(edit)

    # -- properties ----------------------------------------------------------
    def _owner_histories(self, edit: _Edit, owner: Target, t: int) -> Tuple[List[Tuple[Dict[str, AttrHistory], Any]], Optional[Interval]]:
        """The attribute maps to edit (one per stored copy) and the owner interval alive at t."""
        if isinstance(owner, EdgeRef):
            src = edit.node(owner.source)
            e = src.out_edges.get(owner.target) if src is not None else None
            iv = e.intervals.containing(t) if e is not None else None
            if iv is None:
                return [], None
            mirror = edit.node(owner.target).in_edges[owner.source]
            maps = [(e.attributes, e)]
            if mirror is not e:
                maps.append((mirror.attributes, mirror))
            return maps, iv
        node = edit.node(owner)
        iv = self._alive(node, t)
        return ([(node.attributes, node)] if iv is not None else []), iv

    def insert_property(self, owner: Target, name: str, value: Any, start: int) -> None:
        edit = _Edit(self)
        maps, iv = self._owner_histories(edit, owner, start)
        if iv is None:
            raise OwnerNotAlive(f"owner {owner!r} of {name!r} is not alive at {start}")
        new = AttrValue(value, Interval(start, iv.end))
        for attrs, _ in maps:
            attrs[name] = _add_value(attrs.get(name, []), new)
        self._commit(edit)

    def delete_property(self, owner: Target, name: str, end: int) -> None:
        edit = _Edit(self)
        maps, _ = self._owner_histories(edit, owner, end)
        history = maps[0][0].get(name, []) if maps else []
        if not any(a.interval.contains(end) for a in history):
            raise NotAliveAtError(f"property {name!r} of {owner!r} is not alive at {end}")
        for attrs, _ in maps:
            clipped = _clip_history(attrs.get(name, []), end)
            if clipped:
                attrs[name] = clipped
            else:
                attrs.pop(name, None)
        self._commit(edit)

    # -- streams -------------------------------------------------------------
    def apply(self, event: MutationEvent) -> None:
        k, t, target = event.kind, event.t, event.target
        if k is EventKind.INSERT_NODE:
            self.insert_node(target, t)
        elif k is EventKind.DELETE_NODE:
            self.delete_node(target, t)
        elif k is EventKind.INSERT_EDGE:
            self.insert_edge(target.source, target.target, t)
        elif k is EventKind.DELETE_EDGE:
            self.delete_edge(target.source, target.target, t)
        elif k is EventKind.INSERT_PROPERTY:
            self.insert_property(target, event.name, event.value, t)
        else:
            self.delete_property(target, event.name, t)

    def apply_stream(self, events: Iterable[MutationEvent], skip_errors: bool = False,
                     report: Optional[LoadReport] = None) -> LoadReport:
        """
        Apply events in order. Out-of-order timestamps always stop the stream;
        other failures stop it too unless ``skip_errors``, in which case the
        event is skipped and recorded in the report.
        """
        report = report if report is not None else LoadReport()
        started = time.monotonic()
        last_t: Optional[int] = None
        for n, event in enumerate(events, 1):
            if last_t is not None and event.t < last_t:
                raise OutOfOrderError(
                    f"time {event.t} after {last_t}",
                    line=event.line if event.line is not None else n,
                )
            last_t = event.t
            try:
                self.apply(event)
            except ChronostoreError as e:
                if not skip_errors:
                    raise
                code = type(e).__name__
                logger.warning(f"Skipped event ({code}): {event.describe()}")
                report.add(code, Severity.SKIPPED, f"events rejected with {code}",
                           sample=f"{event.describe()}: {e}")
                report.bump("skipped")
                continue
            report.bump(event.kind.value)
            report.bump("events")
        report.seconds += time.monotonic() - started
        logger.info(f"Applied {report.counters['events']} event(s), skipped {report.counters['skipped']}")
        return report

    # -- bulk ----------------------------------------------------------------
    def bulk_load(self, nodes: Iterable["NodeRecord"], edges: Iterable["EdgeRecord"] = (),
                  report: Optional[LoadReport] = None) -> LoadReport:
        """
        Load vertices and edges with explicit intervals, skipping per-event
        cascade checks. The assembled nodes are validated as a whole first;
        any violation raises ``InvariantViolation`` and nothing is written.
        Every record then goes into one batch, so a failed commit also leaves
        the graph untouched.
        """
        report = report if report is not None else LoadReport()
        started = time.monotonic()
        problems: List[str] = []
        built: Dict[Vid, DiachronicNode] = {}
        for rec in nodes:
            try:
                lifespan = IntervalSet(rec.intervals)
            except ValueError as e:
                problems.append(f"vertex {rec.vid!r}: {e}")
                continue
            if rec.vid in built:
                problems.append(f"vertex {rec.vid!r} listed twice")
                continue
            built[rec.vid] = DiachronicNode(
                rec.vid, lifespan,
                {k: sort_history(AttrValue(v, iv) for v, iv in h) for k, h in rec.attributes.items()},
            )
        for rec in edges:
            src, dst = built.get(rec.source), built.get(rec.target)
            if src is None or dst is None:
                problems.append(f"edge {rec.source!r}->{rec.target!r}: unknown endpoint")
                continue
            try:
                for node, side, other, direction in ((src, src.out_edges, rec.target, Direction.OUT),
                                                     (dst, dst.in_edges, rec.source, Direction.IN)):
                    e = side.get(other)
                    ivs = e.intervals if e is not None else EMPTY
                    for iv in rec.intervals:
                        ivs = ivs.insert(iv)
                    attrs = dict(e.attributes) if e is not None else {}
                    for k, h in rec.attributes.items():
                        attrs[k] = sort_history(list(attrs.get(k, [])) + [AttrValue(v, iv) for v, iv in h])
                    side[other] = EdgeHistory(other, direction, ivs, attrs)
            except ValueError as e:
                problems.append(f"edge {rec.source!r}->{rec.target!r}: {e}")
        for node in built.values():
            problems.extend(node.problems())
        stored = [vid for vid in built if vid in self.graph.lifespans]
        problems.extend(f"vertex {vid!r} is already stored" for vid in stored)
        if problems:
            raise InvariantViolation(problems)

        batch = self.store.batch()
        for node in built.values():
            for layout in self.graph.layouts.values():
                layout.diff(self.store, None, node, batch)
            report.bump("vertices")
            report.bump("lifespan_intervals", len(node.lifespan))
            report.bump("attribute_intervals", sum(len(h) for h in node.attributes.values()))
            report.bump("edges", len(node.out_edges))
            report.bump("edge_intervals", sum(len(e.intervals) for e in node.out_edges.values()))
            report.bump("edge_attribute_intervals",
                        sum(len(h) for e in node.out_edges.values() for h in e.attributes.values()))
        if len(batch):
            self.store.commit_batch(batch)
        for node in built.values():
            self.graph.lifespans.set(node.vid, node.lifespan)
        report.seconds += time.monotonic() - started
        logger.info(f"Bulk-loaded {report.counters['vertices']} vertices and {report.counters['edges']} edges")
        return report


@dataclass
class NodeRecord:
    vid: Vid
    intervals: Sequence[Interval]
    attributes: Dict[str, Sequence[Tuple[Any, Interval]]] = field(default_factory=dict)


@dataclass
class EdgeRecord:
    source: Vid
    target: Vid
    intervals: Sequence[Interval]
    attributes: Dict[str, Sequence[Tuple[Any, Interval]]] = field(default_factory=dict)


def apply_stream(graph: TemporalGraph, events: Iterable[MutationEvent],
                 skip_errors: bool = False) -> LoadReport:
    return graph.writer().apply_stream(events, skip_errors)
