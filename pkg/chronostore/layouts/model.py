"""
The logical model: one vertex's whole history as a diachronic node.

A ``DiachronicNode`` holds the vertex lifespan, its attribute histories and
its incident edges from both sides (out-edges it is the source of, in-edges it
is the target of). Every edge therefore appears twice in the graph, once in
each endpoint's node; keeping the two copies identical is the mutation
layer's job. Attribute histories are lists of ``AttrValue`` sorted by start,
never overlapping, one value per instant.

Layouts translate these nodes to and from documents; everything above the
layouts (mutations, queries, verification) works on this model only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Union

from chronostore.docstore.paths import order_key
from chronostore.temporal import Interval, IntervalSet

Vid = Union[int, str]


class Direction(str, Enum):
    OUT = "out"
    IN = "in"


@dataclass(frozen=True)
class AttrValue:
    value: Any
    interval: Interval

    def to_dict(self) -> dict:
        return {"value": self.value, "start": self.interval.start, "end": self.interval.end}


AttrHistory = List[AttrValue]


def vid_order(vid: Vid) -> tuple:
    return order_key(vid)


def sort_history(history: Iterable[AttrValue]) -> AttrHistory:
    return sorted(history, key=lambda a: a.interval.start)


def value_at(history: AttrHistory, t: int) -> Optional[AttrValue]:
    for a in history:
        if a.interval.contains(t):
            return a
        if a.interval.start > t:
            break
    return None


def restrict_history(history: AttrHistory, q: Interval) -> AttrHistory:
    out = []
    for a in history:
        iv = a.interval.intersect(q)
        if iv is not None:
            out.append(AttrValue(a.value, iv))
    return out


def _history_problems(where: str, history: AttrHistory, owner: IntervalSet) -> List[str]:
    problems = []
    prev: Optional[AttrValue] = None
    for a in history:
        if not owner.covers(a.interval):
            problems.append(f"{where}: {a.value!r}@{a.interval!r} outside owner {owner!r}")
        if prev is not None and prev.interval.end > a.interval.start:
            problems.append(f"{where}: {prev.interval!r} overlaps {a.interval!r}")
        prev = a
    return problems


@dataclass
class EdgeHistory:
    neighbor: Vid
    direction: Direction
    intervals: IntervalSet
    attributes: Dict[str, AttrHistory] = field(default_factory=dict)

    def restrict(self, q: Interval) -> Optional["EdgeHistory"]:
        ivs = self.intervals.intersect(q)
        if not ivs:
            return None
        attrs = {k: h for k, h in ((k, restrict_history(v, q)) for k, v in self.attributes.items()) if h}
        return EdgeHistory(self.neighbor, self.direction, ivs, attrs)

    def to_dict(self) -> dict:
        return {
            "neighbor": self.neighbor,
            "intervals": self.intervals.to_pairs(),
            "attributes": {k: [a.to_dict() for a in h] for k, h in sorted(self.attributes.items())},
        }


@dataclass
class DiachronicNode:
    vid: Vid
    lifespan: IntervalSet
    attributes: Dict[str, AttrHistory] = field(default_factory=dict)
    out_edges: Dict[Vid, EdgeHistory] = field(default_factory=dict)
    in_edges: Dict[Vid, EdgeHistory] = field(default_factory=dict)

    def edges(self, direction: Direction) -> Dict[Vid, EdgeHistory]:
        return self.out_edges if direction is Direction.OUT else self.in_edges

    def attribute_at(self, name: str, t: int) -> Any:
        a = value_at(self.attributes.get(name, []), t)
        return a.value if a is not None else None

    def attributes_at(self, t: int) -> Dict[str, Any]:
        out = {}
        for name, history in self.attributes.items():
            a = value_at(history, t)
            if a is not None:
                out[name] = a.value
        return out

    def restrict(self, q: Interval) -> Optional["DiachronicNode"]:
        """This node seen through ``q``: every interval intersected, empty parts dropped."""
        lifespan = self.lifespan.intersect(q)
        if not lifespan:
            return None
        attrs = {k: h for k, h in ((k, restrict_history(v, q)) for k, v in self.attributes.items()) if h}
        outs = {u: e for u, e in ((u, e.restrict(q)) for u, e in self.out_edges.items()) if e}
        ins = {u: e for u, e in ((u, e.restrict(q)) for u, e in self.in_edges.items()) if e}
        return DiachronicNode(self.vid, lifespan, attrs, outs, ins)

    def problems(self) -> List[str]:
        """Containment and disjointness violations; empty when the node is valid."""
        out: List[str] = []
        if not self.lifespan:
            out.append(f"{self.vid!r}: empty lifespan")
        for name, history in self.attributes.items():
            out.extend(_history_problems(f"{self.vid!r}.{name}", history, self.lifespan))
        for direction in (Direction.OUT, Direction.IN):
            for u, e in self.edges(direction).items():
                where = f"{self.vid!r}-{direction.value}-{u!r}"
                if e.neighbor != u or e.direction is not direction:
                    out.append(f"{where}: mislabelled edge history")
                if not e.intervals:
                    out.append(f"{where}: empty edge history")
                if not self.lifespan.covers_set(e.intervals):
                    out.append(f"{where}: {e.intervals!r} outside lifespan {self.lifespan!r}")
                for name, history in e.attributes.items():
                    out.extend(_history_problems(f"{where}.{name}", history, e.intervals))
        return out

    def to_dict(self) -> dict:
        return {
            "vid": self.vid,
            "lifespan": self.lifespan.to_pairs(),
            "attributes": {k: [a.to_dict() for a in h] for k, h in sorted(self.attributes.items())},
            "out_edges": [e.to_dict() for _, e in sorted(self.out_edges.items(), key=lambda kv: vid_order(kv[0]))],
            "in_edges": [e.to_dict() for _, e in sorted(self.in_edges.items(), key=lambda kv: vid_order(kv[0]))],
        }


def copy_node(node: DiachronicNode) -> DiachronicNode:
    """Copy whose dicts and lists can be edited without touching ``node``."""
    def edges(src: Dict[Vid, EdgeHistory]) -> Dict[Vid, EdgeHistory]:
        return {u: EdgeHistory(e.neighbor, e.direction, e.intervals,
                               {k: list(h) for k, h in e.attributes.items()})
                for u, e in src.items()}

    return DiachronicNode(node.vid, node.lifespan,
                          {k: list(h) for k, h in node.attributes.items()},
                          edges(node.out_edges), edges(node.in_edges))
