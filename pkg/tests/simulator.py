"""
Naive full-replay oracle.

Keeps no intervals at all: events are applied in order to a plain
"current graph" and the graph is copied after every tick. The state at
instant ``t`` is the copy taken after the last tick <= t. Every temporal
query can then be answered by looking at instants one by one.
"""
from __future__ import annotations

import bisect
import copy
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Set, Tuple

from chronostore.mutations import EdgeRef, EventKind, MutationEvent


@dataclass
class State:
    vertices: Set[Any] = field(default_factory=set)
    edges: Set[Tuple[Any, Any]] = field(default_factory=set)
    vertex_attributes: Dict[Any, Dict[str, Any]] = field(default_factory=dict)
    edge_attributes: Dict[Tuple[Any, Any], Dict[str, Any]] = field(default_factory=dict)

    def apply(self, ev: MutationEvent) -> None:
        k = ev.kind
        if k is EventKind.INSERT_NODE:
            self.vertices.add(ev.target)
        elif k is EventKind.DELETE_NODE:
            v = ev.target
            self.vertices.discard(v)
            self.vertex_attributes.pop(v, None)
            for e in [e for e in self.edges if v in e]:
                self.edges.discard(e)
                self.edge_attributes.pop(e, None)
        elif k is EventKind.INSERT_EDGE:
            self.edges.add(tuple(ev.target))
        elif k is EventKind.DELETE_EDGE:
            e = tuple(ev.target)
            self.edges.discard(e)
            self.edge_attributes.pop(e, None)
        else:
            if isinstance(ev.target, EdgeRef):
                table, key = self.edge_attributes, tuple(ev.target)
            else:
                table, key = self.vertex_attributes, ev.target
            if k is EventKind.INSERT_PROPERTY:
                table.setdefault(key, {})[ev.name] = ev.value
            else:
                attrs = table.get(key, {})
                attrs.pop(ev.name, None)
                if not attrs:
                    table.pop(key, None)

    def neighbors(self, v) -> Set[Any]:
        return {b for a, b in self.edges if a == v} | {a for a, b in self.edges if b == v}

    def degree(self, v) -> int:
        return sum(1 for a, b in self.edges if a == v) + sum(1 for a, b in self.edges if b == v and a != v)

    def histogram(self) -> Dict[int, int]:
        return dict(Counter(self.degree(v) for v in self.vertices))


class Replay:
    def __init__(self, events: Iterable[MutationEvent]) -> None:
        self.ticks: List[int] = []
        self.states: List[State] = []
        current = State()
        pending = None
        for ev in events:
            if pending is not None and ev.t != pending:
                self._keep(pending, current)
            current.apply(ev)
            pending = ev.t
        if pending is not None:
            self._keep(pending, current)

    def _keep(self, t: int, state: State) -> None:
        self.ticks.append(t)
        self.states.append(copy.deepcopy(state))

    @property
    def last_tick(self) -> int:
        return self.ticks[-1] if self.ticks else 0

    def at(self, t: int) -> State:
        i = bisect.bisect_right(self.ticks, t) - 1
        return self.states[i] if i >= 0 else State()

    def instants(self, start: int, end: int) -> range:
        """Instants of ``[start, end)`` worth looking at: after the last tick nothing changes."""
        return range(start, max(start + 1, min(end, self.last_tick + 1)))

    def one_hop(self, v, start: int, end: int) -> Set[Any]:
        out: Set[Any] = set()
        for t in self.instants(start, end):
            out |= self.at(t).neighbors(v)
        return out

    def degree_counts(self, start: int, end: int, granularity: int) -> List[Dict[int, int]]:
        return [self.at(b).histogram() for b in range(start, end, granularity)]
