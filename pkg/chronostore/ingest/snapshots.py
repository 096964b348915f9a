"""
Snapshot-indexed edge lists.

A snapshot dataset is a sequence of static graphs numbered 0..N-1, shipped as
one line per edge run::

    src<TAB>dst<TAB>first<TAB>last

meaning the edge exists in snapshots ``first`` through ``last`` inclusive.
Snapshot ``i`` is tick ``i``, so the record becomes the interval
``[first, last + 1)``. Records of the same edge are merged.

Vertex lifespans come from an optional vertex file (``vid first last`` per
line); without one they are the coalesced union of the vertex's incident
edge intervals, or the whole range ``[0, N)`` with ``all_alive``.
With ``symmetric`` the file is read as undirected: ``u v`` and ``v u`` are the
same edge, stored once.
"""
from __future__ import annotations

import logging
import os
from collections import defaultdict
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from chronostore.docstore.paths import order_key
from chronostore.errors import ParseError
from chronostore.graph import TemporalGraph
from chronostore.layouts.model import Vid
from chronostore.mutations import EdgeRecord, NodeRecord
from chronostore.report import LoadReport
from chronostore.temporal import Interval, IntervalSet

logger = logging.getLogger("chronostore")


def parse_vid(raw: str) -> Vid:
    raw = raw.strip()
    return int(raw) if raw.lstrip("-").isdigit() else raw


def _fields(line: str) -> List[str]:
    return line.split("\t") if "\t" in line else line.split()


def _span(first: str, last: str, snapshots: int, lineno: int, source: str) -> Interval:
    try:
        i, j = int(first), int(last)
    except ValueError:
        raise ParseError(f"snapshot indexes must be integers, got {first!r} {last!r}",
                         line=lineno, source=source) from None
    if i > j:
        raise ParseError(f"first snapshot {i} after last {j}", line=lineno, source=source)
    if i < 0 or j >= snapshots:
        raise ParseError(f"snapshot range {i}..{j} outside 0..{snapshots - 1}",
                         line=lineno, source=source)
    return Interval(i, j + 1)


def parse_edges(lines: Iterable[str], snapshots: int,
                source: str = "") -> Iterator[Tuple[Vid, Vid, Interval]]:
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = _fields(text)
        if len(parts) != 4:
            raise ParseError("expected src, dst, first, last", line=lineno, source=source)
        yield parse_vid(parts[0]), parse_vid(parts[1]), _span(parts[2], parts[3], snapshots, lineno, source)


def parse_vertices(lines: Iterable[str], snapshots: int,
                   source: str = "") -> Iterator[Tuple[Vid, Interval]]:
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = _fields(text)
        if len(parts) != 3:
            raise ParseError("expected vid, first, last", line=lineno, source=source)
        yield parse_vid(parts[0]), _span(parts[1], parts[2], snapshots, lineno, source)


def build_records(edges: Iterable[Tuple[Vid, Vid, Interval]], snapshots: int,
                  vertices: Optional[Iterable[Tuple[Vid, Interval]]] = None,
                  all_alive: bool = False,
                  symmetric: bool = False) -> Tuple[List[NodeRecord], List[EdgeRecord]]:
    edge_ivs: Dict[Tuple[Vid, Vid], List[Interval]] = defaultdict(list)
    for u, v, iv in edges:
        if symmetric and order_key(v) < order_key(u):
            u, v = v, u
        edge_ivs[(u, v)].append(iv)
    merged = {k: IntervalSet.union_of(ivs) for k, ivs in edge_ivs.items()}

    life: Dict[Vid, List[Interval]] = defaultdict(list)
    if vertices is not None:
        for vid, iv in vertices:
            life[vid].append(iv)
    else:
        for (u, v), ivs in merged.items():
            life[u].extend(ivs)
            life[v].extend(ivs)
    if all_alive and vertices is None:
        everything = Interval(0, snapshots)
        life = {vid: [everything] for vid in life}

    nodes = [NodeRecord(vid, list(IntervalSet.union_of(ivs)))
             for vid, ivs in sorted(life.items(), key=lambda kv: order_key(kv[0]))]
    edge_records = [EdgeRecord(u, v, list(ivs))
                    for (u, v), ivs in sorted(merged.items(),
                                              key=lambda kv: (order_key(kv[0][0]), order_key(kv[0][1])))]
    return nodes, edge_records


def load_snapshot_dataset(graph: TemporalGraph, path: str, snapshots: int,
                          vertex_path: Optional[str] = None, all_alive: bool = False,
                          symmetric: bool = False) -> LoadReport:
    """Bulk-load an edge-list snapshot dataset; snapshot i becomes tick i."""
    if snapshots < 1:
        raise ValueError("snapshot count must be >= 1")
    with open(path, encoding="utf-8") as f:
        edges = list(parse_edges(f, snapshots, os.path.basename(path)))
    vertices = None
    if vertex_path is not None:
        with open(vertex_path, encoding="utf-8") as f:
            vertices = list(parse_vertices(f, snapshots, os.path.basename(vertex_path)))
    nodes, edge_records = build_records(edges, snapshots, vertices, all_alive, symmetric)
    report = LoadReport()
    report.bump("edge_records", len(edges))
    graph.writer().bulk_load(nodes, edge_records, report)
    graph.set_meta("ticks", {"unit": "snapshot", "origin": "0", "snapshots": str(snapshots)})
    logger.info(f"Loaded snapshot dataset {path}: {len(nodes)} vertices, {len(edge_records)} edges")
    return report
