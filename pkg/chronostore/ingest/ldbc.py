"""
LDBC-style CSV dump -> chronological event stream (or interval records).

Pipeline:
    CSV files  --(parse)-->     LdbcRow per row, dates already mapped to ticks
               --(events)-->    per-file sorted event lists
               --(merge)-->     one stream sorted by tick, written or applied

Each row contributes an insert at its creation tick (plus one
``InsertProperty`` per non-empty mapped attribute) and, when it carries a
deletion date, one delete at the deletion tick. Within a tick the stream is
ordered by phase: entity inserts, edge inserts, property inserts, edge
deletes, node deletes. Ties inside a phase keep input order (file, then row).

Files are parsed in parallel, one task per file; the sorted per-file lists
are combined with a k-way merge.

``ldbc_records`` is the other load path: the same rows turned straight into
interval records for ``GraphWriter.bulk_load``. Replaying the transformed
stream and bulk-loading the records yield decode-equal stores.

Vertex ids are ``"<Kind>:<id>"`` so Person 933 and Forum 933 stay distinct.
Deletion dates in year 9999 or later mean "never deleted".
"""
from __future__ import annotations

import csv
import heapq
import logging
import os
import re
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from chronostore.docstore.paths import order_key
from chronostore.errors import OverlapError, ParseError, TickOverflowError
from chronostore.graph import TemporalGraph
from chronostore.ingest.event_format import write_events
from chronostore.ingest.mappings import load_mapping, select_kinds
from chronostore.ingest.ticks import TickMapping, parse_datetime
from chronostore.layouts.model import Vid
from chronostore.mutations import EdgeRecord, EdgeRef, EventKind, MutationEvent, NodeRecord
from chronostore.report import LoadReport, Severity
from chronostore.schemas import DatasetMapping, KindMapping
from chronostore.temporal import ALIVE_END, Interval, IntervalSet

logger = logging.getLogger("chronostore")

# 2010-01-01T00:00:00Z, where LDBC SNB activity starts.
LDBC_ORIGIN_MS = 1_262_304_000_000
FOREVER_YEAR = 9999
FOREVER_MS = 253_370_764_800_000   # 9999-01-01T00:00:00Z

# Same-tick phases.
PHASE_ENTITY, PHASE_EDGE, PHASE_PROPERTY, PHASE_EDGE_DELETE, PHASE_NODE_DELETE = range(5)

SortKey = Tuple[int, int, int, int, int]


def default_ticks() -> TickMapping:
    return TickMapping("epoch-ms", LDBC_ORIGIN_MS)


@dataclass
class LdbcRow:
    kind: KindMapping
    created: int
    deleted: Optional[int]
    row: int
    vid: Optional[Vid] = None
    source: Optional[Vid] = None
    target: Optional[Vid] = None
    attributes: Dict[str, str] = field(default_factory=dict)

    @property
    def is_edge(self) -> bool:
        return self.kind.type == "edge"


def vertex_id(kind: str, raw: str) -> str:
    return f"{kind}:{raw.strip()}"


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------
def find_files(root: str, km: KindMapping) -> List[Path]:
    seen = set()
    out = []
    for pattern in km.files:
        for p in sorted(Path(root).glob(pattern)):
            if p.is_file() and p not in seen:
                seen.add(p)
                out.append(p)
    return out


def _is_forever(raw: str, ticks: TickMapping) -> bool:
    text = raw.strip()
    if re.fullmatch(r"\d+", text):
        n = int(text)
        if ticks.unit == "year":
            return n >= FOREVER_YEAR
        return ticks.unit == "epoch-ms" and n >= FOREVER_MS
    if ticks.unit == "snapshot":
        return False
    return parse_datetime(text).year >= FOREVER_YEAR


def _tick(raw: str, ticks: TickMapping, column: str, lineno: int, source: str) -> int:
    try:
        return ticks.to_tick(raw)
    except (ValueError, TickOverflowError) as e:
        raise ParseError(f"{column}: {e}", line=lineno, source=source) from e


def _cell(values: Dict[str, str], column: str, lineno: int, source: str) -> str:
    raw = values.get(column)
    if raw is None or not raw.strip():
        raise ParseError(f"missing value for column {column!r}", line=lineno, source=source)
    return raw


def parse_row(km: KindMapping, values: Dict[str, str], lineno: int, ticks: TickMapping,
              source: str = "") -> LdbcRow:
    created = _tick(_cell(values, km.creation_column, lineno, source), ticks,
                    km.creation_column, lineno, source)
    deleted = None
    raw_del = values.get(km.deletion_column, "") if km.deletion_column else ""
    if raw_del and raw_del.strip():
        try:
            forever = _is_forever(raw_del, ticks)
        except ValueError as e:
            raise ParseError(f"{km.deletion_column}: {e}", line=lineno, source=source) from e
        if not forever:
            deleted = _tick(raw_del, ticks, km.deletion_column, lineno, source)
            # distinct dates may share a tick under the year unit
            if deleted < created or (deleted == created and ticks.unit != "year"):
                raise ParseError(f"creation {values[km.creation_column]!r} is not before "
                                 f"deletion {raw_del!r}", line=lineno, source=source)
    attrs = {}
    for name in km.attributes:
        v = values.get(name)
        if v is not None and v.strip():
            attrs[name] = v
    row = LdbcRow(km, created, deleted, lineno, attributes=attrs)
    if km.type == "entity":
        row.vid = vertex_id(km.kind, _cell(values, km.id_column, lineno, source))
    else:
        row.source = vertex_id(km.source_kind, _cell(values, km.source_column, lineno, source))
        row.target = vertex_id(km.target_kind, _cell(values, km.target_column, lineno, source))
    return row


def _required_columns(km: KindMapping) -> List[str]:
    if km.type == "entity":
        return [km.id_column, km.creation_column]
    return [km.source_column, km.target_column, km.creation_column]


def read_file(path: Path, km: KindMapping, mapping: DatasetMapping,
              ticks: TickMapping) -> List[LdbcRow]:
    """Rows of one CSV file. Without a header row, columns are named "0", "1", ..."""
    source = path.name
    out: List[LdbcRow] = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f, delimiter=mapping.delimiter)
        columns: Optional[List[str]] = None
        if mapping.header:
            header = next(reader, None)
            if header is None:
                return out
            columns = [c.strip() for c in header]
            missing = [c for c in _required_columns(km) if c not in columns]
            if missing:
                raise ParseError(f"columns {missing} not in header", line=1, source=source)
        for lineno, cells in enumerate(reader, 2 if mapping.header else 1):
            if not any(c.strip() for c in cells):
                continue
            names = columns if columns is not None else [str(i) for i in range(len(cells))]
            out.append(parse_row(km, dict(zip(names, cells)), lineno, ticks, source))
    return out


def _jobs(input_dir: str, kinds: Sequence[KindMapping], report: LoadReport) -> List[Tuple[Path, KindMapping]]:
    if not os.path.isdir(input_dir):
        raise FileNotFoundError(f"dump directory not found: {input_dir}")
    jobs = []
    for km in kinds:
        files = find_files(input_dir, km)
        if not files:
            report.add("no_files", Severity.INFO, "mapped kinds without input files",
                       sample=km.kind)
        jobs.extend((p, km) for p in files)
    report.bump("files", len(jobs))
    return jobs


def read_dump(input_dir: str, kinds: Optional[Sequence[str]] = None,
              mapping: Optional[DatasetMapping] = None, ticks: Optional[TickMapping] = None,
              workers: Optional[int] = None,
              report: Optional[LoadReport] = None) -> List[List[LdbcRow]]:
    """Parse every mapped file, one list of rows per file, in a stable file order."""
    mapping = mapping or load_mapping(None)
    ticks = ticks or default_ticks()
    report = report if report is not None else LoadReport()
    jobs = _jobs(input_dir, select_kinds(mapping, kinds), report)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        per_file = list(pool.map(lambda job: read_file(job[0], job[1], mapping, ticks), jobs))
    report.bump("rows", sum(len(rows) for rows in per_file))
    return per_file


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------
def row_events(row: LdbcRow, file_index: int, properties: bool = True) -> List[Tuple[SortKey, MutationEvent]]:
    out: List[Tuple[SortKey, MutationEvent]] = []
    if row.is_edge:
        owner = EdgeRef(row.source, row.target)
        out.append(((row.created, PHASE_EDGE, file_index, row.row, 0),
                    MutationEvent.insert_edge(row.created, row.source, row.target)))
    else:
        owner = row.vid
        out.append(((row.created, PHASE_ENTITY, file_index, row.row, 0),
                    MutationEvent.insert_node(row.created, row.vid)))
    if properties:
        for sub, (name, value) in enumerate(row.attributes.items(), 1):
            out.append(((row.created, PHASE_PROPERTY, file_index, row.row, sub),
                        MutationEvent.insert_property(row.created, owner, name, value)))
    if row.deleted is not None:
        if row.is_edge:
            out.append(((row.deleted, PHASE_EDGE_DELETE, file_index, row.row, 0),
                        MutationEvent.delete_edge(row.deleted, row.source, row.target)))
        else:
            out.append(((row.deleted, PHASE_NODE_DELETE, file_index, row.row, 0),
                        MutationEvent.delete_node(row.deleted, row.vid)))
    return out


def merge_events(per_file: Sequence[Sequence[LdbcRow]], properties: bool = True,
                 report: Optional[LoadReport] = None) -> Iterator[MutationEvent]:
    """One globally sorted stream from the parsed files."""
    runs = []
    for i, rows in enumerate(per_file):
        keyed = [kv for row in rows for kv in row_events(row, i, properties)]
        keyed.sort(key=lambda kv: kv[0])
        runs.append(keyed)
    for _, event in heapq.merge(*runs, key=lambda kv: kv[0]):
        if report is not None:
            if event.kind is EventKind.INSERT_PROPERTY:
                report.bump("property_events")
            elif event.kind.is_insert:
                report.bump("insert_events")
            else:
                report.bump("delete_events")
        yield event


def ldbc_events(input_dir: str, kinds: Optional[Sequence[str]] = None,
                mapping: Optional[DatasetMapping] = None, ticks: Optional[TickMapping] = None,
                properties: bool = True, workers: Optional[int] = None,
                report: Optional[LoadReport] = None) -> Iterator[MutationEvent]:
    per_file = read_dump(input_dir, kinds, mapping, ticks, workers, report)
    return merge_events(per_file, properties, report)


def transform_ldbc_dump(input_dir: str, out_path: str, kinds: Optional[Sequence[str]] = None,
                        mapping: Optional[DatasetMapping] = None,
                        ticks: Optional[TickMapping] = None, properties: bool = True,
                        workers: Optional[int] = None) -> LoadReport:
    """Write the chronological event stream of a dump to ``out_path``."""
    ticks = ticks or default_ticks()
    report = LoadReport()
    events = ldbc_events(input_dir, kinds, mapping, ticks, properties, workers, report)
    report.bump("events", write_events(out_path, events, ticks))
    logger.info(f"Transformed {report.counters['rows']} row(s) from {input_dir} "
                f"into {report.counters['events']} event(s)")
    return report


# ---------------------------------------------------------------------------
# Interval records (bulk path)
# ---------------------------------------------------------------------------
def _end(row: LdbcRow) -> int:
    return row.deleted if row.deleted is not None else ALIVE_END


def ldbc_records(per_file: Sequence[Sequence[LdbcRow]], properties: bool = True,
                 report: Optional[LoadReport] = None) -> Tuple[List[NodeRecord], List[EdgeRecord]]:
    """
    Interval records equivalent to replaying the event stream: a vertex lives
    ``[created, deleted)``, an edge ``[created, min(its deletion, both
    endpoints' end))``. Edges outside their endpoints' lifespans are dropped.
    """
    report = report if report is not None else LoadReport()
    rows = [r for rows in per_file for r in rows]
    life: Dict[Vid, List[Interval]] = defaultdict(list)
    vattrs: Dict[Vid, Dict[str, list]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        if r.is_edge or r.created >= _end(r):
            continue
        iv = Interval(r.created, _end(r))
        life[r.vid].append(iv)
        if properties:
            for name, value in r.attributes.items():
                vattrs[r.vid][name].append((value, iv))

    lifespans: Dict[Vid, IntervalSet] = {}
    nodes: List[NodeRecord] = []
    for vid in sorted(life, key=order_key):
        try:
            lifespans[vid] = IntervalSet(life[vid])
        except OverlapError:
            report.add("vertex_overlap", Severity.SKIPPED, "vertex rows with overlapping lifespans",
                       sample=str(vid))
            continue
        nodes.append(NodeRecord(vid, list(lifespans[vid]), dict(vattrs.get(vid, {}))))

    eivs: Dict[Tuple[Vid, Vid], List[Interval]] = defaultdict(list)
    eattrs: Dict[Tuple[Vid, Vid], Dict[str, list]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        if not r.is_edge:
            continue
        src, dst = lifespans.get(r.source), lifespans.get(r.target)
        hs = src.containing(r.created) if src is not None else None
        ht = dst.containing(r.created) if dst is not None else None
        if hs is None or ht is None:
            report.add("edge_endpoint_not_alive", Severity.SKIPPED,
                       "edges created while an endpoint is not alive",
                       sample=f"{r.kind.kind} line {r.row}: {r.source} -> {r.target}")
            continue
        end = min(_end(r), hs.end, ht.end)
        if r.created >= end:
            continue
        iv = Interval(r.created, end)
        eivs[(r.source, r.target)].append(iv)
        if properties:
            for name, value in r.attributes.items():
                eattrs[(r.source, r.target)][name].append((value, iv))

    edges: List[EdgeRecord] = []
    for pair in sorted(eivs, key=lambda p: (order_key(p[0]), order_key(p[1]))):
        try:
            ivs = IntervalSet(eivs[pair])
        except OverlapError:
            report.add("edge_overlap", Severity.SKIPPED, "edge rows with overlapping intervals",
                       sample=f"{pair[0]} -> {pair[1]}")
            continue
        edges.append(EdgeRecord(pair[0], pair[1], list(ivs), dict(eattrs.get(pair, {}))))
    return nodes, edges


def load_ldbc_dump(graph: TemporalGraph, input_dir: str, kinds: Optional[Sequence[str]] = None,
                   mapping: Optional[DatasetMapping] = None, ticks: Optional[TickMapping] = None,
                   properties: bool = True, bulk: bool = False, skip_errors: bool = False,
                   workers: Optional[int] = None) -> LoadReport:
    """Load a dump straight into ``graph``, by interval bulk load or by event replay."""
    ticks = ticks or default_ticks()
    report = LoadReport()
    per_file = read_dump(input_dir, kinds, mapping, ticks, workers, report)
    if bulk:
        nodes, edges = ldbc_records(per_file, properties, report)
        graph.writer().bulk_load(nodes, edges, report)
    else:
        graph.writer().apply_stream(merge_events(per_file, properties, report),
                                    skip_errors=skip_errors, report=report)
    graph.set_meta("ticks", ticks.fields())
    return report
