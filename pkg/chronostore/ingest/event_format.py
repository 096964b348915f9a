"""
Reader/writer for chronostore event-stream files.

UTF-8 text, one event per line, sorted by time::

    #chronostore-events v1 unit=epoch-ms origin=1262304000000
    0	InsertNode	{"vid":"Person:933"}
    0	InsertProperty	{"name":"firstName","value":"Mahinda","vid":"Person:933"}
    5	InsertEdge	{"source":"Person:933","target":"Person:1129"}
    9	DeleteEdge	{"source":"Person:933","target":"Person:1129"}

Columns are separated by a single TAB: the tick, the event kind, and the
payload as compact JSON with sorted keys, so equal events always serialise to
the same line and files diff cleanly. The header records the tick mapping
the ticks were produced with. Blank lines are ignored.
"""
from __future__ import annotations

import io
import json
import logging
import os
from typing import Iterable, Iterator, List, Optional, TextIO, Tuple

from chronostore.errors import OutOfOrderError, ParseError, UnknownKind
from chronostore.graph import TemporalGraph
from chronostore.ingest.ticks import TickMapping
from chronostore.mutations import EventKind, MutationEvent
from chronostore.report import LoadReport

logger = logging.getLogger("chronostore")

MAGIC = "#chronostore-events"
VERSION = "v1"


def header_line(mapping: TickMapping) -> str:
    fields = " ".join(f"{k}={v}" for k, v in mapping.fields().items())
    return f"{MAGIC} {VERSION} {fields}"


def parse_header(line: str, source: str = "") -> TickMapping:
    parts = line.strip().split()
    if len(parts) < 2 or parts[0] != MAGIC:
        raise ParseError("missing #chronostore-events header", line=1, source=source)
    if parts[1] != VERSION:
        raise ParseError(f"unsupported event-stream version {parts[1]!r}", line=1, source=source)
    fields = {}
    for p in parts[2:]:
        if "=" not in p:
            raise ParseError(f"bad header field {p!r}", line=1, source=source)
        k, v = p.split("=", 1)
        fields[k] = v
    try:
        return TickMapping.from_fields(fields)
    except ValueError as e:
        raise ParseError(str(e), line=1, source=source) from e


def format_event(event: MutationEvent) -> str:
    payload = json.dumps(event.payload(), separators=(",", ":"), sort_keys=True, ensure_ascii=False)
    return f"{event.t}\t{event.kind.value}\t{payload}"


def parse_line(line: str, lineno: int, source: str = "") -> MutationEvent:
    parts = line.rstrip("\n").split("\t", 2)
    if len(parts) != 3:
        raise ParseError("expected <tick>\\t<kind>\\t<payload>", line=lineno, source=source)
    raw_t, raw_kind, raw_payload = parts
    try:
        t = int(raw_t)
    except ValueError:
        raise ParseError(f"bad tick {raw_t!r}", line=lineno, source=source) from None
    try:
        kind = EventKind(raw_kind)
    except ValueError:
        raise UnknownKind(f"{source}:{lineno}: unknown event kind {raw_kind!r}") from None
    try:
        payload = json.loads(raw_payload)
        if not isinstance(payload, dict):
            raise ValueError("payload is not an object")
        return MutationEvent.from_payload(kind, t, payload, line=lineno)
    except (ValueError, KeyError) as e:
        raise ParseError(f"bad payload: {e}", line=lineno, source=source) from e


def iter_events(f: TextIO, source: str = "", check_order: bool = True) -> Tuple[TickMapping, Iterator[MutationEvent]]:
    """Read the header eagerly and return the mapping plus a lazy event iterator.
    An empty file is an empty stream."""
    first = f.readline()
    if not first.strip():
        return TickMapping(), iter(())
    mapping = parse_header(first, source)

    def events() -> Iterator[MutationEvent]:
        last: Optional[int] = None
        for lineno, line in enumerate(f, 2):
            if not line.strip():
                continue
            ev = parse_line(line, lineno, source)
            if check_order and last is not None and ev.t < last:
                raise OutOfOrderError(f"time {ev.t} after {last}", line=lineno)
            last = ev.t
            yield ev

    return mapping, events()


def parse(text: str, check_order: bool = True) -> Tuple[TickMapping, List[MutationEvent]]:
    mapping, events = iter_events(io.StringIO(text), check_order=check_order)
    return mapping, list(events)


def serialize(events: Iterable[MutationEvent], mapping: TickMapping) -> str:
    lines = [header_line(mapping)]
    lines.extend(format_event(e) for e in events)
    return "\n".join(lines) + "\n"


def write_events(path: str, events: Iterable[MutationEvent], mapping: TickMapping) -> int:
    """Write atomically; returns the number of events written."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    n = 0
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        f.write(header_line(mapping) + "\n")
        for ev in events:
            f.write(format_event(ev) + "\n")
            n += 1
    os.replace(tmp, path)
    logger.info(f"Wrote {n} event(s) to {path}")
    return n


def load_event_stream(graph: TemporalGraph, path: str, skip_errors: bool = False) -> LoadReport:
    """Replay an event-stream file into ``graph``."""
    with open(path, encoding="utf-8") as f:
        mapping, events = iter_events(f, source=os.path.basename(path))
        report = graph.writer().apply_stream(events, skip_errors=skip_errors)
    graph.set_meta("ticks", mapping.fields())
    return report
