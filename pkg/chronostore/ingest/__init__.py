"""Dataset loaders: snapshot edge lists, event-stream files and LDBC-style CSV dumps."""
from chronostore.ingest.event_format import load_event_stream, parse, serialize, write_events
from chronostore.ingest.ldbc import ldbc_records, load_ldbc_dump, read_dump, transform_ldbc_dump
from chronostore.ingest.snapshots import load_snapshot_dataset
from chronostore.ingest.ticks import TickMapping, tick_mapping

__all__ = [
    "TickMapping", "tick_mapping", "parse", "serialize", "write_events", "load_event_stream",
    "load_snapshot_dataset", "transform_ldbc_dump", "load_ldbc_dump", "read_dump", "ldbc_records",
]
