"""
Checkpoint files: the whole store in one self-checking binary file.

Layout (all integers little-endian)::

    b"CHRN"  u16 version
    record*  where record = u32 payload length, payload, u32 CRC32(payload)

Payloads are compact UTF-8 JSON. The first record is the catalog
(``{"catalog": [...]}``), then one record per document
(``{"c": collection, "d": document}``), and finally ``{"end": n}`` with the
number of document records, so a file cut short anywhere is detected even if
it happens to end on a record boundary.

The file is written next to its destination and moved into place with
``os.replace``: a crash mid-write never damages the previous checkpoint.
Only checkpoints are durable; there is no write-ahead log.
"""
from __future__ import annotations

import json
import logging
import os
import struct
import zlib
from typing import BinaryIO, Iterator, Optional

from chronostore.docstore.store import DocStore, FaultInjector, IndexDef
from chronostore.errors import CorruptCheckpoint, StoreIOError

logger = logging.getLogger("chronostore")

MAGIC = b"CHRN"
VERSION = 1
_HEADER = struct.Struct("<4sH")
_U32 = struct.Struct("<I")

# Documents are committed in chunks of this many on load.
LOAD_CHUNK = 5000


def _write_record(f: BinaryIO, payload: dict) -> None:
    data = json.dumps(payload, separators=(",", ":"), sort_keys=True).encode("utf-8")
    f.write(_U32.pack(len(data)))
    f.write(data)
    f.write(_U32.pack(zlib.crc32(data) & 0xFFFFFFFF))


def persist_checkpoint(store: DocStore, path: str) -> int:
    """Write ``store`` to ``path``. Returns the number of bytes written."""
    tmp = path + ".tmp"
    count = 0
    try:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        with open(tmp, "wb") as f:
            f.write(_HEADER.pack(MAGIC, VERSION))
            _write_record(f, {"catalog": store.catalog()})
            for name, doc in store.iter_documents():
                _write_record(f, {"c": name, "d": doc})
                count += 1
            _write_record(f, {"end": count})
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except OSError as e:
        try:
            os.remove(tmp)
        except OSError:
            pass
        raise StoreIOError(f"cannot write checkpoint {path}: {e}") from e
    size = os.path.getsize(path)
    logger.info(f"Checkpoint written: {path} ({count} documents, {size} bytes)")
    return size


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise CorruptCheckpoint(f"truncated checkpoint while reading {what}")
    return data


def _records(f: BinaryIO) -> Iterator[dict]:
    header = f.read(_HEADER.size)
    if len(header) != _HEADER.size:
        raise CorruptCheckpoint("file too short for a checkpoint header")
    magic, version = _HEADER.unpack(header)
    if magic != MAGIC:
        raise CorruptCheckpoint(f"bad magic {magic!r}")
    if version != VERSION:
        raise CorruptCheckpoint(f"unsupported checkpoint version {version}")
    n = 0
    while True:
        raw_len = f.read(_U32.size)
        if not raw_len:
            raise CorruptCheckpoint("checkpoint ends without an end record")
        if len(raw_len) != _U32.size:
            raise CorruptCheckpoint("truncated record length")
        (length,) = _U32.unpack(raw_len)
        data = _read_exact(f, length, f"record {n}")
        (crc,) = _U32.unpack(_read_exact(f, _U32.size, f"CRC of record {n}"))
        if zlib.crc32(data) & 0xFFFFFFFF != crc:
            raise CorruptCheckpoint(f"CRC mismatch in record {n}")
        try:
            payload = json.loads(data.decode("utf-8"))
        except ValueError as e:
            raise CorruptCheckpoint(f"record {n} is not valid JSON: {e}") from e
        n += 1
        yield payload
        if "end" in payload:
            if f.read(1):
                raise CorruptCheckpoint("trailing bytes after the end record")
            return


def load_checkpoint(path: str, fault_injector: Optional[FaultInjector] = None) -> DocStore:
    """Rebuild a store from ``path``; content hash equals the one persisted."""
    store = DocStore()
    try:
        f = open(path, "rb")
    except OSError as e:
        raise StoreIOError(f"cannot read checkpoint {path}: {e}") from e
    with f:
        records = _records(f)
        first = next(records, None)
        if first is None or "catalog" not in first:
            raise CorruptCheckpoint("first record is not a catalog")
        for entry in first["catalog"]:
            store.create_collection(
                entry["name"], entry["key"],
                [IndexDef.from_dict(ix) for ix in entry["indexes"]],
                entry.get("fields"),
            )
        batch = store.batch()
        docs = 0
        for rec in records:
            if "end" in rec:
                if rec["end"] != docs:
                    raise CorruptCheckpoint(
                        f"end record expects {rec['end']} documents, found {docs}"
                    )
                break
            batch.upsert(rec["c"], rec["d"])
            docs += 1
            if len(batch) >= LOAD_CHUNK:
                store.commit_batch(batch)
                batch = store.batch()
        if len(batch):
            store.commit_batch(batch)
    store.fault_injector = fault_injector
    logger.info(f"Checkpoint loaded: {path} ({docs} documents)")
    return store
