"""
The embedded document store.

Named collections of JSON-shaped documents, each keyed by a tuple of scalar
fields, with ordered secondary indexes kept in ``sortedcontainers.SortedList``.
An index entry is ``(index key, doc key order, doc key)``; index keys compare
through ``paths.order_key`` so every entry is comparable with every other.

Writes only happen through ``WriteBatch``. ``commit_batch`` works in two
phases: it first stages the whole batch against an overlay (validating keys,
computing every index entry, and giving a fault injector the chance to abort
mid-way) without touching live state, then applies the staged result under
the write lock. Collections a batch creates are staged the same way and only
join the catalog on commit. A batch that fails in staging leaves nothing behind. Commits
replace document objects instead of editing them, so a cursor holding
references from before a commit keeps seeing the old state.

Concurrency: one committer at a time (a second concurrent committer gets
``ConflictError`` rather than queueing), any number of readers. Readers that
need several scans to agree use ``read_transaction()``.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import logging
import random
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import (Any, Callable, Dict, FrozenSet, Iterable, Iterator, List, Optional,
                    Sequence, Tuple)

from sortedcontainers import SortedList

from chronostore.docstore.cursor import Cursor
from chronostore.docstore.paths import (HIGH, clone, order_key, projection_tree, resolve,
                                        set_path, split)
from chronostore.docstore.predicates import TRUE, Predicate, validate, validate_paths
from chronostore.errors import (ConflictError, DuplicateCollection, InjectedFault,
                                UnknownCollection, UnknownIndex, ValidationError)

logger = logging.getLogger("chronostore")

Document = Dict[str, Any]
Key = Tuple[Any, ...]


@dataclass(frozen=True)
class IndexDef:
    name: str
    fields: Tuple[str, ...]
    multikey: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "fields": list(self.fields), "multikey": self.multikey}

    @classmethod
    def from_dict(cls, d: dict) -> "IndexDef":
        return cls(d["name"], tuple(d["fields"]), bool(d.get("multikey", False)))


class RWLock:
    """Many readers or one writer. Readers are not blocked by a waiting writer."""

    def __init__(self) -> None:
        self._cond = threading.Condition(threading.Lock())
        self._readers = 0
        self._writing = False

    @contextmanager
    def read(self) -> Iterator[None]:
        with self._cond:
            while self._writing:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if not self._readers:
                    self._cond.notify_all()

    @contextmanager
    def write(self) -> Iterator[None]:
        with self._cond:
            while self._writing or self._readers:
                self._cond.wait()
            self._writing = True
        try:
            yield
        finally:
            with self._cond:
                self._writing = False
                self._cond.notify_all()


class Collection:
    def __init__(self, name: str, key_fields: Sequence[str],
                 indexes: Sequence[IndexDef] = (),
                 fields: Optional[Iterable[str]] = None) -> None:
        if not key_fields:
            raise ValidationError(f"collection {name!r} needs at least one key field")
        names = [ix.name for ix in indexes]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate index names on {name!r}")
        self.name = name
        self.key_fields: Tuple[str, ...] = tuple(key_fields)
        self.index_defs: Dict[str, IndexDef] = {ix.name: ix for ix in indexes}
        self.fields: Optional[FrozenSet[str]] = (
            frozenset(fields) | frozenset(self.key_fields) if fields is not None else None
        )
        self._docs: Dict[Key, Document] = {}
        self._indexes: Dict[str, SortedList] = {ix: SortedList() for ix in self.index_defs}

    # -- keys and index entries ---------------------------------------------
    def key_of(self, doc: Document) -> Key:
        key = []
        for f in self.key_fields:
            if f not in doc:
                raise ValidationError(f"{self.name}: document lacks key field {f!r}")
            v = doc[f]
            if isinstance(v, (dict, list)):
                raise ValidationError(f"{self.name}: key field {f!r} must be scalar")
            key.append(v)
        return tuple(key)

    def normalize_key(self, key: Any) -> Key:
        if not isinstance(key, tuple):
            key = (key,)
        if len(key) != len(self.key_fields):
            raise ValidationError(
                f"{self.name}: key {key!r} does not match {self.key_fields}"
            )
        return key

    def entries_for(self, ix: IndexDef, doc: Document, key: Key) -> List[tuple]:
        per_field: List[List[Any]] = []
        for path in ix.fields:
            values, fanned = resolve(doc, path)
            if fanned and not ix.multikey:
                raise ValidationError(
                    f"{self.name}.{ix.name}: {path!r} is list-valued on a non-multikey index"
                )
            if not fanned and len(values) > 1:
                raise ValidationError(f"{self.name}.{ix.name}: {path!r} is ambiguous")
            per_field.append(values or [None])
        kord = order_key(key)
        out = set()
        for combo in itertools.product(*per_field):
            out.add((tuple(order_key(v) for v in combo), kord, key))
        return sorted(out)

    # -- inspection ------------------------------------------------------------
    def __len__(self) -> int:
        return len(self._docs)

    def index_entries(self, name: str) -> SortedList:
        if name not in self._indexes:
            raise UnknownIndex(f"{self.name} has no index {name!r}")
        return self._indexes[name]

    def catalog_entry(self) -> dict:
        return {
            "name": self.name,
            "key": list(self.key_fields),
            "indexes": [ix.to_dict() for ix in self.index_defs.values()],
            "fields": sorted(self.fields) if self.fields is not None else None,
        }


@dataclass
class _Op:
    kind: str             # upsert | delete | update
    collection: str
    doc: Optional[Document] = None
    key: Any = None
    changes: Dict[str, Any] = field(default_factory=dict)


class WriteBatch:
    """An ordered list of writes that commit together or not at all."""

    def __init__(self, store: Optional["DocStore"] = None) -> None:
        self.ops: List[_Op] = []
        self.creates: Dict[str, Collection] = {}
        self._store = store

    def create_collection(self, name: str, key_fields: Sequence[str],
                          indexes: Sequence[IndexDef] = (),
                          fields: Optional[Iterable[str]] = None) -> "WriteBatch":
        """Create ``name`` as part of this batch, unless it exists by commit time."""
        if name not in self.creates:
            self.creates[name] = Collection(name, key_fields, indexes, fields)
        return self

    def upsert(self, collection: str, doc: Document) -> "WriteBatch":
        self.ops.append(_Op("upsert", collection, doc=doc))
        return self

    def delete(self, collection: str, key: Any) -> "WriteBatch":
        self.ops.append(_Op("delete", collection, key=key))
        return self

    def update(self, collection: str, key: Any, changes: Dict[str, Any]) -> "WriteBatch":
        self.ops.append(_Op("update", collection, key=key, changes=dict(changes)))
        return self

    def extend(self, other: "WriteBatch") -> "WriteBatch":
        self.ops.extend(other.ops)
        for name, coll in other.creates.items():
            self.creates.setdefault(name, coll)
        return self

    def commit(self) -> int:
        if self._store is None:
            raise RuntimeError("batch is not bound to a store")
        return self._store.commit_batch(self)

    def __len__(self) -> int:
        return len(self.ops)


FaultInjector = Callable[[WriteBatch], Optional[int]]


class RandomFaultInjector:
    """Aborts roughly ``rate`` of all batches at a random operation."""

    def __init__(self, rate: float, seed: int = 0) -> None:
        self.rate = rate
        self._rng = random.Random(seed)
        self.injected = 0

    def __call__(self, batch: WriteBatch) -> Optional[int]:
        if not batch.ops or self._rng.random() >= self.rate:
            return None
        self.injected += 1
        return self._rng.randrange(len(batch.ops))


class DocStore:
    def __init__(self, fault_injector: Optional[FaultInjector] = None) -> None:
        self._collections: Dict[str, Collection] = {}
        self._writer = threading.Lock()
        self._rw = RWLock()
        self.version = 0
        self.fault_injector = fault_injector

    # -- catalog -------------------------------------------------------------
    def create_collection(self, name: str, key_fields: Sequence[str],
                          indexes: Sequence[IndexDef] = (),
                          fields: Optional[Iterable[str]] = None) -> Collection:
        coll = Collection(name, key_fields, indexes, fields)
        with self._rw.write():
            if name in self._collections:
                raise DuplicateCollection(f"collection {name!r} already exists")
            self._collections[name] = coll
        logger.debug(f"collection {name} created (key={coll.key_fields})")
        return coll

    def ensure_collection(self, name: str, key_fields: Sequence[str],
                          indexes: Sequence[IndexDef] = (),
                          fields: Optional[Iterable[str]] = None) -> Collection:
        try:
            return self.create_collection(name, key_fields, indexes, fields)
        except DuplicateCollection:
            return self._collections[name]

    def collection(self, name: str) -> Collection:
        try:
            return self._collections[name]
        except KeyError:
            raise UnknownCollection(f"no collection {name!r}") from None

    def has_collection(self, name: str) -> bool:
        return name in self._collections

    def collection_names(self) -> List[str]:
        return sorted(self._collections)

    def count(self, name: str) -> int:
        return len(self.collection(name))

    def total_documents(self) -> int:
        return sum(len(c) for c in self._collections.values())

    # -- reads ---------------------------------------------------------------
    @contextmanager
    def read_transaction(self) -> Iterator["DocStore"]:
        with self._rw.read():
            yield self

    def get_by_key(self, name: str, key: Any) -> Optional[Document]:
        coll = self.collection(name)
        doc = coll._docs.get(coll.normalize_key(key))
        return clone(doc) if doc is not None else None

    def get_many(self, name: str, keys: Iterable[Any], projection: Optional[Iterable[str]] = None,
                 batch_size: Optional[int] = 64) -> Cursor:
        """Cursor over the documents with the given keys, in the order given."""
        coll = self.collection(name)
        with self._rw.read():
            refs = [d for d in (coll._docs.get(coll.normalize_key(k)) for k in keys) if d is not None]
        return Cursor(refs, None, self._tree(projection), batch_size)

    def index_range_scan(self, name: str, index: str,
                         lower: Optional[Sequence[Any]] = None,
                         upper: Optional[Sequence[Any]] = None,
                         projection: Optional[Iterable[str]] = None,
                         batch_size: Optional[int] = 64,
                         predicate: Predicate = TRUE) -> Cursor:
        """
        Documents whose index key lies in ``[lower, upper]`` in index order.
        Bounds are inclusive prefixes of the index fields; None means open.
        A document reached through several multikey entries is yielded once.
        ``predicate`` is evaluated inside the store on every document in range.
        """
        coll = self.collection(name)
        validate(predicate, coll.fields)
        ix = coll.index_defs.get(index)
        if ix is None:
            raise UnknownIndex(f"{name} has no index {index!r}")
        lo = self._bound(ix, lower)
        hi = self._bound(ix, upper)
        with self._rw.read():
            entries = coll._indexes[index].irange(
                (lo,) if lo is not None else None,
                (hi + (HIGH,),) if hi is not None else None,
            )
            seen = set()
            refs = []
            for _, _, key in entries:
                if key in seen:
                    continue
                seen.add(key)
                refs.append(coll._docs[key])
        return Cursor(refs, None if predicate is TRUE else predicate, self._tree(projection),
                      batch_size)

    def find(self, name: str, index: str, equals: Sequence[Any],
             projection: Optional[Iterable[str]] = None,
             batch_size: Optional[int] = 64) -> Cursor:
        return self.index_range_scan(name, index, equals, equals, projection, batch_size)

    def filtered_scan(self, name: str, predicate: Predicate = TRUE,
                      projection: Optional[Iterable[str]] = None,
                      batch_size: Optional[int] = 64,
                      order_by: Optional[str] = None) -> Cursor:
        """
        Documents matching ``predicate``, evaluated inside the store, projected.
        With ``order_by`` the scan walks that index, so results come in index order.
        """
        coll = self.collection(name)
        validate(predicate, coll.fields)
        if projection is not None:
            projection = list(projection)
            validate_paths(projection, coll.fields)
        if order_by is not None and order_by not in coll.index_defs:
            raise UnknownIndex(f"{name} has no index {order_by!r}")
        with self._rw.read():
            if order_by is None:
                refs = list(coll._docs.values())
            else:
                seen = set()
                refs = []
                for _, _, key in coll._indexes[order_by]:
                    if key not in seen:
                        seen.add(key)
                        refs.append(coll._docs[key])
        return Cursor(refs, predicate, self._tree(projection), batch_size)

    def scan(self, name: str, projection: Optional[Iterable[str]] = None,
             batch_size: Optional[int] = 64) -> Cursor:
        return self.filtered_scan(name, TRUE, projection, batch_size)

    @staticmethod
    def _tree(projection: Optional[Iterable[str]]) -> Optional[Dict[str, Any]]:
        return projection_tree(projection) if projection is not None else None

    @staticmethod
    def _bound(ix: IndexDef, bound: Optional[Sequence[Any]]) -> Optional[tuple]:
        if bound is None:
            return None
        if not isinstance(bound, (tuple, list)):
            bound = (bound,)
        if len(bound) > len(ix.fields):
            raise ValidationError(f"bound {bound!r} is longer than index {ix.name} {ix.fields}")
        return tuple(order_key(v) for v in bound)

    # -- writes --------------------------------------------------------------
    def batch(self) -> WriteBatch:
        return WriteBatch(self)

    def commit_batch(self, batch: WriteBatch) -> int:
        """Apply every operation of ``batch`` or none. Returns the new store version."""
        if not self._writer.acquire(blocking=False):
            raise ConflictError("another batch is being committed")
        try:
            staged = self._stage(batch)
            with self._rw.write():
                for name, coll in batch.creates.items():
                    if name not in self._collections:
                        self._collections[name] = coll
                        logger.debug(f"collection {name} created (key={coll.key_fields})")
                for (name, key), (doc, entries) in staged.items():
                    coll = self._collections[name]
                    old = coll._docs.get(key)
                    if old is not None:
                        for ixname, ix in coll.index_defs.items():
                            for entry in coll.entries_for(ix, old, key):
                                coll._indexes[ixname].discard(entry)
                    if doc is None:
                        coll._docs.pop(key, None)
                        continue
                    coll._docs[key] = doc
                    for ixname, ents in entries.items():
                        coll._indexes[ixname].update(ents)
                self.version += 1
            logger.debug(f"batch of {len(batch)} op(s) committed as version {self.version}")
            return self.version
        finally:
            self._writer.release()

    def _stage(self, batch: WriteBatch) -> Dict[Tuple[str, Key], Tuple[Optional[Document], Dict[str, list]]]:
        pending = {n: c for n, c in batch.creates.items() if n not in self._collections}

        def target(name: str) -> Collection:
            return pending[name] if name in pending else self.collection(name)

        abort_at = self.fault_injector(batch) if self.fault_injector else None
        overlay: Dict[Tuple[str, Key], Optional[Document]] = {}
        for pos, op in enumerate(batch.ops):
            if abort_at is not None and pos == abort_at:
                raise InjectedFault(f"injected abort at operation {pos} of {len(batch)}")
            coll = target(op.collection)
            if op.kind == "upsert":
                doc = clone(op.doc)
                overlay[(coll.name, coll.key_of(doc))] = doc
            elif op.kind == "delete":
                overlay[(coll.name, coll.normalize_key(op.key))] = None
            elif op.kind == "update":
                key = coll.normalize_key(op.key)
                current = overlay[(coll.name, key)] if (coll.name, key) in overlay else coll._docs.get(key)
                if current is None:
                    raise ValidationError(f"{coll.name}: update of missing document {key!r}")
                doc = clone(current)
                for path, value in op.changes.items():
                    if split(path)[0] in coll.key_fields:
                        raise ValidationError(f"{coll.name}: key field {path!r} is immutable")
                    set_path(doc, path, clone(value))
                overlay[(coll.name, key)] = doc
            else:
                raise ValidationError(f"unknown batch operation {op.kind!r}")
        staged = {}
        for (name, key), doc in overlay.items():
            coll = target(name)
            entries = {}
            if doc is not None:
                for ixname, ix in coll.index_defs.items():
                    entries[ixname] = coll.entries_for(ix, doc, key)
            staged[(name, key)] = (doc, entries)
        return staged

    # -- integrity -----------------------------------------------------------
    def verify_indexes(self) -> List[str]:
        """Compare every index with a rebuild from the documents. Empty means consistent."""
        problems = []
        with self._rw.read():
            for coll in self._collections.values():
                for ixname, ix in coll.index_defs.items():
                    expected = SortedList()
                    for key, doc in coll._docs.items():
                        expected.update(coll.entries_for(ix, doc, key))
                    actual = coll._indexes[ixname]
                    if list(expected) != list(actual):
                        missing = len(set(expected) - set(actual))
                        extra = len(set(actual) - set(expected))
                        problems.append(
                            f"{coll.name}.{ixname}: {missing} missing and {extra} stale entries"
                        )
        return problems

    def content_hash(self) -> str:
        """sha256 over the catalog and every document in key order."""
        h = hashlib.sha256()
        with self._rw.read():
            for name in sorted(self._collections):
                coll = self._collections[name]
                h.update(json.dumps(coll.catalog_entry(), sort_keys=True).encode())
                for key in sorted(coll._docs, key=order_key):
                    h.update(json.dumps(coll._docs[key], sort_keys=True,
                                        separators=(",", ":")).encode())
        return h.hexdigest()

    def iter_documents(self) -> Iterator[Tuple[str, Document]]:
        """Every (collection, document) pair under one read lock, catalog order."""
        with self._rw.read():
            refs = [(name, self._collections[name]._docs[key])
                    for name in sorted(self._collections)
                    for key in sorted(self._collections[name]._docs, key=order_key)]
        yield from refs

    def catalog(self) -> List[dict]:
        return [self._collections[n].catalog_entry() for n in sorted(self._collections)]
