"""
``TemporalGraph``: a document store, the layouts installed in it, and the
vertex lifespan index.

A store may carry the ST layout, the MT layout or both side by side; which
ones is recorded in the ``_meta`` collection together with build metadata, so
a checkpoint reopens with the same layouts. Every mutation writes all
installed layouts in one batch, so they never disagree. Decoding for the
write path uses the first installed layout.

The lifespan index is not persisted; it is rebuilt from the lifespan rows
when a graph is opened.
"""
from __future__ import annotations

import logging
import os
from typing import Any, Dict, List, Optional, Sequence

from chronostore.docstore.checkpoint import load_checkpoint, persist_checkpoint
from chronostore.docstore.paths import logical_size
from chronostore.docstore.store import DocStore, FaultInjector
from chronostore.layouts import Layout, get_layout
from chronostore.layouts.model import DiachronicNode, Vid
from chronostore.temporal import ALIVE_END, Interval, IntervalSet, LifespanIndex

logger = logging.getLogger("chronostore")

META = "_meta"
DEFAULT_LAYOUTS = ("st", "mt")


class TemporalGraph:
    def __init__(self, store: Optional[DocStore] = None,
                 layouts: Sequence[str] = DEFAULT_LAYOUTS,
                 path: Optional[str] = None) -> None:
        self.store = store if store is not None else DocStore()
        self.path = path
        self.store.ensure_collection(META, ("key",))
        installed = self.get_meta("layouts")
        if installed is None:
            installed = [get_layout(n).name for n in layouts]
            if not installed:
                raise ValueError("a graph needs at least one layout")
            self.set_meta("layouts", installed)
        self.layouts: Dict[str, Layout] = {}
        for name in installed:
            layout = get_layout(name)
            layout.install(self.store)
            self.layouts[layout.name] = layout
        self.lifespans = LifespanIndex()
        self.rebuild_lifespans()

    # -- lifecycle -----------------------------------------------------------
    @classmethod
    def open(cls, path: str, layouts: Sequence[str] = DEFAULT_LAYOUTS,
             create: bool = True, fault_injector: Optional[FaultInjector] = None) -> "TemporalGraph":
        """Load the checkpoint at ``path``, or start an empty graph there."""
        if os.path.exists(path):
            store = load_checkpoint(path, fault_injector)
            graph = cls(store, layouts, path)
            logger.info(f"Opened graph {path} with layouts {list(graph.layouts)}")
            return graph
        if not create:
            raise FileNotFoundError(path)
        return cls(DocStore(fault_injector), layouts, path)

    def persist(self, path: Optional[str] = None) -> int:
        path = path or self.path
        if path is None:
            raise ValueError("no checkpoint path given")
        self.path = path
        return persist_checkpoint(self.store, path)

    def rebuild_lifespans(self) -> None:
        pieces: Dict[Vid, List[Interval]] = {}
        for doc in self.primary.relevance_keys(self.store, Interval(0, ALIVE_END), batch_size=4096):
            pieces.setdefault(doc["vid"], []).append(Interval(doc["start"], doc["end"]))
        self.lifespans = LifespanIndex({vid: IntervalSet(ivs) for vid, ivs in pieces.items()})

    # -- metadata ------------------------------------------------------------
    def get_meta(self, key: str) -> Any:
        doc = self.store.get_by_key(META, key)
        return doc["value"] if doc is not None else None

    def set_meta(self, key: str, value: Any) -> None:
        self.store.commit_batch(self.store.batch().upsert(META, {"key": key, "value": value}))

    # -- access --------------------------------------------------------------
    @property
    def primary(self) -> Layout:
        return next(iter(self.layouts.values()))

    def layout(self, name: Optional[str] = None) -> Layout:
        if name is None:
            return self.primary
        try:
            return self.layouts[name.lower()]
        except KeyError:
            raise ValueError(
                f"layout {name!r} is not installed (installed: {list(self.layouts)})"
            ) from None

    def node(self, vid: Vid, layout: Optional[str] = None) -> Optional[DiachronicNode]:
        return self.layout(layout).decode_node(self.store, vid)

    def vertex_count(self) -> int:
        return len(self.lifespans)

    def writer(self):
        from chronostore.mutations import GraphWriter
        return GraphWriter(self)

    # -- space ---------------------------------------------------------------
    def space_report(self) -> dict:
        """Documents and logical bytes per collection and per layout."""
        collections = {}
        for name in self.store.collection_names():
            if name == META:
                continue
            size = sum(logical_size(d) for d in self.store.scan(name, batch_size=0))
            collections[name] = {"documents": self.store.count(name), "bytes": size}
        layouts = {}
        for lname, layout in self.layouts.items():
            owned = [c for c in collections if layout.owns(c)]
            layouts[lname] = {
                "collections": len(owned),
                "documents": sum(collections[c]["documents"] for c in owned),
                "bytes": sum(collections[c]["bytes"] for c in owned),
            }
        return {"collections": collections, "layouts": layouts}
