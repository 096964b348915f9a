"""
The process-wide open graph.

There is no graph until ``open_store`` is called (by ``chronostore serve`` or
a test). Until then ``get_graph`` raises 503 and the query routes are refused.
Modules must read the graph through ``get_graph()`` on every request, never
import it once at module load.
"""
import logging
import threading
from typing import Optional, Sequence

from chronostore.graph import DEFAULT_LAYOUTS, TemporalGraph

logger = logging.getLogger("chronostore")

_graph: Optional[TemporalGraph] = None
_lock = threading.Lock()


def is_open() -> bool:
    return _graph is not None


def open_store(path: str, layouts: Sequence[str] = DEFAULT_LAYOUTS,
               create: bool = False) -> TemporalGraph:
    """Load the checkpoint at ``path`` as the process graph, replacing any open one."""
    global _graph
    graph = TemporalGraph.open(path, layouts, create=create)
    with _lock:
        _graph = graph
    logger.info(f"Serving graph {path}: {graph.vertex_count()} vertices")
    return graph


def attach(graph: TemporalGraph) -> None:
    """Serve an already opened graph."""
    global _graph
    with _lock:
        _graph = graph


def close_store() -> None:
    global _graph
    with _lock:
        _graph = None


def get_graph() -> TemporalGraph:
    """The open graph. Raises 503 while none is open."""
    graph = _graph
    if graph is None:
        from fastapi import HTTPException
        raise HTTPException(status_code=503, detail="No store is open.")
    return graph
