"""
Read-only HTTP query service (``chronostore serve``).

Every route reads the process graph through ``database.get_graph`` and runs
one query in its own read transaction; nothing here mutates the store.
Engine errors become 400, a missing vertex 404, and no open store 503.
"""
import logging
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Query

from chronostore import __version__, database
from chronostore.errors import ChronostoreError
from chronostore.graph import TemporalGraph
from chronostore.ingest.snapshots import parse_vid
from chronostore.layouts.base import QueryMode
from chronostore.queries import (QueryPlan, execute, one_hop, result_payload, snapshot_at,
                                 vertex_history)
from chronostore.schemas import (GlobalQueryResponse, NeighborsResponse, QueryMetricsResponse,
                                 StatusResponse)
from chronostore.temporal import ALIVE_END, Interval

logger = logging.getLogger("chronostore")

app = FastAPI(
    title="chronostore",
    description="Temporal graph queries over a chronostore checkpoint",
    version=__version__,
)


def _interval(start: int, end: Optional[int]) -> Interval:
    try:
        return Interval(start, end if end is not None else ALIVE_END)
    except (TypeError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))


@app.get("/status", response_model=StatusResponse)
def status(graph: TemporalGraph = Depends(database.get_graph)):
    return StatusResponse(
        path=graph.path,
        layouts=list(graph.layouts),
        vertices=graph.vertex_count(),
        documents={name: layout.document_count(graph.store) for name, layout in graph.layouts.items()},
    )


@app.get("/vertices/{vid}/history")
def history(vid: str, start: int = 0, end: Optional[int] = None, layout: Optional[str] = None,
            graph: TemporalGraph = Depends(database.get_graph)):
    q = _interval(start, end)
    try:
        node = vertex_history(graph, parse_vid(vid), q, layout)
    except (ChronostoreError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    if node is None:
        raise HTTPException(status_code=404, detail=f"Vertex {vid} has no history in [{q.start}, {q.end})")
    return node.to_dict()


@app.get("/vertices/{vid}/neighbors", response_model=NeighborsResponse)
def neighbors(vid: str, start: int = 0, end: Optional[int] = None, layout: Optional[str] = None,
              graph: TemporalGraph = Depends(database.get_graph)):
    q = _interval(start, end)
    v = parse_vid(vid)
    try:
        found = one_hop(graph, v, q, layout)
    except (ChronostoreError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    return NeighborsResponse(vid=v, start=q.start, end=q.end,
                             neighbors=result_payload("one_hop", found))


@app.get("/snapshot")
def snapshot(at: int = Query(..., ge=0), layout: Optional[str] = None,
             batch_size: int = Query(64, ge=0),
             graph: TemporalGraph = Depends(database.get_graph)):
    try:
        snap = snapshot_at(graph, at, layout, batch_size)
    except (ChronostoreError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    return snap.to_dict()


def _global(query: str, graph: TemporalGraph, start: int, end: int, granularity: int,
            mode: str, layout: Optional[str], batch_size: int) -> GlobalQueryResponse:
    try:
        plan = QueryPlan(query, _interval(start, end), layout=layout, mode=QueryMode(mode),
                         granularity=granularity, batch_size=batch_size)
        result, metrics = execute(graph, plan)
    except (ChronostoreError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    return GlobalQueryResponse(
        query=query,
        layout=graph.layout(layout).name,
        mode=plan.mode_label,
        result=result_payload(query, result),
        metrics=QueryMetricsResponse(**metrics.to_dict()),
    )


@app.get("/degree-distribution", response_model=GlobalQueryResponse)
def degree_distribution(start: int = 0, end: int = Query(..., ge=1), granularity: int = Query(1, ge=1),
                        mode: str = "id", layout: Optional[str] = None,
                        batch_size: int = Query(64, ge=0),
                        graph: TemporalGraph = Depends(database.get_graph)):
    return _global("degree", graph, start, end, granularity, mode, layout, batch_size)


@app.get("/average-degree", response_model=GlobalQueryResponse)
def average_degree(start: int = 0, end: int = Query(..., ge=1), granularity: int = Query(1, ge=1),
                   mode: str = "id", layout: Optional[str] = None,
                   batch_size: int = Query(64, ge=0),
                   graph: TemporalGraph = Depends(database.get_graph)):
    return _global("avg_degree", graph, start, end, granularity, mode, layout, batch_size)
