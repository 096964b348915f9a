"""
The query benchmark behind ``chronostore bench``.

A run sweeps the grid layout x mode x history fraction for one query kind:

1. The history span ``[h0, h1)`` of the stored graph is measured once; a
   fraction ``f`` queries the prefix ``[h0, h0 + ceil(f% of the span))``.
2. Before anything is timed, every (layout, mode) cell of every fraction runs
   the query once and the JSON payloads are compared. Any difference aborts
   with ``MismatchError``; otherwise the report carries the attestation (one
   payload hash per fraction).
3. Each cell then re-opens the store from disk (cold start per cell), runs
   ``warmup`` untimed repetitions and ``reps`` timed ones. Only query
   execution is timed, with a monotonic clock.

Local queries (one_hop, history) have no mode axis; they run keyed access
against one vertex picked with the seed and report mode ``direct``.

The report is written as nested JSON and as a flat CSV with one row per cell.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import random
import statistics
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from chronostore.errors import MismatchError
from chronostore.graph import TemporalGraph
from chronostore.layouts.base import QueryMode
from chronostore.layouts.model import Vid, vid_order
from chronostore.queries import (LOCAL_QUERIES, QueryMetrics, QueryPlan, execute,
                                 result_payload)
from chronostore.schemas import BenchSpec
from chronostore.temporal import ALIVE_END, Interval

logger = logging.getLogger("chronostore")

CSV_COLUMNS = [
    "query", "layout", "mode", "fraction", "start", "end", "granularity", "batch_size",
    "reps", "warmup", "mean_s", "median_s", "p95_s", "min_s", "max_s",
    "documents_fetched", "keys_fetched", "peak_buffered", "peak_batch", "bytes", "result_sha256",
]

Opener = Callable[[], TemporalGraph]


@dataclass
class Timing:
    reps: int = 0
    mean: float = 0.0
    median: float = 0.0
    p95: float = 0.0
    min: float = 0.0
    max: float = 0.0

    @classmethod
    def from_samples(cls, samples: List[float]) -> "Timing":
        if not samples:
            return cls()
        ordered = sorted(samples)
        n = len(ordered)
        return cls(
            reps=n,
            mean=statistics.mean(samples),
            median=statistics.median(samples),
            p95=ordered[min(n - 1, math.ceil(0.95 * n) - 1)],
            min=ordered[0],
            max=ordered[-1],
        )


@dataclass
class CellResult:
    query: str
    layout: str
    mode: str
    fraction: float
    interval: Tuple[int, int]
    granularity: int
    timing: Timing
    metrics: QueryMetrics
    result_sha256: str

    def to_dict(self) -> dict:
        return {
            "query": self.query, "layout": self.layout, "mode": self.mode,
            "fraction": self.fraction, "interval": list(self.interval),
            "granularity": self.granularity, "timing": asdict(self.timing),
            "metrics": self.metrics.to_dict(), "result_sha256": self.result_sha256,
        }

    def csv_row(self, spec: BenchSpec) -> dict:
        return {
            "query": self.query, "layout": self.layout, "mode": self.mode,
            "fraction": self.fraction, "start": self.interval[0], "end": self.interval[1],
            "granularity": self.granularity, "batch_size": spec.batch_size,
            "reps": self.timing.reps, "warmup": spec.warmup,
            "mean_s": f"{self.timing.mean:.9f}", "median_s": f"{self.timing.median:.9f}",
            "p95_s": f"{self.timing.p95:.9f}", "min_s": f"{self.timing.min:.9f}",
            "max_s": f"{self.timing.max:.9f}",
            "documents_fetched": self.metrics.documents_fetched,
            "keys_fetched": self.metrics.keys_fetched,
            "peak_buffered": self.metrics.peak_buffered, "peak_batch": self.metrics.peak_batch,
            "bytes": self.metrics.bytes,
            "result_sha256": self.result_sha256,
        }


@dataclass
class BenchReport:
    spec: BenchSpec
    history: Tuple[int, int]
    vid: Optional[Vid]
    store: dict
    attestation: dict
    cells: List[CellResult] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.model_dump(),
            "history": list(self.history),
            "vid": self.vid,
            "store": self.store,
            "attestation": self.attestation,
            "cells": [c.to_dict() for c in self.cells],
        }

    def payloads(self) -> dict:
        """The timing-free part of the report: equal seeds give equal payloads."""
        return {
            "history": list(self.history), "vid": self.vid, "attestation": self.attestation,
            "cells": [_untimed(c.to_dict()) for c in self.cells],
        }


def _untimed(cell: dict) -> dict:
    out = {k: v for k, v in cell.items() if k != "timing"}
    out["metrics"] = {k: v for k, v in cell["metrics"].items() if k != "wall_time"}
    return out


# -- history and cells --------------------------------------------------------

def history_span(graph: TemporalGraph) -> Tuple[int, int]:
    """``[h0, h1)`` covering every finite instant at which the stored graph changes."""
    lo, hi = None, None
    for node in graph.primary.nodes(graph.store):
        points = []
        for iv in node.lifespan:
            points.append(iv.start)
            if iv.end < ALIVE_END:
                points.append(iv.end)
        for e in node.out_edges.values():
            for iv in e.intervals:
                points.append(iv.start)
                if iv.end < ALIVE_END:
                    points.append(iv.end)
        for h in node.attributes.values():
            for a in h:
                points.append(a.interval.start)
        lo = min(points + ([lo] if lo is not None else []))
        hi = max(points + ([hi] if hi is not None else []))
    if lo is None:
        return 0, 1
    return lo, hi + 1


def fraction_interval(history: Tuple[int, int], fraction: float) -> Interval:
    h0, h1 = history
    length = max(1, math.ceil((h1 - h0) * fraction / 100))
    return Interval(h0, h0 + length)


def default_granularity(history: Tuple[int, int]) -> int:
    return max(1, (history[1] - history[0]) // 100)


def pick_vertex(graph: TemporalGraph, seed: int) -> Optional[Vid]:
    vids = sorted(graph.lifespans.ids(), key=vid_order)
    if not vids:
        return None
    return random.Random(seed).choice(vids)


def payload_hash(query: str, result) -> str:
    data = json.dumps(result_payload(query, result), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(data.encode("utf-8")).hexdigest()


def _cells(spec: BenchSpec) -> List[Tuple[str, str]]:
    if spec.query in LOCAL_QUERIES:
        return [(layout, "direct") for layout in spec.layouts]
    return [(layout, mode) for layout in spec.layouts for mode in spec.modes]


def _plan(spec: BenchSpec, layout: str, mode: str, q: Interval, g: int,
          vid: Optional[Vid]) -> QueryPlan:
    return QueryPlan(spec.query, q, layout=layout,
                     mode=QueryMode(mode) if mode != "direct" else QueryMode.ID,
                     granularity=g, batch_size=spec.batch_size, vid=vid)


def verify_cells(graph: TemporalGraph, spec: BenchSpec, intervals: Dict[float, Interval],
                 g: int, vid: Optional[Vid]) -> dict:
    """Run every cell once per fraction and require identical payloads."""
    attestation = {}
    for fraction, q in intervals.items():
        hashes: Dict[str, str] = {}
        for layout, mode in _cells(spec):
            result, _ = execute(graph, _plan(spec, layout, mode, q, g, vid))
            hashes[f"{layout}/{mode}"] = payload_hash(spec.query, result)
        if len(set(hashes.values())) > 1:
            reference = next(iter(hashes.values()))
            bad = [cell for cell, h in hashes.items() if h != reference]
            raise MismatchError(f"{spec.query} at {fraction}% differs between cells: {bad}",
                                cells=sorted(hashes))
        attestation[str(fraction)] = next(iter(hashes.values()))
    return {"verified": True, "cells_per_fraction": len(_cells(spec)), "payload_sha256": attestation}


def run_bench(spec: BenchSpec, opener: Optional[Opener] = None) -> BenchReport:
    """Run the grid described by ``spec``. ``opener`` defaults to a cold open of ``spec.store``."""
    if opener is None:
        if not os.path.exists(spec.store):
            raise FileNotFoundError(f"store not found: {spec.store}")

        def opener() -> TemporalGraph:
            return TemporalGraph.open(spec.store, create=False)

    graph = opener()
    missing = [name for name in spec.layouts if name not in graph.layouts]
    if missing:
        raise ValueError(f"layouts {missing} are not installed in the store")
    history = history_span(graph)
    g = spec.granularity or default_granularity(history)
    intervals = {f: fraction_interval(history, f) for f in spec.fractions}
    vid = pick_vertex(graph, spec.seed) if spec.query in LOCAL_QUERIES else None
    if spec.query in LOCAL_QUERIES and vid is None:
        raise ValueError(f"{spec.query} needs at least one stored vertex")

    store_info = {
        "path": spec.store,
        "bytes_on_disk": os.path.getsize(spec.store) if os.path.exists(spec.store) else None,
        "build": graph.get_meta("build"),
        "space": graph.space_report(),
    }
    attestation = verify_cells(graph, spec, intervals, g, vid) if spec.verify else {"verified": False}
    del graph

    report = BenchReport(spec, history, vid, store_info, attestation)
    for fraction, q in intervals.items():
        for layout, mode in _cells(spec):
            graph = opener()
            plan = _plan(spec, layout, mode, q, g, vid)
            for _ in range(spec.warmup):
                execute(graph, plan)
            samples = []
            result, metrics = None, QueryMetrics()
            peak = peak_batch = 0
            for _ in range(spec.reps):
                result, metrics = execute(graph, plan)
                samples.append(metrics.wall_time)
                peak = max(peak, metrics.peak_buffered)
                peak_batch = max(peak_batch, metrics.peak_batch)
            metrics.peak_buffered, metrics.peak_batch = peak, peak_batch
            cell = CellResult(spec.query, layout, mode, fraction, q.to_pair(), g,
                              Timing.from_samples(samples), metrics,
                              payload_hash(spec.query, result))
            report.cells.append(cell)
            logger.info(f"Bench cell {layout}/{mode} {fraction}%: median "
                        f"{cell.timing.median * 1000:.3f} ms over {spec.reps} rep(s)")
    return report


# -- output -------------------------------------------------------------------

def write_report(report: BenchReport, out: str) -> Tuple[str, str]:
    """Write ``<out>.json`` and ``<out>.csv`` atomically; returns both paths."""
    base = out[:-5] if out.endswith(".json") else out
    json_path, csv_path = base + ".json", base + ".csv"
    os.makedirs(os.path.dirname(os.path.abspath(json_path)), exist_ok=True)
    tmp = json_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
    os.replace(tmp, json_path)
    tmp = csv_path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for cell in report.cells:
            w.writerow(cell.csv_row(report.spec))
    os.replace(tmp, csv_path)
    logger.info(f"Wrote bench report to {json_path} and {csv_path}")
    return json_path, csv_path

