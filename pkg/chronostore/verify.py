"""
The invariant suite behind ``chronostore verify``.

Each check records its violations under a fixed finding code:

* ``index_consistency`` - every secondary index holds exactly the entries
  its collection's documents produce.
* ``containment`` - attribute and edge intervals lie inside their owner's
  intervals, histories do not overlap, no vertex has an empty lifespan.
  After cascading deletes this is the cascade-closure property.
* ``symmetry`` - ``u``'s out-edge to ``v`` and ``v``'s in-edge from ``u``
  carry the same intervals and attributes.
* ``space_accounting`` - ST stores one document per lifespan interval; MT
  stores V + A + 2E + 2EA rows (lifespan, attribute, edge and edge-attribute
  intervals, edges on both endpoints).
* ``layout_equivalence`` - with both layouts installed, every vertex decodes
  to the same node from each.
* ``lifespan_index`` - the in-memory lifespan index agrees with the stored
  lifespans.
* ``corrupt_layout`` - a layout's documents cannot be decoded at all.

The layouts are decoded in parallel inside one read transaction; the checks
themselves only read.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional

from chronostore.errors import ChronostoreError
from chronostore.graph import TemporalGraph
from chronostore.layouts.model import DiachronicNode, Vid
from chronostore.report import LoadReport, Severity

logger = logging.getLogger("chronostore")

CHECKS = ("index_consistency", "containment", "symmetry", "space_accounting",
          "layout_equivalence", "lifespan_index")

_TITLES = {
    "index_consistency": "secondary index out of step with its collection",
    "containment": "interval outside its owner's lifespan",
    "symmetry": "out-edge and in-edge copies disagree",
    "space_accounting": "stored record count differs from the model",
    "layout_equivalence": "layouts decode to different nodes",
    "lifespan_index": "lifespan index disagrees with stored lifespans",
    "corrupt_layout": "layout documents cannot be decoded",
}


def _fail(report: LoadReport, code: str, sample: str) -> None:
    report.add(code, Severity.ERROR, _TITLES[code], sample=sample)


def expected_records(nodes: List[DiachronicNode], layout: str) -> int:
    """How many documents ``layout`` must hold for ``nodes``."""
    lifespans = sum(len(n.lifespan) for n in nodes)
    if layout == "st":
        return lifespans
    attrs = sum(len(h) for n in nodes for h in n.attributes.values())
    edges = sum(len(e.intervals) for n in nodes for e in n.out_edges.values())
    edge_attrs = sum(len(h) for n in nodes for e in n.out_edges.values() for h in e.attributes.values())
    return lifespans + attrs + 2 * edges + 2 * edge_attrs


def _decode_all(graph: TemporalGraph, name: str) -> List[DiachronicNode]:
    return list(graph.layouts[name].nodes(graph.store))


def check_symmetry(by_vid: Dict[Vid, DiachronicNode], report: LoadReport) -> None:
    for vid, node in by_vid.items():
        for u, e in node.out_edges.items():
            other = by_vid.get(u)
            mirror = other.in_edges.get(vid) if other is not None else None
            if mirror is None:
                _fail(report, "symmetry", f"{vid!r}->{u!r}: no in-edge on {u!r}")
            elif mirror.intervals != e.intervals or mirror.attributes != e.attributes:
                _fail(report, "symmetry", f"{vid!r}->{u!r}: {e.intervals!r} vs {mirror.intervals!r}")
        for u in node.in_edges:
            other = by_vid.get(u)
            if other is None or vid not in other.out_edges:
                _fail(report, "symmetry", f"{u!r}->{vid!r}: no out-edge on {u!r}")


def check_lifespans(graph: TemporalGraph, by_vid: Dict[Vid, DiachronicNode], report: LoadReport) -> None:
    indexed = dict(graph.lifespans.items())
    for vid in indexed.keys() - by_vid.keys():
        _fail(report, "lifespan_index", f"{vid!r} indexed but not stored")
    for vid, node in by_vid.items():
        if indexed.get(vid) != node.lifespan:
            _fail(report, "lifespan_index", f"{vid!r}: index {indexed.get(vid)!r} vs stored {node.lifespan!r}")
            continue
        for iv in node.lifespan:
            if vid not in graph.lifespans.stab(iv.start):
                _fail(report, "lifespan_index", f"{vid!r}: stab({iv.start}) misses it")


def verify_graph(graph: TemporalGraph, workers: Optional[int] = None) -> LoadReport:
    """Run every check; ``report.ok`` is False when any invariant is broken."""
    report = LoadReport()
    started = time.monotonic()
    with graph.store.read_transaction():
        for problem in graph.store.verify_indexes():
            _fail(report, "index_consistency", problem)

        names = list(graph.layouts)
        with ThreadPoolExecutor(max_workers=workers or len(names)) as pool:
            futures = {name: pool.submit(_decode_all, graph, name) for name in names}
        decoded: Dict[str, List[DiachronicNode]] = {}
        for name, fut in futures.items():
            try:
                decoded[name] = fut.result()
            except ChronostoreError as e:
                _fail(report, "corrupt_layout", f"{name}: {e}")

        for name, nodes in decoded.items():
            actual = graph.layouts[name].document_count(graph.store)
            expected = expected_records(nodes, name)
            if actual != expected:
                _fail(report, "space_accounting", f"{name}: {actual} documents stored, {expected} expected")

        if not decoded:
            report.seconds = time.monotonic() - started
            return report
        primary = decoded[names[0]] if names[0] in decoded else next(iter(decoded.values()))
        by_vid = {n.vid: n for n in primary}
        for node in primary:
            for problem in node.problems():
                _fail(report, "containment", problem)
        check_symmetry(by_vid, report)
        check_lifespans(graph, by_vid, report)

        reference = {n.vid: n.to_dict() for n in primary}
        for name, nodes in decoded.items():
            mine = {n.vid: n.to_dict() for n in nodes}
            for vid in reference.keys() | mine.keys():
                if reference.get(vid) != mine.get(vid):
                    _fail(report, "layout_equivalence", f"{name}: vertex {vid!r}")

    report.bump("vertices", len(by_vid))
    report.bump("documents", graph.store.total_documents())
    report.bump("checks", len(CHECKS))
    report.seconds = time.monotonic() - started
    if report.ok:
        logger.info(f"Verified {len(by_vid)} vertices: all invariants hold")
    else:
        logger.warning(f"Verification failed: {', '.join(report.codes())}")
    return report
