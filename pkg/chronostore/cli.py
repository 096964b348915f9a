"""
The ``chronostore`` command line.

    chronostore load DATASET [--format events|snapshots|ldbc] [--layout st|mt|both]
    chronostore transform DUMP_DIR --out EVENTS [--kinds Person,Forum,knows,hasMember]
    chronostore query degree|avg_degree|one_hop|history|snapshot [--start --end --vid --at]
    chronostore bench [--query degree] [--layout st,mt] [--mode ra,rr,id] [--fractions 1,25,50,100]
    chronostore verify
    chronostore generate events|ldbc|snapshots --out PATH [--seed N]
    chronostore serve [--host --port]
    chronostore config [--set key=value ...]

The store defaults to ``$CHRONOSTORE_DATA_DIR/store.chrn``. Flags override the
saved settings (``chronostore config``), which override built-in defaults.

Exit codes: 0 success, 1 invariant or result-mismatch failure, 2 usage or
input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from typing import Any, Dict, List, Optional, Sequence

from chronostore import __version__, settings_store
from chronostore.bench import history_span, run_bench, write_report
from chronostore.docstore.store import DocStore
from chronostore.errors import ChronostoreError, MismatchError
from chronostore.graph import TemporalGraph
from chronostore.ingest.event_format import MAGIC, load_event_stream, write_events
from chronostore.ingest.ldbc import default_ticks, load_ldbc_dump, transform_ldbc_dump
from chronostore.ingest.mappings import load_mapping
from chronostore.ingest.snapshots import load_snapshot_dataset, parse_vid
from chronostore.ingest.ticks import UNITS, TickMapping, tick_mapping
from chronostore.layouts.base import QueryMode
from chronostore.queries import GLOBAL_QUERIES, QUERIES, QueryPlan, execute, result_payload
from chronostore.schemas import BenchSpec
from chronostore.temporal import ALIVE_END, Interval
from chronostore.verify import verify_graph

logger = logging.getLogger("chronostore")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _emit(obj: Any, stream=None) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, default=str), file=stream or sys.stdout)


def _csv(value: str) -> List[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _store(args) -> str:
    return args.store or settings_store.default_store_path()


def _layouts(value: str) -> tuple:
    return ("st", "mt") if value == "both" else tuple(_csv(value))


def _ticks(args, fallback: Optional[TickMapping]) -> Optional[TickMapping]:
    if args.unit:
        return tick_mapping(args.unit, args.origin)
    return fallback


def graph_counts(graph: TemporalGraph) -> Dict[str, int]:
    """Distinct vertices and distinct directed edges ever stored."""
    edges = sum(len(node.out_edges) for node in graph.primary.nodes(graph.store))
    return {"vertices": graph.vertex_count(), "edges": edges}


# ---------------------------------------------------------------------------
# load / transform
# ---------------------------------------------------------------------------
def detect_format(path: str) -> str:
    if os.path.isdir(path):
        return "ldbc"
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    if not first.strip() or first.startswith(MAGIC):
        return "events"
    return "snapshots"


def cmd_load(args, settings: Dict[str, Any]) -> int:
    fmt = args.format or detect_format(args.dataset)
    path = _store(args)
    layouts = _layouts(args.layout)
    skip = args.skip_errors if args.skip_errors is not None else settings["skip_errors"]
    if args.append:
        graph = TemporalGraph.open(path, layouts)
    else:
        graph = TemporalGraph(DocStore(), layouts, path)

    started = time.monotonic()
    if fmt == "events":
        report = load_event_stream(graph, args.dataset, skip_errors=skip)
    elif fmt == "snapshots":
        if not args.snapshots:
            raise ValueError("snapshot datasets need --snapshots N")
        report = load_snapshot_dataset(graph, args.dataset, args.snapshots, args.vertices,
                                       args.all_alive, args.symmetric)
    else:
        report = load_ldbc_dump(graph, args.dataset, _csv(args.kinds) if args.kinds else None,
                                load_mapping(args.mapping), _ticks(args, default_ticks()),
                                properties=not args.no_properties, bulk=args.bulk,
                                skip_errors=skip, workers=args.workers)
    build_seconds = time.monotonic() - started
    graph.set_meta("build", {"seconds": round(build_seconds, 6), "source": os.path.abspath(args.dataset),
                             "format": fmt})
    size = graph.persist(path)
    _emit({
        "store": path,
        "format": fmt,
        "build_seconds": round(build_seconds, 6),
        "bytes_on_disk": size,
        **graph_counts(graph),
        "space": graph.space_report(),
        "report": report.to_dict(),
    })
    logger.info(f"Loaded {args.dataset} into {path} in {build_seconds:.3f}s")
    return EXIT_OK


def cmd_transform(args, settings: Dict[str, Any]) -> int:
    report = transform_ldbc_dump(args.input, args.out, _csv(args.kinds) if args.kinds else None,
                                 load_mapping(args.mapping), _ticks(args, default_ticks()),
                                 properties=not args.no_properties, workers=args.workers)
    _emit({"out": args.out, "report": report.to_dict()})
    return EXIT_OK


# ---------------------------------------------------------------------------
# query / bench / verify
# ---------------------------------------------------------------------------
def _open(args) -> TemporalGraph:
    path = _store(args)
    if not os.path.exists(path):
        raise FileNotFoundError(f"store not found: {path}")
    return TemporalGraph.open(path, create=False)


def cmd_query(args, settings: Dict[str, Any]) -> int:
    graph = _open(args)
    if args.query == "snapshot":
        if args.at is None:
            raise ValueError("snapshot needs --at T")
        q = Interval.point(args.at)
    else:
        end = args.end
        if end is None:
            end = history_span(graph)[1] if args.query in GLOBAL_QUERIES else ALIVE_END
        q = Interval(args.start, end)
    vid = parse_vid(args.vid) if args.vid is not None else None
    batch_size = args.batch_size if args.batch_size is not None else settings["batch_size"]
    plan = QueryPlan(args.query, q, layout=args.layout or settings["layout"],
                     mode=QueryMode(args.mode or settings["mode"]),
                     granularity=args.granularity, batch_size=batch_size, vid=vid)
    result, metrics = execute(graph, plan)
    _emit(result_payload(args.query, result))
    print(json.dumps({"query": args.query, "layout": plan.layout, "mode": plan.mode_label,
                      **metrics.to_dict()}), file=sys.stderr)
    return EXIT_OK


def cmd_bench(args, settings: Dict[str, Any]) -> int:
    spec = BenchSpec(
        store=_store(args),
        layouts=_csv(args.layout) if args.layout else ["st", "mt"],
        modes=_csv(args.mode) if args.mode else ["ra", "rr", "id"],
        query=args.query,
        fractions=settings_store.parse_fractions(args.fractions or settings["fractions"]),
        reps=args.reps if args.reps is not None else settings["reps"],
        warmup=args.warmup if args.warmup is not None else settings["warmup"],
        batch_size=args.batch_size if args.batch_size is not None else settings["batch_size"],
        granularity=args.granularity,
        seed=args.seed,
        verify=not args.no_verify,
    )
    try:
        report = run_bench(spec)
    except MismatchError as e:
        _emit({"error": str(e), "cells": e.cells}, sys.stderr)
        return EXIT_FAILED
    out = args.out or os.path.join(settings_store.data_dir(), "bench", f"bench-{spec.query}")
    json_path, csv_path = write_report(report, out)
    _emit({"json": json_path, "csv": csv_path, "cells": len(report.cells),
           "attestation": report.attestation})
    return EXIT_OK


def cmd_verify(args, settings: Dict[str, Any]) -> int:
    graph = _open(args)
    report = verify_graph(graph)
    _emit(report.to_dict())
    return EXIT_OK if report.ok else EXIT_FAILED


# ---------------------------------------------------------------------------
# generate / serve / config
# ---------------------------------------------------------------------------
def cmd_generate(args, settings: Dict[str, Any]) -> int:
    from chronostore import synthetic

    if args.kind == "events":
        events = synthetic.random_events(args.seed, vertices=args.vertices, events=args.events,
                                         id_style=args.id_style)
        n = write_events(args.out, events, TickMapping())
        _emit({"out": args.out, "events": n})
    elif args.kind == "ldbc":
        counts = synthetic.write_ldbc_fixture(args.out, args.seed, persons=args.persons,
                                              forums=args.forums, knows=args.knows,
                                              memberships=args.memberships,
                                              delete_ratio=args.delete_ratio)
        _emit({"out": args.out, "rows": counts})
    else:
        n = synthetic.write_snapshot_edges(args.out, args.seed, vertices=args.vertices,
                                           edges=args.edges, snapshots=args.snapshots)
        _emit({"out": args.out, "edges": n, "snapshots": args.snapshots})
    return EXIT_OK


def cmd_serve(args, settings: Dict[str, Any]) -> int:
    import uvicorn

    from chronostore import database
    from chronostore.server import app

    database.open_store(_store(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level=settings["log_level"].lower())
    return EXIT_OK


def cmd_config(args, settings: Dict[str, Any]) -> int:
    if args.set:
        settings = settings_store.update_settings(**settings_store.parse_assignments(args.set))
    _emit({"data_dir": settings_store.data_dir(), "settings": settings})
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------
def _add_store(p: argparse.ArgumentParser) -> None:
    p.add_argument("--store", help="store checkpoint (default: $CHRONOSTORE_DATA_DIR/store.chrn)")


def _add_ticks(p: argparse.ArgumentParser) -> None:
    p.add_argument("--unit", choices=UNITS, help="tick unit of the dataset's timestamps")
    p.add_argument("--origin", type=int, help="timestamp that becomes tick 0")


def _add_ldbc(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kinds", help="schema filter (default: Person,Forum,knows,hasMember)")
    p.add_argument("--mapping", help="JSON column-mapping file")
    p.add_argument("--no-properties", action="store_true", help="skip property events")
    p.add_argument("--workers", type=int, help="parallel file parsers")
    _add_ticks(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chronostore", description="Temporal graph storage engine")
    parser.add_argument("--version", action="version", version=f"chronostore {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("load", help="build a store from a dataset")
    p.add_argument("dataset", help="event-stream file, snapshot edge list or LDBC dump directory")
    p.add_argument("--format", choices=("events", "snapshots", "ldbc"), help="default: detected")
    p.add_argument("--layout", choices=("st", "mt", "both"), default="both")
    p.add_argument("--append", action="store_true", help="load into the existing store")
    p.add_argument("--skip-errors", action="store_true", default=None,
                   help="skip rejected events instead of stopping")
    p.add_argument("--snapshots", type=int, help="snapshot count (snapshot datasets)")
    p.add_argument("--vertices", help="vertex lifespan file (snapshot datasets)")
    p.add_argument("--all-alive", action="store_true", help="vertices alive over every snapshot")
    p.add_argument("--symmetric", action="store_true", help="read edges as undirected")
    p.add_argument("--bulk", action="store_true", help="LDBC: interval bulk load instead of replay")
    _add_ldbc(p)
    _add_store(p)
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("transform", help="LDBC-style dump -> chronological event stream")
    p.add_argument("input", help="dump directory")
    p.add_argument("--out", required=True, help="event-stream file to write")
    _add_ldbc(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("query", help="run one query; result on stdout, metrics on stderr")
    p.add_argument("query", choices=QUERIES)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--end", type=int, help="default: end of history (global), open (local)")
    p.add_argument("--at", type=int, help="instant for snapshot")
    p.add_argument("--vid", help="vertex for one_hop and history")
    p.add_argument("--granularity", type=int, default=1)
    p.add_argument("--mode", choices=[m.value for m in QueryMode])
    p.add_argument("--layout", choices=("st", "mt"))
    p.add_argument("--batch-size", type=int)
    _add_store(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="time a query over layout x mode x history fraction")
    p.add_argument("--query", default="degree", choices=[q for q in QUERIES if q != "snapshot"])
    p.add_argument("--layout", help="comma list, default st,mt")
    p.add_argument("--mode", help="comma list, default ra,rr,id")
    p.add_argument("--fractions", help="percent of history, e.g. 1,25,50,100")
    p.add_argument("--reps", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--granularity", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-verify", action="store_true", help="skip the cross-cell result check")
    p.add_argument("--out", help="report path without extension (.json and .csv are written)")
    _add_store(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="run the invariant suite against a store")
    _add_store(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="write a synthetic workload")
    p.add_argument("kind", choices=("events", "ldbc", "snapshots"))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vertices", type=int, default=100)
    p.add_argument("--events", type=int, default=1000)
    p.add_argument("--id-style", choices=("int", "str", "mixed"), default="int")
    p.add_argument("--edges", type=int, default=500)
    p.add_argument("--snapshots", type=int, default=10)
    p.add_argument("--persons", type=int, default=200)
    p.add_argument("--forums", type=int, default=50)
    p.add_argument("--knows", type=int, default=500)
    p.add_argument("--memberships", type=int, default=400)
    p.add_argument("--delete-ratio", type=float, default=0.1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("serve", help="read-only HTTP query service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    _add_store(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("config", help="show or change saved defaults")
    p.add_argument("--set", nargs="+", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_config)
    return parser


def _configure_logging(args, settings: Dict[str, Any]) -> None:
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    else:
        level = getattr(logging, str(settings.get("log_level", "INFO")).upper(), logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logger.setLevel(level)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    settings = settings_store.get_settings()
    _configure_logging(args, settings)
    try:
        return args.func(args, settings)
    except MismatchError as e:
        logger.error(f"{e}")
        return EXIT_FAILED
    except (ChronostoreError, ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
