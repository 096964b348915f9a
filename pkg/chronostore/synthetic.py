"""
Synthetic historical-graph workloads.

* ``random_events`` - a valid random event stream: every event is accepted
  by a fresh ``GraphWriter`` when replayed in order.
* ``uniform_records`` - bulk records where every vertex lives over the whole
  horizon and edge intervals are spread uniformly over it.
* ``write_ldbc_fixture`` - an LDBC-style CSV dump (Person, Forum, knows,
  hasMember) with creation/deletion dates, about ``delete_ratio`` of the rows
  deleted, readable with the default mapping.
* ``write_snapshot_edges`` - a snapshot-indexed edge list.

Everything is driven by one ``random.Random(seed)`` so equal seeds give
equal workloads.
"""
from __future__ import annotations

import csv
import logging
import os
import random
from datetime import datetime, timedelta, timezone
from typing import Dict, List, Optional, Tuple

from chronostore.ingest.ldbc import LDBC_ORIGIN_MS
from chronostore.layouts.model import Vid
from chronostore.mutations import EdgeRecord, EdgeRef, MutationEvent, NodeRecord
from chronostore.temporal import Interval, IntervalSet

logger = logging.getLogger("chronostore")

PROPERTY_NAMES = ("name", "color", "weight")
PROPERTY_VALUES = ("red", "green", "blue", 1, 2, 3, 2.5, True, None)

# Relative frequency of each event kind in random streams.
EVENT_WEIGHTS = {
    "insert_node": 3,
    "insert_edge": 6,
    "insert_property": 3,
    "delete_node": 1,
    "delete_edge": 2,
    "delete_property": 1,
}


def _vid(n: int, id_style: str) -> Vid:
    if id_style == "str" or (id_style == "mixed" and n % 2):
        return f"v{n}"
    return n


def random_events(seed: int = 0, vertices: int = 50, events: int = 500, max_gap: int = 3,
                  properties: bool = True, edge_properties: bool = True,
                  id_style: str = "int", start: int = 0) -> List[MutationEvent]:
    """
    A random stream that a fresh graph accepts in order. An item is deleted
    only after the tick it was inserted at, and re-inserted only after the
    tick it was deleted at.
    """
    if id_style not in ("int", "str", "mixed"):
        raise ValueError("id_style must be int, str or mixed")
    rng = random.Random(seed)
    pool = [_vid(n, id_style) for n in range(vertices)]
    alive: Dict[Vid, int] = {}
    dead: Dict[Vid, int] = {}
    edges: Dict[Tuple[Vid, Vid], int] = {}
    edges_dead: Dict[Tuple[Vid, Vid], int] = {}
    props: Dict[Tuple[object, str], int] = {}
    props_dead: Dict[Tuple[object, str], int] = {}
    kinds = [k for k in EVENT_WEIGHTS if properties or "property" not in k]
    weights = [EVENT_WEIGHTS[k] for k in kinds]
    out: List[MutationEvent] = []
    t = start

    def kill_edge(pair: Tuple[Vid, Vid], at: int) -> None:
        edges.pop(pair, None)
        edges_dead[pair] = at
        for key in [k for k in props if k[0] == EdgeRef(*pair)]:
            props.pop(key)
            props_dead[key] = at

    attempts = 0
    while len(out) < events and attempts < events * 50:
        attempts += 1
        t += rng.randint(0, max_gap)
        kind = rng.choices(kinds, weights)[0]
        if kind == "insert_node":
            cands = [v for v in pool if v not in alive and dead.get(v, -1) < t]
            if not cands:
                continue
            v = rng.choice(cands)
            alive[v] = t
            out.append(MutationEvent.insert_node(t, v))
        elif kind == "delete_node":
            cands = [v for v, since in alive.items() if since < t]
            if not cands:
                continue
            v = rng.choice(cands)
            del alive[v]
            dead[v] = t
            for pair in [p for p in edges if v in p]:
                kill_edge(pair, t)
            for key in [k for k in props if k[0] == v]:
                props.pop(key)
                props_dead[key] = t
            out.append(MutationEvent.delete_node(t, v))
        elif kind == "insert_edge":
            live = list(alive)
            if len(live) < 2:
                continue
            u, v = rng.sample(live, 2)
            if (u, v) in edges or edges_dead.get((u, v), -1) >= t:
                continue
            edges[(u, v)] = t
            out.append(MutationEvent.insert_edge(t, u, v))
        elif kind == "delete_edge":
            cands = [p for p, since in edges.items() if since < t]
            if not cands:
                continue
            pair = rng.choice(cands)
            kill_edge(pair, t)
            out.append(MutationEvent.delete_edge(t, *pair))
        elif kind == "insert_property":
            owners: List[object] = list(alive)
            if edge_properties:
                owners.extend(EdgeRef(*p) for p in edges)
            if not owners:
                continue
            owner = rng.choice(owners)
            name = rng.choice(PROPERTY_NAMES)
            key = (owner, name)
            if key in props or props_dead.get(key, -1) >= t:
                continue
            props[key] = t
            out.append(MutationEvent.insert_property(t, owner, name, rng.choice(PROPERTY_VALUES)))
        else:
            cands = [k for k, since in props.items() if since < t]
            if not cands:
                continue
            key = rng.choice(cands)
            del props[key]
            props_dead[key] = t
            out.append(MutationEvent.delete_property(t, key[0], key[1]))
    return out


def uniform_records(seed: int = 0, vertices: int = 1000, edges: int = 5000,
                    horizon: int = 1000, max_length: Optional[int] = None
                    ) -> Tuple[List[NodeRecord], List[EdgeRecord]]:
    """Every vertex alive over ``[0, horizon)``; edge intervals start uniformly in it."""
    rng = random.Random(seed)
    max_length = max_length or max(1, horizon // 10)
    nodes = [NodeRecord(v, [Interval(0, horizon)]) for v in range(vertices)]
    runs: Dict[Tuple[int, int], List[Interval]] = {}
    for _ in range(edges):
        u, v = rng.randrange(vertices), rng.randrange(vertices)
        if u == v:
            continue
        s = rng.randrange(horizon)
        e = min(horizon, s + rng.randint(1, max_length))
        runs.setdefault((u, v), []).append(Interval(s, e))
    recs = [EdgeRecord(u, v, list(IntervalSet.union_of(ivs))) for (u, v), ivs in sorted(runs.items())]
    return nodes, recs


# ---------------------------------------------------------------------------
# LDBC-style dumps
# ---------------------------------------------------------------------------
LDBC_SPAN_MS = 3 * 365 * 86_400_000
FOREVER = "9999-12-31T23:59:59.999+0000"
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

PERSON_COLUMNS = ["creationDate", "deletionDate", "id", "firstName", "lastName", "gender",
                  "birthday", "locationIP", "browserUsed"]
FORUM_COLUMNS = ["creationDate", "deletionDate", "id", "title"]
KNOWS_COLUMNS = ["creationDate", "deletionDate", "Person1Id", "Person2Id"]
MEMBER_COLUMNS = ["creationDate", "deletionDate", "ForumId", "PersonId"]

_FIRST = ("Mahinda", "Carmen", "Jun", "Ali", "Hans", "Olga", "Chen", "Ana")
_LAST = ("Perera", "Lepland", "Wang", "Khan", "Johansson", "Ivanova", "Silva")
_BROWSERS = ("Firefox", "Chrome", "Safari", "Opera", "Internet Explorer")


def ldbc_date(ms: int) -> str:
    dt = _EPOCH + timedelta(milliseconds=ms)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ms % 1000:03d}+0000"


def _write_csv(path: str, columns: List[str], rows: List[List[str]]) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, delimiter="|", lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)
    os.replace(tmp, path)


def write_ldbc_fixture(out_dir: str, seed: int = 0, persons: int = 200, forums: int = 50,
                       knows: int = 500, memberships: int = 400, delete_ratio: float = 0.1,
                       parts: int = 2) -> Dict[str, int]:
    """
    Write ``<out_dir>/dynamic/<Kind>/part-<i>.csv`` files and return the row
    count per kind. Edges are created after both endpoints and deleted (if at
    all) before either endpoint is.
    """
    rng = random.Random(seed)
    origin = LDBC_ORIGIN_MS
    span = LDBC_SPAN_MS

    def lifetime() -> Tuple[int, Optional[int]]:
        c = origin + rng.randrange(span // 2)
        d = None
        if rng.random() < delete_ratio:
            d = c + 1 + rng.randrange(origin + span - c)
        return c, d

    def end_of(life: Tuple[int, Optional[int]]) -> int:
        return life[1] if life[1] is not None else origin + span + 1

    def date_cells(life: Tuple[int, Optional[int]]) -> List[str]:
        return [ldbc_date(life[0]), ldbc_date(life[1]) if life[1] is not None else FOREVER]

    person_life = {}
    person_rows = []
    for i in range(persons):
        pid = 933 + i * 7
        life = lifetime()
        person_life[pid] = life
        person_rows.append(date_cells(life) + [
            str(pid), rng.choice(_FIRST), rng.choice(_LAST), rng.choice(("male", "female")),
            f"{rng.randint(1960, 2000)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
            f"{rng.randint(1, 223)}.{rng.randint(0, 255)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}",
            rng.choice(_BROWSERS),
        ])
    forum_life = {}
    forum_rows = []
    for i in range(forums):
        fid = 10_000 + i * 3
        life = lifetime()
        forum_life[fid] = life
        forum_rows.append(date_cells(life) + [str(fid), f"Wall of {rng.choice(_FIRST)} {i}"])

    def edge_rows(count: int, sources: Dict[int, tuple], targets: Dict[int, tuple],
                  self_ok: bool) -> List[List[str]]:
        rows, seen = [], set()
        src_ids, dst_ids = list(sources), list(targets)
        attempts = 0
        while len(rows) < count and attempts < count * 20:
            attempts += 1
            u, v = rng.choice(src_ids), rng.choice(dst_ids)
            if (u, v) in seen or (not self_ok and u == v):
                continue
            lo = max(sources[u][0], targets[v][0]) + 1
            hi = min(end_of(sources[u]), end_of(targets[v]))
            if lo >= hi - 1:
                continue
            seen.add((u, v))
            c = rng.randrange(lo, hi - 1)
            d = None
            if rng.random() < delete_ratio:
                d = rng.randrange(c + 1, hi)
            rows.append(date_cells((c, d)) + [str(u), str(v)])
        return rows

    knows_rows = edge_rows(knows, person_life, person_life, False)
    member_rows = edge_rows(memberships, forum_life, person_life, True)

    for kind, columns, rows in (("Person", PERSON_COLUMNS, person_rows),
                                ("Forum", FORUM_COLUMNS, forum_rows),
                                ("Person_knows_Person", KNOWS_COLUMNS, knows_rows),
                                ("Forum_hasMember_Person", MEMBER_COLUMNS, member_rows)):
        for p in range(parts):
            chunk = rows[p::parts]
            _write_csv(os.path.join(out_dir, "dynamic", kind, f"part-{p}.csv"), columns, chunk)
    counts = {"Person": len(person_rows), "Forum": len(forum_rows),
              "knows": len(knows_rows), "hasMember": len(member_rows)}
    logger.info(f"Wrote LDBC-style fixture to {out_dir}: {counts}")
    return counts


def write_snapshot_edges(path: str, seed: int = 0, vertices: int = 100, edges: int = 500,
                         snapshots: int = 10) -> int:
    """``src<TAB>dst<TAB>first<TAB>last`` lines; returns the number of lines."""
    rng = random.Random(seed)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(f"# {vertices} vertices, {snapshots} snapshots\n")
        for _ in range(edges):
            u, v = rng.randrange(vertices), rng.randrange(vertices)
            first = rng.randrange(snapshots)
            last = rng.randrange(first, snapshots)
            f.write(f"{u}\t{v}\t{first}\t{last}\n")
    os.replace(tmp, path)
    return edges
