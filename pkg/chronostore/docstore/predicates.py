"""
Predicates evaluated inside the store.

A predicate is a small immutable expression tree over dotted field paths. It
is pure: evaluating it reads only the document it is given. Paths that fan
out through lists match existentially (any resolved value satisfies the
comparison), the usual document-store reading of ``out_edges.neighbor == 7``.
``AnyElement`` scopes a sub-predicate to one list element at a time, which is
what an interval test over a list of ``{start, end}`` pairs needs.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Any, Callable, Dict, FrozenSet, Iterable, Optional, Tuple

from chronostore.docstore.paths import resolve
from chronostore.errors import PredicateTypeError
from chronostore.temporal import Interval

_OPS: Dict[str, Callable[[Any, Any], bool]] = {
    "<": operator.lt,
    "<=": operator.le,
    "==": operator.eq,
    ">=": operator.ge,
    ">": operator.gt,
}


class Predicate:
    def matches(self, doc: Dict[str, Any]) -> bool:
        raise NotImplementedError

    def paths(self) -> Iterable[str]:
        return ()

    def __and__(self, other: "Predicate") -> "Predicate":
        return And((self, other))

    def __or__(self, other: "Predicate") -> "Predicate":
        return Or((self, other))


@dataclass(frozen=True)
class Const(Predicate):
    value: bool

    def matches(self, doc):
        return self.value


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Compare(Predicate):
    path: str
    op: str
    value: Any

    def __post_init__(self) -> None:
        if self.op not in _OPS:
            raise PredicateTypeError(f"unknown comparison {self.op!r}")

    def matches(self, doc):
        fn = _OPS[self.op]
        values, _ = resolve(doc, self.path)
        try:
            return any(v is not None and fn(v, self.value) for v in values)
        except TypeError as exc:
            raise PredicateTypeError(f"{self.path} {self.op} {self.value!r}: {exc}") from exc

    def paths(self):
        return (self.path,)


@dataclass(frozen=True)
class Overlaps(Predicate):
    """``[doc[start_path], doc[end_path])`` intersects ``interval``."""
    start_path: str
    end_path: str
    interval: Interval

    def matches(self, doc):
        starts, _ = resolve(doc, self.start_path)
        ends, _ = resolve(doc, self.end_path)
        if len(starts) != 1 or len(ends) != 1:
            return False
        s, e = starts[0], ends[0]
        if not (isinstance(s, int) and isinstance(e, int)):
            raise PredicateTypeError(
                f"overlap test needs integer bounds at {self.start_path}/{self.end_path}"
            )
        return s < self.interval.end and self.interval.start < e

    def paths(self):
        return (self.start_path, self.end_path)


@dataclass(frozen=True)
class And(Predicate):
    parts: Tuple[Predicate, ...]

    def matches(self, doc):
        return all(p.matches(doc) for p in self.parts)

    def paths(self):
        return tuple(x for p in self.parts for x in p.paths())


@dataclass(frozen=True)
class Or(Predicate):
    parts: Tuple[Predicate, ...]

    def matches(self, doc):
        return any(p.matches(doc) for p in self.parts)

    def paths(self):
        return tuple(x for p in self.parts for x in p.paths())


@dataclass(frozen=True)
class AnyElement(Predicate):
    """Some element of the list at ``list_path`` satisfies ``predicate``."""
    list_path: str
    predicate: Predicate

    def matches(self, doc):
        values, _ = resolve(doc, self.list_path)
        return any(isinstance(v, dict) and self.predicate.matches(v) for v in values)

    def paths(self):
        return (self.list_path,) + tuple(f"{self.list_path}.{p}" for p in self.predicate.paths())


def validate(predicate: Predicate, fields: Optional[FrozenSet[str]]) -> None:
    """Raise ``PredicateTypeError`` for paths outside a collection's declared fields."""
    validate_paths(predicate.paths(), fields)


def validate_paths(paths: Iterable[str], fields: Optional[FrozenSet[str]]) -> None:
    if fields is None:
        return
    for path in paths:
        if path in fields or any(f.startswith(path + ".") for f in fields):
            continue
        raise PredicateTypeError(f"unknown field {path!r}")
