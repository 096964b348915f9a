"""
Every error the engine raises.

All of them derive from ``ChronostoreError`` so a caller can catch the engine
as a whole. Where an error is also a classic Python error (a bad value, a type
mismatch, an I/O failure) it inherits that too, so ``except ValueError`` keeps
working for code that doesn't know about chronostore.
"""
from __future__ import annotations

from typing import List, Optional, Sequence


class ChronostoreError(Exception):
    """Base class for everything raised by chronostore."""


# -- temporal ---------------------------------------------------------------

class OverlapError(ChronostoreError, ValueError):
    """An interval would intersect one already in the set."""


class NotAliveAtError(ChronostoreError):
    """The entity (vertex, edge, property) is not alive at the given instant."""


# -- doc-store --------------------------------------------------------------

class StoreError(ChronostoreError):
    """Base class for doc-store failures."""


class DuplicateCollection(StoreError):
    pass


class UnknownCollection(StoreError):
    pass


class UnknownIndex(StoreError):
    pass


class ConflictError(StoreError):
    """Another writer is committing; only one batch may commit at a time."""


class ValidationError(StoreError):
    """A batch operation breaks the collection's key schema or index rules."""


class PredicateTypeError(StoreError, TypeError):
    """A predicate names unknown fields or compares incomparable values."""


class CorruptCheckpoint(StoreError):
    """Bad magic, bad version, CRC mismatch or a truncated checkpoint file."""


class StoreIOError(StoreError, OSError):
    pass


class InjectedFault(StoreError):
    """Raised by a fault injector to abort a batch mid-write (tests, bench)."""


# -- layouts ----------------------------------------------------------------

class LayoutMismatch(ChronostoreError):
    """A node or batch does not fit the layout it was handed to."""


class CorruptLayout(ChronostoreError):
    """Stored records cannot be reassembled into a node."""


# -- mutations --------------------------------------------------------------

class MutationError(ChronostoreError):
    """Base class for rejected mutation events."""


class AlreadyAliveError(MutationError):
    pass


class EndpointNotAlive(MutationError):
    pass


class EdgeAlreadyAlive(MutationError):
    pass


class OwnerNotAlive(MutationError):
    pass


class PropertyAlreadyAlive(MutationError):
    pass


class OutOfOrderError(MutationError):
    """Events must arrive with non-decreasing timestamps."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class InvariantViolation(MutationError):
    """Loaded state breaks the diachronic-node invariants. ``problems`` lists them."""

    def __init__(self, problems: Sequence[str]) -> None:
        self.problems: List[str] = list(problems)
        shown = "; ".join(self.problems[:5])
        more = f" (+{len(self.problems) - 5} more)" if len(self.problems) > 5 else ""
        super().__init__(f"{len(self.problems)} invariant violation(s): {shown}{more}")


# -- ingest -----------------------------------------------------------------

class ParseError(ChronostoreError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = "") -> None:
        where = f"{source}:" if source else ""
        prefix = f"{where}{line}: " if line is not None else (f"{source}: " if source else "")
        super().__init__(f"{prefix}{message}")
        self.line = line
        self.source = source


class UnknownKind(ChronostoreError, ValueError):
    """A schema filter or stream line names an entity/edge/event kind we don't know."""


class TickOverflowError(ChronostoreError, OverflowError):
    """A timestamp maps outside the loadable tick range."""


# -- bench ------------------------------------------------------------------

class MismatchError(ChronostoreError):
    """Two (layout, mode) cells of a benchmark disagree on the result."""

    def __init__(self, message: str, cells: Sequence[str] = ()) -> None:
        super().__init__(message)
        self.cells = list(cells)
