from chronostore.docstore.checkpoint import load_checkpoint, persist_checkpoint
from chronostore.docstore.cursor import Cursor, CursorStats
from chronostore.docstore.predicates import (FALSE, TRUE, And, AnyElement, Compare, Or,
                                             Overlaps, Predicate)
from chronostore.docstore.store import (Collection, DocStore, IndexDef, RandomFaultInjector,
                                        WriteBatch)

__all__ = [
    "And", "AnyElement", "Collection", "Compare", "Cursor", "CursorStats", "DocStore",
    "FALSE", "IndexDef", "Or", "Overlaps", "Predicate", "RandomFaultInjector", "TRUE",
    "WriteBatch", "load_checkpoint", "persist_checkpoint",
]
