"""
Document values, dotted field paths and the total order used by indexes.

Documents are JSON-shaped: dicts with string keys, lists, and scalars
(None, bool, int, float, str). A dotted path such as ``out_edges.neighbor``
walks into dicts and fans out through lists, so one path can resolve to many
values.

Index keys compare through ``order_key``, which ranks types before values
(None < bool < number < str < tuple). That makes every stored key comparable
with every other, so a collection may mix integer and string ids.
"""
from __future__ import annotations

from typing import Any, Dict, Iterable, List, Tuple

from chronostore.errors import ValidationError

_SCALARS = (type(None), bool, int, float, str)

# Sorts after every order key; used to close inclusive prefix bounds.
HIGH = (9,)


def order_key(value: Any) -> tuple:
    if value is None:
        return (0,)
    if isinstance(value, bool):
        return (1, int(value))
    if isinstance(value, (int, float)):
        return (2, value)
    if isinstance(value, str):
        return (3, value)
    if isinstance(value, (tuple, list)):
        return (4, tuple(order_key(v) for v in value))
    raise ValidationError(f"value {value!r} of type {type(value).__name__} cannot be indexed")


def clone(value: Any) -> Any:
    """Deep copy of a document value; rejects anything that is not JSON-shaped."""
    if isinstance(value, _SCALARS):
        return value
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            if not isinstance(k, str):
                raise ValidationError(f"document keys must be strings, got {k!r}")
            out[k] = clone(v)
        return out
    if isinstance(value, (list, tuple)):
        return [clone(v) for v in value]
    raise ValidationError(f"unsupported document value {value!r}")


def split(path: str) -> Tuple[str, ...]:
    return tuple(path.split("."))


def resolve(doc: Any, path: str) -> Tuple[List[Any], bool]:
    """
    All values at ``path`` and whether resolving passed through a list
    (including a list at the leaf). Missing segments yield no value.
    """
    values: List[Any] = [doc]
    fanned = False
    for seg in split(path):
        nxt: List[Any] = []
        for v in values:
            if isinstance(v, list):
                fanned = True
                for item in v:
                    if isinstance(item, dict) and seg in item:
                        nxt.append(item[seg])
            elif isinstance(v, dict) and seg in v:
                nxt.append(v[seg])
        values = nxt
    flat: List[Any] = []
    for v in values:
        if isinstance(v, list):
            fanned = True
            flat.extend(v)
        else:
            flat.append(v)
    return flat, fanned


def projection_tree(paths: Iterable[str]) -> Dict[str, Any]:
    """``{"a.b", "a.c", "d"}`` -> ``{"a": {"b": True, "c": True}, "d": True}``."""
    tree: Dict[str, Any] = {}
    for path in paths:
        node = tree
        segs = split(path)
        for seg in segs[:-1]:
            sub = node.get(seg)
            if sub is True:
                break
            node = node.setdefault(seg, {})
        else:
            node[segs[-1]] = True
    return tree


_MISSING = object()


def _project(value: Any, tree: Any) -> Any:
    if tree is True:
        return clone(value)
    if isinstance(value, dict):
        out = {}
        for k, sub in tree.items():
            if k in value:
                v = _project(value[k], sub)
                if v is not _MISSING:
                    out[k] = v
        return out
    if isinstance(value, list):
        return [v for v in (_project(x, tree) for x in value) if v is not _MISSING]
    return _MISSING


def project(doc: Dict[str, Any], tree: Dict[str, Any] | None) -> Dict[str, Any]:
    """Whitelist projection; paths absent from ``doc`` are simply left out."""
    if tree is None:
        return clone(doc)
    return _project(doc, tree)


def logical_size(value: Any) -> int:
    """Approximate wire size of a value, used for the bytes-transferred metric."""
    if value is None or isinstance(value, bool):
        return 1
    if isinstance(value, (int, float)):
        return 8
    if isinstance(value, str):
        return len(value)
    if isinstance(value, dict):
        return sum(len(k) + logical_size(v) for k, v in value.items()) + 2
    if isinstance(value, list):
        return sum(logical_size(v) for v in value) + 2
    return 0


def set_path(doc: Dict[str, Any], path: str, value: Any) -> None:
    """Set ``path`` in ``doc`` in place, creating intermediate dicts."""
    segs = split(path)
    node = doc
    for seg in segs[:-1]:
        nxt = node.get(seg)
        if nxt is None:
            nxt = node[seg] = {}
        elif not isinstance(nxt, dict):
            raise ValidationError(f"cannot set {path!r}: {seg!r} is not a sub-document")
        node = nxt
    node[segs[-1]] = value
