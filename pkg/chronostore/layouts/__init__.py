from typing import Dict, Type

from chronostore.layouts.base import FetchStats, Layout, QueryMode, VertexSlice
from chronostore.layouts.model import (AttrValue, DiachronicNode, Direction, EdgeHistory,
                                       Vid, copy_node)
from chronostore.layouts.multi_table import MultiTableLayout
from chronostore.layouts.single_table import SingleTableLayout

LAYOUTS: Dict[str, Type[Layout]] = {
    SingleTableLayout.name: SingleTableLayout,
    MultiTableLayout.name: MultiTableLayout,
}


def get_layout(name: str) -> Layout:
    try:
        return LAYOUTS[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown layout {name!r}; choose from {sorted(LAYOUTS)}") from None


__all__ = [
    "AttrValue", "DiachronicNode", "Direction", "EdgeHistory", "FetchStats", "LAYOUTS",
    "Layout", "MultiTableLayout", "QueryMode", "SingleTableLayout", "VertexSlice", "Vid",
    "copy_node", "get_layout",
]
