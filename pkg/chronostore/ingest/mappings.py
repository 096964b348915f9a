"""
Column mappings for LDBC-style CSV dumps.

A mapping tells the transformer which files hold which kind, which column is
the id (or the two endpoint ids for an edge kind), where the creation and
deletion dates are, and which columns become properties::

    {
      "delimiter": "|",
      "kinds": [
        {"kind": "Person", "type": "entity",
         "files": ["**/Person/*.csv", "**/Person.csv"],
         "id_column": "id", "attributes": ["firstName", "lastName"]},
        {"kind": "knows", "type": "edge", "aliases": ["Person_knows_Person"],
         "files": ["**/Person_knows_Person/*.csv"],
         "source_column": "Person1Id", "source_kind": "Person",
         "target_column": "Person2Id", "target_kind": "Person"}
      ]
    }

The built-in default describes the dynamic part of an LDBC SNB Datagen dump
reduced to two entity kinds (Person, Forum) and two edge kinds (knows,
hasMember). Mapping files are plain JSON, validated with
``schemas.DatasetMapping``; ``ValueError`` on anything malformed.
"""
from __future__ import annotations

import json
import os
from typing import List, Optional, Sequence

from pydantic import ValidationError as PydanticValidationError

from chronostore.errors import UnknownKind
from chronostore.schemas import DatasetMapping, KindMapping

REDUCED_SCHEMA = ("Person", "Forum", "knows", "hasMember")


def _patterns(name: str) -> List[str]:
    return [f"**/{name}/*.csv", f"**/{name}.csv", f"**/{name}_0_0.csv"]


def default_mapping() -> DatasetMapping:
    return DatasetMapping(delimiter="|", kinds=[
        KindMapping(kind="Person", type="entity", files=_patterns("Person"), id_column="id",
                    attributes=["firstName", "lastName", "gender", "birthday",
                                "locationIP", "browserUsed"]),
        KindMapping(kind="Forum", type="entity", files=_patterns("Forum"), id_column="id",
                    attributes=["title"]),
        KindMapping(kind="knows", type="edge", aliases=["Person_knows_Person"],
                    files=_patterns("Person_knows_Person"),
                    source_column="Person1Id", source_kind="Person",
                    target_column="Person2Id", target_kind="Person"),
        KindMapping(kind="hasMember", type="edge", aliases=["Forum_hasMember_Person"],
                    files=_patterns("Forum_hasMember_Person"),
                    source_column="ForumId", source_kind="Forum",
                    target_column="PersonId", target_kind="Person"),
    ])


def load_mapping(path: Optional[str]) -> DatasetMapping:
    """The mapping stored at ``path``, or the default mapping when ``path`` is None."""
    if path is None:
        return default_mapping()
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise ValueError(f"cannot read mapping file {path}: {e}") from e
    try:
        return DatasetMapping.model_validate(data)
    except PydanticValidationError as e:
        raise ValueError(f"invalid mapping file {path}: {e}") from e


def save_mapping(path: str, mapping: DatasetMapping) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(mapping.model_dump(), f, indent=2, ensure_ascii=False)
    os.replace(tmp, path)


def select_kinds(mapping: DatasetMapping, names: Optional[Sequence[str]]) -> List[KindMapping]:
    """The kinds passing a schema filter; entity kinds first. ``UnknownKind`` for unmapped names."""
    names = list(names) if names else list(REDUCED_SCHEMA)
    chosen: List[KindMapping] = []
    for n in names:
        km = mapping.find(n.strip())
        if km is None:
            raise UnknownKind(f"no mapping for kind {n!r}")
        if km not in chosen:
            chosen.append(km)
    return sorted(chosen, key=lambda km: 0 if km.type == "entity" else 1)
