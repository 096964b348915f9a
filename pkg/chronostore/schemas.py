"""
Pydantic schemas: dataset mapping files, benchmark specs and HTTP responses.
"""
from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from chronostore.queries import QUERIES


# --- LDBC-style dataset mappings ---

class KindMapping(BaseModel):
    """How one entity or edge kind is read from CSV files."""
    kind: str
    type: Literal["entity", "edge"]
    files: List[str]                      # glob patterns relative to the dump root
    aliases: List[str] = []
    id_column: Optional[str] = None       # entities
    source_column: Optional[str] = None   # edges
    source_kind: Optional[str] = None
    target_column: Optional[str] = None
    target_kind: Optional[str] = None
    creation_column: str = "creationDate"
    deletion_column: Optional[str] = "deletionDate"
    attributes: List[str] = []

    @model_validator(mode="after")
    def check_columns(self):
        if self.type == "entity" and not self.id_column:
            raise ValueError(f"entity kind {self.kind} needs id_column")
        if self.type == "edge":
            missing = [f for f in ("source_column", "source_kind", "target_column", "target_kind")
                       if not getattr(self, f)]
            if missing:
                raise ValueError(f"edge kind {self.kind} needs {', '.join(missing)}")
        if not self.files:
            raise ValueError(f"kind {self.kind} lists no files")
        return self

    def names(self) -> List[str]:
        return [self.kind] + list(self.aliases)


class DatasetMapping(BaseModel):
    delimiter: str = "|"
    header: bool = True
    kinds: List[KindMapping]

    @field_validator("delimiter")
    @classmethod
    def one_char(cls, v):
        if len(v) != 1:
            raise ValueError("delimiter must be a single character")
        return v

    @model_validator(mode="after")
    def unique_names(self):
        seen = set()
        for km in self.kinds:
            for n in km.names():
                if n in seen:
                    raise ValueError(f"kind name {n!r} used twice")
                seen.add(n)
        return self

    def find(self, name: str) -> Optional[KindMapping]:
        for km in self.kinds:
            if name in km.names():
                return km
        return None


# --- Benchmarks ---

class BenchSpec(BaseModel):
    store: str
    layouts: List[Literal["st", "mt"]] = ["st", "mt"]
    modes: List[Literal["ra", "rr", "id"]] = ["ra", "rr", "id"]
    query: str = "degree"
    fractions: List[float] = [1, 25, 50, 100]
    reps: int = 500
    warmup: int = 5
    batch_size: int = 64
    granularity: Optional[int] = None     # default: one bucket per 1% of history
    seed: int = 0
    verify: bool = True

    @field_validator("query")
    @classmethod
    def known_query(cls, v):
        if v not in QUERIES or v == "snapshot":
            raise ValueError(f"query must be one of {[q for q in QUERIES if q != 'snapshot']}")
        return v

    @field_validator("fractions")
    @classmethod
    def fractions_in_range(cls, v):
        if not v:
            raise ValueError("at least one fraction is needed")
        for f in v:
            if not 0 < f <= 100:
                raise ValueError("fractions must lie in (0, 100]")
        return v

    @field_validator("reps")
    @classmethod
    def positive_reps(cls, v):
        if v < 1:
            raise ValueError("reps must be >= 1")
        return v

    @field_validator("warmup", "batch_size")
    @classmethod
    def non_negative(cls, v):
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator("granularity")
    @classmethod
    def positive_granularity(cls, v):
        if v is not None and v < 1:
            raise ValueError("granularity must be >= 1")
        return v


# --- HTTP responses ---

class QueryMetricsResponse(BaseModel):
    wall_time: float
    documents_fetched: int
    keys_fetched: int
    peak_buffered: int
    peak_batch: int
    bytes: int


class GlobalQueryResponse(BaseModel):
    query: str
    layout: str
    mode: str
    result: List[Dict[str, Any]]
    metrics: QueryMetricsResponse


class NeighborsResponse(BaseModel):
    vid: Any
    start: int
    end: int
    neighbors: List[Any]


class StatusResponse(BaseModel):
    path: Optional[str]
    layouts: List[str]
    vertices: int
    documents: Dict[str, int] = Field(default_factory=dict)
