"""
Mapping dataset timestamps onto engine ticks.

Three units are supported:

* ``year`` - tick = calendar year - origin (origin defaults to 2010, where
  the LDBC social-network data starts). ISO dates contribute their year.
* ``snapshot`` - tick = snapshot index - origin (origin defaults to 0).
* ``epoch-ms`` - tick = milliseconds since the Unix epoch - origin. ISO
  timestamps (``2010-01-03T15:10:31.499+0000`` and friends) are converted
  first; naive timestamps are taken as UTC.

The mapping is order-preserving and, on each unit's own domain, invertible.
Timestamps before the origin or reaching ``ALIVE_END`` raise
``TickOverflowError``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Dict, Union

from chronostore.errors import TickOverflowError
from chronostore.temporal import ALIVE_END

UNITS = ("year", "snapshot", "epoch-ms")
DEFAULT_ORIGIN = {"year": 2010, "snapshot": 0, "epoch-ms": 0}

Timestamp = Union[int, str, datetime]

_TZ_COMPACT = re.compile(r"([+-]\d{2})(\d{2})$")


def parse_datetime(raw: str) -> datetime:
    """ISO-8601 date or timestamp; ``Z`` and ``+0000`` offsets accepted."""
    text = raw.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    text = _TZ_COMPACT.sub(r"\1:\2", text)
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt


def datetime_to_epoch_ms(dt: datetime) -> int:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    delta = dt - datetime(1970, 1, 1, tzinfo=timezone.utc)
    return (delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000


@dataclass(frozen=True)
class TickMapping:
    unit: str = "epoch-ms"
    origin: int = 0

    def __post_init__(self) -> None:
        if self.unit not in UNITS:
            raise ValueError(f"unknown tick unit {self.unit!r}; choose from {list(UNITS)}")

    @classmethod
    def default(cls, unit: str) -> "TickMapping":
        return cls(unit, DEFAULT_ORIGIN.get(unit, 0))

    @classmethod
    def from_fields(cls, fields: Dict[str, str]) -> "TickMapping":
        unit = fields.get("unit", "epoch-ms")
        origin = fields.get("origin")
        return cls(unit, int(origin) if origin not in (None, "") else DEFAULT_ORIGIN.get(unit, 0))

    def fields(self) -> Dict[str, str]:
        return {"unit": self.unit, "origin": str(self.origin)}

    def _raw(self, ts: Timestamp) -> int:
        """The timestamp in this unit's own number space."""
        if isinstance(ts, bool):
            raise ValueError(f"not a timestamp: {ts!r}")
        if isinstance(ts, int):
            return ts
        if isinstance(ts, datetime):
            return ts.year if self.unit == "year" else datetime_to_epoch_ms(ts)
        text = str(ts).strip()
        if re.fullmatch(r"-?\d+", text):
            return int(text)
        if self.unit == "snapshot":
            raise ValueError(f"snapshot index expected, got {ts!r}")
        dt = parse_datetime(text)
        return dt.year if self.unit == "year" else datetime_to_epoch_ms(dt)

    def to_tick(self, ts: Timestamp) -> int:
        tick = self._raw(ts) - self.origin
        if tick < 0:
            raise TickOverflowError(f"{ts!r} lies before the origin {self.origin} ({self.unit})")
        if tick >= ALIVE_END:
            raise TickOverflowError(f"{ts!r} maps onto the ALIVE_END sentinel")
        return tick

    def from_tick(self, tick: int) -> int:
        """Inverse of ``to_tick`` in the unit's number space (year, index or epoch ms)."""
        if not 0 <= tick < ALIVE_END:
            raise TickOverflowError(f"tick {tick} outside the loadable range")
        return tick + self.origin


def tick_mapping(unit: str, origin: int | None = None) -> TickMapping:
    return TickMapping(unit, DEFAULT_ORIGIN.get(unit, 0) if origin is None else origin)
