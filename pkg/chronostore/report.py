"""
Load and verification reports.

Loading real-world dumps is where data gets dropped, so nothing is dropped
silently: every skipped event, rejected record or broken invariant is
recorded here as a finding, aggregated by ``code`` with a few sample lines,
next to running counters (events per kind, records loaded). ``cmd_load`` and
``cmd_verify`` print ``to_dict()`` as JSON.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

MAX_SAMPLES = 8


class Severity(str, Enum):
    """How serious a finding is."""
    INFO = "info"           # worth knowing, nothing lost
    SKIPPED = "skipped"     # input not applied (skip-errors mode)
    ERROR = "error"         # an invariant or a record is broken


@dataclass
class Finding:
    """One kind of observation, aggregated by ``code``."""
    code: str
    severity: Severity
    title: str
    detail: str = ""
    count: int = 0
    samples: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity.value,
            "title": self.title,
            "detail": self.detail,
            "count": self.count,
            "samples": self.samples[:MAX_SAMPLES],
        }


class LoadReport:
    """Counters plus aggregated findings for one load, transform or verify run."""

    def __init__(self) -> None:
        self._findings: Dict[str, Finding] = {}
        self.counters: Dict[str, int] = defaultdict(int)
        self.seconds: float = 0.0

    # -- findings -----------------------------------------------------------
    def add(self, code: str, severity: Severity, title: str,
            detail: str = "", sample: Optional[str] = None) -> None:
        """Record one occurrence of a finding, aggregating by ``code``."""
        f = self._findings.get(code)
        if f is None:
            f = Finding(code=code, severity=severity, title=title, detail=detail)
            self._findings[code] = f
        f.count += 1
        if sample and len(f.samples) < MAX_SAMPLES:
            f.samples.append(sample)

    # -- counters -----------------------------------------------------------
    def bump(self, key: str, amount: int = 1) -> None:
        self.counters[key] += amount

    # -- queries ------------------------------------------------------------
    @property
    def ok(self) -> bool:
        return not any(f.severity is Severity.ERROR for f in self._findings.values())

    def codes(self) -> List[str]:
        return [f.code for f in self.findings]

    @property
    def findings(self) -> List[Finding]:
        order = {Severity.ERROR: 0, Severity.SKIPPED: 1, Severity.INFO: 2}
        return sorted(self._findings.values(), key=lambda f: (order[f.severity], -f.count))

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "seconds": round(self.seconds, 6),
            "counters": dict(sorted(self.counters.items())),
            "findings": [f.to_dict() for f in self.findings],
        }
