"""Verification reports: one entry per check, rendered as JSON or a table."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List

SCHEMA_VERSION = 1

#: entry statuses; "erratum" means the printed form disagrees in a way
#: recorded in the errata ledger
PASS, FAIL, ERRATUM, INFO = "pass", "fail", "erratum", "info"


@dataclass
class Report:
    name: str
    entries: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    def add(self, check: str, status: str, **details) -> Dict[str, Any]:
        entry = {"check": check, "status": status}
        entry.update(details)
        self.entries.append(entry)
        return entry

    def count(self, status: str) -> int:
        return sum(1 for e in self.entries if e["status"] == status)

    @property
    def passed(self) -> bool:
        """No failing entry (ledgered errata and info entries are allowed)."""
        return self.count(FAIL) == 0

    def failures(self) -> List[Dict[str, Any]]:
        return [e for e in self.entries if e["status"] == FAIL]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": SCHEMA_VERSION,
            "report": self.name,
            "passed": self.passed,
            "counts": {s: self.count(s) for s in (PASS, FAIL, ERRATUM, INFO)},
            "summary": self.summary,
            "entries": self.entries,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True, default=str)

    def to_text(self) -> str:
        width = max([len(e["check"]) for e in self.entries] + [10])
        lines = [f"== {self.name} =="]
        for e in self.entries:
            extra = {k: v for k, v in e.items() if k not in ("check", "status")}
            tail = "  " + "; ".join(f"{k}: {v}" for k, v in extra.items()) if extra else ""
            lines.append(f"{e['status'].upper():8s} {e['check']:<{width}}{tail}")
        counts = ", ".join(f"{s}={self.count(s)}" for s in (PASS, FAIL, ERRATUM, INFO))
        lines.append(f"-- {counts}; overall {'PASS' if self.passed else 'FAIL'}")
        for k, v in self.summary.items():
            lines.append(f"   {k}: {v}")
        return "\n".join(lines)
