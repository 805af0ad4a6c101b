"""Check records and reports.

Every check carries a status class. PROVED and NUMERIC are the two
zero-class outcomes of the symbolic tiers, ATTESTED marks a consumed manifest
hypothesis, SKIPPED a law that could not be exercised, INFO an exploratory
figure that never affects the outcome.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable

from .symbolic import VerdictKind, ZeroVerdict


class Status(str, enum.Enum):
    PROVED = "PROVED"
    NUMERIC = "NUMERIC"
    ATTESTED = "ATTESTED"
    SKIPPED = "SKIPPED"
    INFO = "INFO"
    FAILED = "FAILED"
    ERROR = "ERROR"


PASSING = {Status.PROVED, Status.NUMERIC, Status.ATTESTED}
BLOCKING = {Status.FAILED, Status.ERROR}


@dataclass
class Check:
    id: str
    anchor: str
    status: Status
    detail: dict = field(default_factory=dict)
    attestations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status not in BLOCKING

    def to_json(self) -> dict:
        out = {"id": self.id, "anchor": self.anchor, "status": self.status.value}
        if self.detail:
            out["detail"] = self.detail
        if self.attestations:
            out["attestations"] = list(self.attestations)
        return out


def verdict_check(id: str, anchor: str, verdict: ZeroVerdict, **detail) -> Check:
    status = {VerdictKind.EXACT_ZERO: Status.PROVED,
              VerdictKind.NUMERIC_ZERO: Status.NUMERIC,
              VerdictKind.NONZERO: Status.FAILED}[verdict.kind]
    return Check(id, anchor, status, {**verdict.to_json(), **detail})


def exact_check(id: str, anchor: str, ok: bool, **detail) -> Check:
    return Check(id, anchor, Status.PROVED if ok else Status.FAILED, detail)


def sampled_check(id: str, anchor: str, ok: bool, **detail) -> Check:
    return Check(id, anchor, Status.NUMERIC if ok else Status.FAILED, detail)


class Report:
    """Ordered collection of checks plus named artifacts (serialised results)."""

    def __init__(self, checks: Iterable[Check] = ()):
        self.checks: list[Check] = list(checks)
        self.artifacts: dict = {}
        self.timings: dict[str, float] = {}

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "Report", prefix: str = "") -> "Report":
        for c in other.checks:
            self.checks.append(Check(prefix + c.id, c.anchor, c.status, c.detail, c.attestations))
        for k, v in other.artifacts.items():
            self.artifacts[prefix + k] = v
        for k, v in other.timings.items():
            self.timings[prefix + k] = v
        return self

    def skip(self, id: str, anchor: str, reason: str, attestations: tuple[str, ...] = ()) -> Check:
        return self.add(Check(id, anchor, Status.SKIPPED, {"reason": reason}, attestations))

    def error(self, id: str, anchor: str, exc: BaseException) -> Check:
        return self.add(Check(id, anchor, Status.ERROR, {"error": f"{type(exc).__name__}: {exc}"}))

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def status(self) -> str:
        if not self.checks:
            return "VACUOUS"
        return "PASS" if self.passed else "FAIL"

    def get(self, id: str) -> Check:
        for c in self.checks:
            if c.id == id:
                return c
        raise KeyError(id)

    def find(self, suffix: str) -> list[Check]:
        return [c for c in self.checks if c.id.endswith(suffix)]

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def ledger(self) -> list[dict]:
        """Attestations consumed by checks that did not fail."""
        out = []
        for c in self.checks:
            if c.ok:
                for a in c.attestations:
                    out.append({"check": c.id, "attestation": a})
        return out

    def fingerprint(self) -> dict[str, str]:
        return {c.id: c.status.value for c in self.checks}

    def to_json(self, include_timing: bool = False) -> dict:
        out = {
            "version": 1,
            "status": self.status,
            "checks": [c.to_json() for c in self.checks],
            "attestation_ledger": self.ledger(),
            "artifacts": self.artifacts,
        }
        if include_timing:
            out["timings"] = {k: round(v, 4) for k, v in self.timings.items()}
        return out

    def dumps(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_json(include_timing), indent=2, sort_keys=False)

    def to_text(self, include_timing: bool = False) -> str:
        lines = []
        width = max((len(c.id) for c in self.checks), default=10)
        for c in self.checks:
            extra = ""
            if c.status == Status.FAILED and "witness" in c.detail:
                extra = f"  witness={c.detail['witness']} value={c.detail.get('value')}"
            elif c.status in (Status.FAILED, Status.ERROR, Status.SKIPPED):
                reason = c.detail.get("reason") or c.detail.get("error") or c.detail.get("message")
                extra = f"  {reason}" if reason else ""
            elif c.status == Status.INFO:
                extra = "  " + json.dumps(c.detail, sort_keys=True)
            lines.append(f"{c.status.value:<9} {c.id:<{width}}  [{c.anchor}]{extra}")
        ledger = self.ledger()
        if ledger:
            lines.append("attestations consumed:")
            lines.extend(f"  {e['check']}: {e['attestation']}" for e in ledger)
        if include_timing and self.timings:
            lines.append("timings (s):")
            lines.extend(f"  {k}: {v:.3f}" for k, v in self.timings.items())
        lines.append(f"status: {self.status}")
        return "\n".join(lines)
