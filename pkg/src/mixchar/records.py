"""Verification records shared by the tree checks and the suite runner."""

from __future__ import annotations

import math
from dataclasses import dataclass

STATUSES = ("pass", "fail", "report-only", "diagnostic")


@dataclass(frozen=True)
class VerificationRecord:
    id: str
    chain: str
    lhs: float
    rhs: float
    slack: float
    status: str
    anchor: str
    slack_kind: str = "absolute"
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "chain": self.chain,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "slack_kind": self.slack_kind,
            "status": self.status,
            "anchor": self.anchor,
            "note": self.note,
        }


def check(rid: str, chain: str, lhs: float, rhs: float, anchor: str,
          slack: float = 1e-6, slack_kind: str = "absolute", note: str = "") -> VerificationRecord:
    """Record ``lhs <= rhs`` with the given slack (relative slack scales with |rhs|)."""
    lhs, rhs = float(lhs), float(rhs)
    allow = slack * max(1.0, abs(rhs)) if slack_kind == "relative" else slack
    if math.isnan(lhs) or math.isnan(rhs):
        ok = False
    elif math.isinf(rhs) and rhs > 0:
        ok = True
    else:
        ok = lhs <= rhs + allow
    return VerificationRecord(rid, chain, lhs, rhs, slack, "pass" if ok else "fail", anchor,
                              slack_kind, note)


def report(rid: str, chain: str, value: float, anchor: str, note: str = "",
           rhs: float = math.nan) -> VerificationRecord:
    """A report-only measurement; never affects pass/fail."""
    return VerificationRecord(rid, chain, float(value), float(rhs), 0.0, "report-only",
                              anchor, "none", note)


def diagnostic(rid: str, chain: str, anchor: str, note: str) -> VerificationRecord:
    return VerificationRecord(rid, chain, math.nan, math.nan, 0.0, "diagnostic", anchor,
                              "none", note)
