"""Verification report records shared by every checker."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckRecord:
    name: str
    lhs: float
    rhs: float
    tolerance: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "lhs": _num(self.lhs),
            "rhs": _num(self.rhs),
            "tolerance": _num(self.tolerance),
            "pass": bool(self.passed),
        }
        if self.note:
            d["note"] = self.note
        return d


@dataclass(frozen=True)
class VerificationReport:
    """A claim with its computed sides; ``passed`` holds iff every detail record passes."""

    claim: str
    lhs: float
    rhs: float
    tolerance: float
    passed: bool
    details: tuple = ()
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "details", tuple(self.details))
        object.__setattr__(self, "notes", tuple(self.notes))
        if self.details and self.passed != all(d.passed for d in self.details):
            raise ValueError("report pass flag disagrees with its checks")

    @classmethod
    def from_checks(cls, claim, details, lhs=None, rhs=None, tolerance=None, notes=()):
        """Summarize ``details``; by default lhs/rhs/tolerance come from the worst check."""
        details = tuple(details)
        if lhs is None or rhs is None or tolerance is None:
            worst = max(details, key=lambda d: (not d.passed, d.lhs - d.rhs))
            lhs = worst.lhs if lhs is None else lhs
            rhs = worst.rhs if rhs is None else rhs
            tolerance = worst.tolerance if tolerance is None else tolerance
        return cls(
            claim=claim,
            lhs=float(lhs),
            rhs=float(rhs),
            tolerance=float(tolerance),
            passed=all(d.passed for d in details),
            details=details,
            notes=tuple(notes),
        )

    def to_dict(self) -> dict:
        d = {
            "claim": self.claim,
            "lhs": _num(self.lhs),
            "rhs": _num(self.rhs),
            "tolerance": _num(self.tolerance),
            "pass": bool(self.passed),
            "details": [c.to_dict() for c in self.details],
        }
        if self.notes:
            d["notes"] = list(self.notes)
        return d

    def summary(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.claim}: lhs={self.lhs:.6g} rhs={self.rhs:.6g} tol={self.tolerance:.3g}"


def _num(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
