"""Uniform verification reports.

Every theorem-backed check reduces to named measured quantities compared
against named bounds under one tolerance: the check passes iff
``measured[k] <= bound[k] + tolerance`` for every shared key.  ``passed``
is recomputed from those fields, never stored, so a serialized report is
self-certifying.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class VerificationReport:
    check: str
    measured: dict[str, float]
    bound: dict[str, float]
    tolerance: float = 0.0
    witnesses: list = field(default_factory=list)
    provenance: str = ""
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = set(self.measured) - set(self.bound)
        if missing:
            raise ValueError(f"measured keys without bounds: {sorted(missing)}")

    @property
    def passed(self) -> bool:
        return all(self.measured[k] <= self.bound[k] + self.tolerance
                   for k in self.measured)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "pass": self.passed,
            "measured": dict(self.measured),
            "bound": dict(self.bound),
            "tolerance": self.tolerance,
            "witnesses": list(self.witnesses),
            "provenance": self.provenance,
            "details": dict(self.details),
        }


def combine(check: str, parts: list[VerificationReport],
            provenance: str = "") -> VerificationReport:
    """Merge sub-checks into one report; keys are prefixed by part name."""
    measured, bound, witnesses, details = {}, {}, [], {}
    tol = 0.0
    for part in parts:
        for k, v in part.measured.items():
            measured[f"{part.check}.{k}"] = v
        for k, v in part.bound.items():
            bound[f"{part.check}.{k}"] = v + part.tolerance
        witnesses.extend({"check": part.check, **w} if isinstance(w, dict)
                         else {"check": part.check, "witness": w}
                         for w in part.witnesses)
        details[part.check] = part.details
    return VerificationReport(check, measured, bound, tol, witnesses,
                              provenance, details)
