"""Verification reports: per-identity residual records and their serialization."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

__all__ = ["Record", "VerificationReport"]


@dataclass(frozen=True)
class Record:
    identity: str
    anchor: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.residual) and self.residual <= self.tol

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "anchor": self.anchor,
            "residual": float(self.residual),
            "tol": float(self.tol),
            "pass": self.passed,
        }


@dataclass
class VerificationReport:
    """Ordered collection of records plus run metadata.

    `diagnostics` holds comparisons that are logged but never gate the
    verdict; `scale_ledger` holds documented constant factors.
    """

    fixture: str | None = None
    seed: int | None = None
    records: list[Record] = field(default_factory=list)
    scale_ledger: dict[str, float] = field(default_factory=dict)
    diagnostics: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(r.passed for r in self.records)

    def add(self, identity: str, anchor: str, residual: float, tol: float) -> Record:
        rec = Record(identity, anchor, float(residual), float(tol))
        self.records.append(rec)
        return rec

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.records.extend(other.records)
        self.scale_ledger.update(other.scale_ledger)
        self.diagnostics.update(other.diagnostics)
        self.notes.extend(n for n in other.notes if n not in self.notes)
        return self

    def record(self, identity: str) -> Record:
        for r in self.records:
            if r.identity == identity:
                return r
        raise KeyError(identity)

    def __contains__(self, identity: str) -> bool:
        return any(r.identity == identity for r in self.records)

    def to_dict(self) -> dict:
        return {
            "fixture": self.fixture,
            "seed": self.seed,
            "overall": self.overall,
            "records": [r.to_dict() for r in self.records],
            "scale_ledger": {k: float(v) for k, v in self.scale_ledger.items()},
            "diagnostics": {k: float(v) for k, v in self.diagnostics.items()},
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VerificationReport":
        rep = cls(fixture=data.get("fixture"), seed=data.get("seed"))
        for r in data.get("records", []):
            rep.add(r["identity"], r["anchor"], r["residual"], r["tol"])
        rep.scale_ledger.update(data.get("scale_ledger", {}))
        rep.diagnostics.update(data.get("diagnostics", {}))
        rep.notes.extend(data.get("notes", []))
        return rep

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        return cls.from_dict(json.loads(text))

    def to_text(self) -> str:
        width = max([len(r.identity) for r in self.records] + [8])
        lines = [f"fixture: {self.fixture}  seed: {self.seed}"]
        for r in self.records:
            flag = "PASS" if r.passed else "FAIL"
            lines.append(f"{flag}  {r.identity:<{width}}  residual={r.residual:.3e}  tol={r.tol:.1e}")
        for k, v in self.scale_ledger.items():
            lines.append(f"scale   {k} = {v!r}")
        for k, v in self.diagnostics.items():
            lines.append(f"diag    {k} = {v:.3e}")
        lines.extend(f"note    {n}" for n in self.notes)
        lines.append(f"overall: {'PASS' if self.overall else 'FAIL'}")
        return "\n".join(lines) + "\n"
