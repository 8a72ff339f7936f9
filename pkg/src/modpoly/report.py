"""Report records for verified inequalities and audited constants."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List

import gmpy2
from gmpy2 import mpfr


@dataclass
class BoundReport:
    """One verified instance of an inequality lhs <= rhs.

    ``margin`` is rhs - lhs; the check passes when margin >= -tolerance
    with tolerance = 2^(-P/4) * max(1, |lhs|, |rhs|).
    """

    name: str
    N: int
    lhs: float
    rhs: float
    margin: float
    passed: bool
    context: Dict = field(default_factory=dict)

    @classmethod
    def from_sides(cls, name: str, N: int, lhs, rhs, precision_bits: int,
                   context: Dict | None = None, extra_ok: bool = True) -> "BoundReport":
        """Build a report for the claim lhs <= rhs evaluated at precision_bits."""
        with gmpy2.context(precision=precision_bits + 32):
            l = mpfr(lhs)
            r = mpfr(rhs)
            margin = r - l
            scale = max(mpfr(1), abs(l), abs(r))
            tol = mpfr(2) ** -(precision_bits // 4) * scale
            ok = bool(margin >= -tol) and bool(extra_ok)
        return cls(name, N, float(l), float(r), float(margin), ok, dict(context or {}))

    def to_dict(self) -> Dict:
        d = {"name": self.name, "N": self.N, "lhs": self.lhs, "rhs": self.rhs,
             "margin": self.margin, "pass": self.passed}
        if self.context:
            d["context"] = self.context
        return d


@dataclass
class ConstantAudit:
    """A paper constant re-derived from scratch and checked for safe rounding."""

    name: str
    paper_value: float
    recomputed: float
    direction: str  # 'upper': recomputed <= paper_value; 'lower': recomputed >= paper_value
    passed: bool

    def to_dict(self) -> Dict:
        return {"name": self.name, "paper_value": self.paper_value,
                "recomputed": self.recomputed, "direction": self.direction,
                "pass": self.passed}


def sort_reports(reports: Iterable[BoundReport]) -> List[BoundReport]:
    return sorted(reports, key=lambda r: (r.name, r.N))


def write_jsonl(reports: Iterable[BoundReport], path: str) -> None:
    """One JSON object per line, sorted by (name, N); byte-stable."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in sort_reports(reports):
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def write_csv(reports: Iterable[BoundReport], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "N", "lhs", "rhs", "margin", "pass"])
        for r in sort_reports(reports):
            w.writerow([r.name, r.N, repr(r.lhs), repr(r.rhs), repr(r.margin), r.passed])
