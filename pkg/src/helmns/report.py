"""Check reports and their JSON / CSV serialisation."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

REPORT_KEYS = ("name", "passed", "informational", "tolerance", "worst_sup", "worst_l2",
               "masked_total", "series_csv_path", "notes")


@dataclass
class CheckReport:
    name: str
    tolerance: float
    passed: Optional[bool] = None
    informational: bool = False
    applicable: bool = True
    residuals: list[tuple[float, float, float]] = field(default_factory=list)
    masked: list[int] = field(default_factory=list)
    notes: str = ""
    extras: dict[str, Any] = field(default_factory=dict)

    def add(self, t: float, sup: float, l2: float, masked: int = 0) -> None:
        self.residuals.append((float(t), float(sup), float(l2)))
        self.masked.append(int(masked))

    def note(self, text: str) -> None:
        self.notes = f"{self.notes}; {text}" if self.notes else text

    def finalize(self) -> "CheckReport":
        """Set ``passed`` from the recorded residuals (unless already decided)."""
        if self.passed is None:
            self.passed = all(sup <= self.tolerance for _, sup, _ in self.residuals)
        return self

    @property
    def worst_sup(self) -> float:
        return max((r[1] for r in self.residuals), default=0.0)

    @property
    def worst_l2(self) -> float:
        return max((r[2] for r in self.residuals), default=0.0)

    @property
    def masked_total(self) -> int:
        return int(sum(self.masked))

    def to_json(self, series_csv_path: Optional[str] = None) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "informational": self.informational,
            "tolerance": _num(self.tolerance),
            "worst_sup": _num(self.worst_sup),
            "worst_l2": _num(self.worst_l2),
            "masked_total": self.masked_total,
            "series_csv_path": series_csv_path,
            "notes": self.notes,
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "sup", "l2", "masked"])
            for (t, sup, l2), m in zip(self.residuals, self.masked):
                w.writerow([repr(t), repr(sup), repr(l2), m])


def _num(x: float):
    # JSON has no inf/nan
    if math.isfinite(x):
        return x
    return str(x)


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
