"""Deficit reports shared by every verification routine.

A :class:`DeficitReport` is a bag of named :class:`Deficit` entries. Each
entry summarizes one pointwise quantity sampled on a grid or lattice: its
supremum and where it occurs, its volume average, and how many samples
break the inequality the quantity is supposed to satisfy.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

SIGNIFICANT_DIGITS = 12

REPORT_KEYS = ("id", "sup", "sup_at", "mean", "violations", "tol", "min", "min_at")


def fmt(x: Any) -> Any:
    """Round floats (recursively) to 12 significant digits for stable output."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(f"{x:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(x, Mapping):
        return {str(k): fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [fmt(v) for v in x]
    return x


@dataclass(frozen=True)
class Deficit:
    """One named pointwise quantity and its summary statistics.

    ``sup_at``/``min_at`` are a radius, or ``(r, theta)`` on 2-D lattices.
    ``values`` keeps the pointwise samples for callers that want them; it is
    never serialized.
    """

    id: str
    sup: float
    sup_at: Any
    mean: float
    violations: int
    tol: float
    min: float = float("nan")
    min_at: Any = None
    values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {k: fmt(getattr(self, k)) for k in REPORT_KEYS}


@dataclass(frozen=True)
class DeficitReport:
    entries: tuple[Deficit, ...]
    tolerances: Mapping[str, float] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Deficit:
        for e in self.entries:
            if e.id == key:
                return e
        raise KeyError(key)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    @property
    def violations(self) -> int:
        return sum(e.violations for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "tolerances": fmt(dict(sorted(self.tolerances.items()))),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_rows(self) -> list[list[Any]]:
        rows = []
        for e in self.entries:
            d = e.to_dict()
            rows.append([json.dumps(d[k]) if isinstance(d[k], list) else d[k] for k in REPORT_KEYS])
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_KEYS)
        w.writerows(self.csv_rows())
        return buf.getvalue()


def summarize(
    id: str,
    values: np.ndarray,
    locations: np.ndarray | Iterable,
    mean: float,
    violations: int,
    tol: float,
) -> Deficit:
    """Build a :class:`Deficit` from sampled values and their locations."""
    values = np.asarray(values, dtype=float)
    locs = list(locations)
    flat = values.ravel()
    if flat.size == 0:
        return Deficit(id, float("nan"), None, float("nan"), 0, tol, values=values)
    imax = int(np.nanargmax(flat))
    imin = int(np.nanargmin(flat))
    return Deficit(
        id=id,
        sup=float(flat[imax]),
        sup_at=locs[imax],
        mean=float(mean),
        violations=int(violations),
        tol=float(tol),
        min=float(flat[imin]),
        min_at=locs[imin],
        values=values,
    )
