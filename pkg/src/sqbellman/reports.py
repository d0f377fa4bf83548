"""Verification report record shared by every check in the package."""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np


@dataclass
class VerificationReport:
    """Outcome of one named check.

    ``worst_violation`` is signed: for a ``>= 0`` type check it is the smallest
    margin seen, so a negative value means the inequality failed by that much.
    """

    check_name: str
    worst_violation: float
    location: tuple = ()
    tolerance: float = 0.0
    samples: int = 0
    wall_time_ms: float = 0.0
    details: dict = field(default_factory=dict)
    passed: bool | None = None

    def __post_init__(self):
        self.worst_violation = float(self.worst_violation)
        self.location = tuple(float(v) for v in self.location)
        if self.passed is None:
            self.passed = bool(self.worst_violation >= -self.tolerance)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "name": self.check_name,
            "passed": bool(self.passed),
            "worst_violation": _finite_or_str(self.worst_violation),
            "location": list(self.location),
            "tolerance": self.tolerance,
            "samples": int(self.samples),
            "wall_time_ms": round(float(self.wall_time_ms), 3),
        }
        if self.details:
            out["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        return out

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (
            f"[{flag}] {self.check_name}: worst={self.worst_violation:.3e} "
            f"tol={self.tolerance:.1e} n={self.samples} at {self.location}"
        )


def _finite_or_str(x: float):
    return x if np.isfinite(x) else str(x)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return _finite_or_str(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    return v


def worst_of(margin: np.ndarray, coords: Sequence[np.ndarray]):
    """Minimum of ``margin`` and the coordinates where it is attained."""
    margin = np.asarray(margin)
    if margin.size == 0:
        return np.inf, ()
    k = int(np.argmin(margin))
    return float(margin.flat[k]), tuple(float(np.asarray(c).flat[k]) for c in coords)


@contextmanager
def stopwatch():
    """Yields a callable returning elapsed milliseconds."""
    t0 = time.perf_counter()
    yield lambda: 1e3 * (time.perf_counter() - t0)


def dump_reports(reports: Iterable[VerificationReport], path=None) -> str:
    text = json.dumps([r.to_dict() for r in reports], indent=2)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text
