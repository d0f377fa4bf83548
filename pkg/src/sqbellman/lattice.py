from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("axis needs at least one point")
        if self.n > 1 and not self.hi > self.lo:
            raise ValueError(f"empty axis [{self.lo}, {self.hi}]")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1) if self.n > 1 else 0.0

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """``"min,max,n"`` -> Axis."""
        lo, hi, n = text.split(",")
        return cls(float(lo), float(hi), int(n))

    def __str__(self):
        return f"[{self.lo:g},{self.hi:g},{self.n}]"


@dataclass(frozen=True)
class Lattice3:
    """Product lattice of (first coordinate, second coordinate, step a)."""

    first: Axis
    second: Axis
    step: Axis

    @property
    def size(self) -> int:
        return self.first.n * self.second.n * self.step.n

    def plane(self):
        """Meshgrid of the first two axes (indexing='ij')."""
        return np.meshgrid(self.first.points, self.second.points, indexing="ij")

    def slices(self) -> Iterator[tuple[float, np.ndarray, np.ndarray]]:
        """Iterate one step value at a time over the full plane."""
        X, Y = self.plane()
        for a in self.step.points:
            yield float(a), X, Y


DEFAULT_DAVIS_LATTICE = Lattice3(Axis(-3.0, 3.0, 121), Axis(0.0, 3.0, 121), Axis(-1.5, 1.5, 121))
