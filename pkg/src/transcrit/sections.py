"""Axis-aligned entry and exit sets with membership and distance predicates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["Interval", "SectionSet", "MEMBERSHIP_TOL", "COORDS"]

# Inclusive slack on closed interval ends, scaled by max(1, |bound|).
MEMBERSHIP_TOL = 1e-14

COORDS = {
    "orig": ("x", "y", "eps", "h"),
    "K1": ("r1", "y1", "eps1", "h1"),
    "K2": ("x2", "y2", "r2", "h2"),
    "K3": ("r3", "y3", "eps3", "h3"),
}


@dataclass(frozen=True)
class Interval:
    """A possibly degenerate, possibly half-open interval."""

    lo: float = -math.inf
    hi: float = math.inf
    lo_open: bool = False
    hi_open: bool = False

    @classmethod
    def point(cls, v: float) -> "Interval":
        return cls(v, v)

    def contains(self, v: float, tol: float = MEMBERSHIP_TOL) -> bool:
        if self.lo_open:
            ok_lo = v > self.lo
        else:
            ok_lo = v >= self.lo - tol * max(1.0, abs(self.lo))
        if self.hi_open:
            ok_hi = v < self.hi
        else:
            ok_hi = v <= self.hi + tol * max(1.0, abs(self.hi))
        return bool(ok_lo and ok_hi)

    def distance(self, v: float) -> float:
        if v < self.lo:
            return self.lo - v
        if v > self.hi:
            return v - self.hi
        return 0.0

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def widened(self, frac: float) -> "Interval":
        """Grow the interval symmetrically so its width becomes (1+frac) times."""
        pad = 0.5 * frac * (self.hi - self.lo)
        return Interval(self.lo - pad, self.hi + pad, self.lo_open, self.hi_open)


_FREE = Interval()


@dataclass(frozen=True)
class SectionSet:
    """A named box in one chart (or in original coordinates).

    Parameters
    ----------
    name : str
        Label used in reports.
    chart : {"orig", "K1", "K2", "K3"}
        Coordinate system of the bounds.
    bounds : tuple of Interval
        One interval per coordinate, in the order given by ``COORDS[chart]``.

    Notes
    -----
    ``distance`` is the Euclidean distance from a point to the closure of the
    box; unbounded coordinates contribute nothing.
    """

    name: str
    chart: str
    bounds: tuple[Interval, ...]

    def __post_init__(self) -> None:
        if self.chart not in COORDS:
            raise ValueError(f"unknown chart {self.chart!r}")
        if len(self.bounds) != 4:
            raise ValueError("a section needs exactly four intervals")

    @classmethod
    def build(cls, name: str, chart: str, **intervals: Interval) -> "SectionSet":
        names = COORDS[chart]
        unknown = set(intervals) - set(names)
        if unknown:
            raise ValueError(f"{chart} has no coordinate(s) {sorted(unknown)}")
        return cls(name, chart, tuple(intervals.get(c, _FREE) for c in names))

    @property
    def coords(self) -> tuple[str, ...]:
        return COORDS[self.chart]

    def interval(self, coord: str) -> Interval:
        return self.bounds[self.coords.index(coord)]

    def contains(self, p: Sequence[float], tol: float = MEMBERSHIP_TOL) -> bool:
        return all(iv.contains(float(v), tol) for iv, v in zip(self.bounds, p))

    def violations(self, p: Sequence[float], tol: float = MEMBERSHIP_TOL) -> list[str]:
        """Names of the coordinates that fall outside their interval."""
        return [c for c, iv, v in zip(self.coords, self.bounds, p)
                if not iv.contains(float(v), tol)]

    def distance(self, p: Sequence[float]) -> float:
        return math.sqrt(sum(iv.distance(float(v)) ** 2
                             for iv, v in zip(self.bounds, p)))

    def lo_hi(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounds as float arrays (open ends are treated as closed)."""
        lo = np.array([iv.lo for iv in self.bounds], dtype=float)
        hi = np.array([iv.hi for iv in self.bounds], dtype=float)
        return lo, hi

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` points uniformly from the box (all intervals must be finite)."""
        lo, hi = self.lo_hi()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError(f"{self.name}: cannot sample an unbounded box")
        u = rng.random((n, 4))
        pts = lo + u * (hi - lo)
        for i, iv in enumerate(self.bounds):
            if iv.hi_open:
                pts[:, i] = np.minimum(pts[:, i], np.nextafter(iv.hi, -np.inf))
            if iv.lo_open:
                pts[:, i] = np.maximum(pts[:, i], np.nextafter(iv.lo, np.inf))
        return pts
