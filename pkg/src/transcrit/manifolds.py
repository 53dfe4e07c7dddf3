"""Slow-manifold graphs in the entry and exit charts, fixed points, spectra.

Along chart-K1 and chart-K3 orbits the quantity ``eps_i * h_i**2`` is
conserved (it equals ``eps * h**2``), so a graph ``y = l(eps_i, h_i)`` restricted
to one orbit family is a curve, and an invariant curve of an attracting
one-dimensional direction can be tabulated by following orbits: every node is
the image, after a whole number of steps, of a point on an initial segment
that spans one step.  That is how :func:`solve_l3` and :func:`refine_k1`
work; the invariance residual at the nodes is then only rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import _kernels as K
from .charts import K1Point, K3Point, step_k1, step_k3
from .errors import ConvergenceError
from .io import write_csv
from .params import Params

__all__ = [
    "GraphCoeffs",
    "EigenData",
    "TabulatedGraph",
    "graph_minus",
    "graph_plus",
    "l_minus",
    "l_plus",
    "invariance_residual_k1",
    "solve_l3",
    "refine_k1",
    "fixed_points_k1",
    "fixed_points_k3",
    "jacobian_fd",
]


@dataclass(frozen=True)
class GraphCoeffs:
    """Truncated expansion ``y1 = order0 + order1 * eps1``.

    ``residual_order`` records the powers ``(p, q)`` of the dropped tail
    ``O(eps1**p * h1**q)``.
    """

    order0: float
    order1: float
    residual_order: tuple[int, int] = (2, 1)

    def __call__(self, eps1, h1=None):
        return self.order0 + self.order1 * eps1


def graph_minus(lam: float) -> GraphCoeffs:
    return GraphCoeffs(-1.0, (1.0 - lam) / 2.0)


def graph_plus(lam: float) -> GraphCoeffs:
    return GraphCoeffs(1.0, (1.0 + lam) / 2.0)


def l_minus(eps1: float, h1: float, lam: float) -> float:
    """Attracting-branch graph ``-1 + (1 - lam)/2 * eps1`` (tail dropped)."""
    return graph_minus(lam)(eps1, h1)


def l_plus(eps1: float, h1: float, lam: float) -> float:
    """Attracting-branch graph ``1 + (1 + lam)/2 * eps1`` (tail dropped)."""
    return graph_plus(lam)(eps1, h1)


def invariance_residual_k1(graph: Callable, eps1: float, h1: float,
                           params: Params) -> float:
    """Defect of a K1 graph under one chart step.

    Places the point ``(r1=1, graph(eps1, h1), eps1, h1)``, steps it, and
    returns ``graph(eps1', h1') - y1'``.  ``r1`` does not enter the
    ``(y1, eps1, h1)`` update.
    """
    y = graph(eps1, h1)
    q = step_k1(K1Point(1.0, y, eps1, h1), params)
    return graph(q.eps1, q.h1) - q.y1


@dataclass(frozen=True)
class TabulatedGraph:
    """A graph tabulated on nodes ``(eps[i], h[i])`` with its residual."""

    eps: np.ndarray
    h: np.ndarray
    y: np.ndarray
    residual: np.ndarray

    def rows(self):
        return [(float(e), float(h), float(y), float(r))
                for e, h, y, r in zip(self.eps, self.h, self.y, self.residual)]

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, ("eps", "h", "y", "residual"), self.rows())


_NO_BOX = np.zeros(4)


def _run(chart: int, y0: float, e0: float, h0: float, lam: float, n: int,
         strict: bool = True) -> np.ndarray:
    z0 = np.array([1.0, y0, e0, h0])
    traj, last, status, _, _ = K.radial_orbit(chart, z0, lam, n, 1e12, 0, _NO_BOX,
                                              _NO_BOX, 0.0, 0, -1, 0.0)
    if status != K.OK:
        if strict:
            raise ConvergenceError(f"orbit failed with status {status} after {last} steps")
        return traj[:-1]
    return traj


class _OrbitTabulator:
    """Tabulate an invariant curve from orbits of a one-step initial segment.

    Parameters
    ----------
    chart : {1, 3}
        Chart whose map is followed.
    start_y : callable
        Slow coordinate on the initial segment as a function of eps.
    anchor : float
        The segment is ``[anchor, P(anchor))`` (eps increasing along orbits) or
        ``(P(anchor), anchor]`` (eps decreasing).
    """

    def __init__(self, chart: int, start_y: Callable[[float], float], anchor: float,
                 increasing: bool, lam: float, max_steps: int) -> None:
        self.chart = chart
        self.start_y = start_y
        self.anchor = anchor
        self.increasing = increasing
        self.lam = lam
        self.max_steps = max_steps

    def _end(self, es: float, c: float, n: int) -> tuple[float, float]:
        tr = _run(self.chart, self.start_y(es), es, math.sqrt(c / es), self.lam, n)
        return float(tr[-1, 2]), float(tr[-1, 1])

    def value(self, target: float, h: float) -> float:
        """Slow coordinate of the tabulated curve at ``(eps, h) = (target, h)``."""
        c = target * h * h
        E = self.anchor
        sgn = 1.0 if self.increasing else -1.0
        # count the steps from the anchor to the target level
        n, chunk = None, 1024
        while n is None:
            if chunk > self.max_steps:
                raise ConvergenceError(f"target eps={target!r} not reached within "
                                       f"{self.max_steps} steps")
            tr = _run(self.chart, self.start_y(E), E, math.sqrt(c / E), self.lam, chunk,
                      strict=False)
            past = np.nonzero(sgn * (tr[:, 2] - target) > 0)[0]
            if past.size:
                n = int(past[0]) - 1
            elif len(tr) < chunk + 1:
                raise ConvergenceError(f"orbit broke down before reaching eps={target!r}")
            else:
                chunk *= 4
        if n < 0:
            raise ValueError(f"target eps={target!r} lies beyond the initial segment")
        E1 = float(tr[1, 2])

        def g(es):
            return self._end(es, c, n)[0] - target

        g0 = g(E)
        if g0 == 0.0:
            return self._end(E, c, n)[1]
        lo, hi = E, E1
        for _ in range(8):
            if g0 * g(hi) < 0:
                break
            hi = hi + (hi - lo)
        else:
            raise ConvergenceError(f"could not bracket eps={target!r}")
        es = brentq(g, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=200)
        return self._end(es, c, n)[1]


def _tabulate(tab: _OrbitTabulator, step, point_cls, eps_grid, h, params, tol):
    eps_grid = np.asarray(eps_grid, dtype=float)
    hs = np.broadcast_to(np.asarray(h, dtype=float), eps_grid.shape).copy()
    ys = np.empty_like(eps_grid)
    res = np.empty_like(eps_grid)
    for i, (e, hh) in enumerate(zip(eps_grid, hs)):
        if e == 0.0:
            ys[i] = tab.start_y(0.0) if tab.chart == 1 else 0.0
            res[i] = 0.0
            continue
        ys[i] = tab.value(e, hh)
        q = step(point_cls(1.0, ys[i], e, hh), params)
        res[i] = tab.value(q[2], q[3]) - q[1]
    bad = np.abs(res) > tol
    if np.any(bad):
        i = int(np.argmax(np.abs(res)))
        raise ConvergenceError(f"invariance residual {res[i]!r} at eps={eps_grid[i]!r} "
                               f"exceeds {tol!r}")
    return TabulatedGraph(eps_grid, hs, ys, res)


def solve_l3(eps3_grid: Sequence[float], h3: float, params: Params, *,
             tol: float = 1e-10, max_steps: int = 10**7) -> TabulatedGraph:
    """Attracting slow-manifold graph in chart K3, tabulated at ``h3``.

    The graph is swept out by the forward orbits of the segment ``y3 = 0`` at
    an eps3-level just above the grid ceiling (one step of that segment lands
    above every grid node, so all nodes are at least one step in).  The
    ``eps3 = 0`` row is the invariant line ``y3 = 0``.

    Raises
    ------
    ConvergenceError
        If a node is not reached within ``max_steps`` or the residual at a
        node exceeds ``tol``.
    """
    grid = np.asarray(eps3_grid, dtype=float)
    if grid.size == 0 or np.any(grid < 0):
        raise ValueError("eps3 grid must be non-empty and non-negative")
    top = float(grid.max())
    if top == 0.0:
        return TabulatedGraph(grid, np.full_like(grid, h3), np.zeros_like(grid),
                              np.zeros_like(grid))
    grow = 1.0 + h3 * (1.0 + abs(params.lam) * top)
    anchor = top * grow * grow * 1.001
    tab = _OrbitTabulator(3, lambda e: 0.0, anchor, False, params.lam, max_steps)
    return _tabulate(tab, step_k3, K3Point, grid, h3, params, tol)


def refine_k1(branch: str, eps1_grid: Sequence[float], h1: float, params: Params, *,
              tol: float = 1e-10, max_steps: int = 10**7) -> TabulatedGraph:
    """Tighten a K1 graph by following orbits from its truncated expansion.

    ``branch="minus"`` starts on the expansion at half the smallest grid eps1
    (eps1 grows along that graph); ``"plus"`` starts at 1.5 times the largest
    (eps1 shrinks).  The slow direction attracts forward in both cases, so the
    expansion error at the start decays by ``1 - 2 h1`` per step.
    """
    grid = np.asarray(eps1_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("eps1 grid must be non-empty and positive")
    if branch == "minus":
        g = graph_minus(params.lam)
        tab = _OrbitTabulator(1, lambda e: g(e), 0.5 * float(grid.min()), True,
                              params.lam, max_steps)
    elif branch == "plus":
        g = graph_plus(params.lam)
        tab = _OrbitTabulator(1, lambda e: g(e), 1.5 * float(grid.max()), False,
                              params.lam, max_steps)
    else:
        raise ValueError(f"branch must be 'minus' or 'plus', got {branch!r}")
    return _tabulate(tab, step_k1, K1Point, grid, h1, params, tol)


@dataclass(frozen=True)
class EigenData:
    """A fixed point with its multipliers.

    ``eigenvalues`` pairs each closed-form multiplier with the coordinate
    direction it belongs to.
    """

    name: str
    chart: str
    location: tuple[float, float, float, float]
    eigenvalues: tuple[tuple[float, str], ...]


def fixed_points_k1(h1: float) -> list[EigenData]:
    """``v_a1^-``, ``v_a1^+`` (``y1 = -1, +1``) and ``w_in`` (``y1 = 0``) in K1."""
    one = 1.0
    va = ((one, "r1"), (1.0 - 2.0 * h1, "y1"), (one, "eps1"), (one, "h1"))
    w = ((1.0 - 2.0 * h1, "h1"), (1.0 - h1, "r1"), ((1.0 - h1) ** -1, "y1"),
         ((1.0 - h1) ** -2, "eps1"))
    return [
        EigenData("v_a1_minus", "K1", (0.0, -1.0, 0.0, h1), va),
        EigenData("v_a1_plus", "K1", (0.0, 1.0, 0.0, h1), va),
        EigenData("w_in", "K1", (0.0, 0.0, 0.0, h1), w),
    ]


def fixed_points_k3(h3: float) -> list[EigenData]:
    """``v_r3^-``, ``v_r3^+`` (``y3 = -1, +1``) and ``w_out`` (``y3 = 0``) in K3."""
    one = 1.0
    vr = ((one, "r3"), (1.0 + 2.0 * h3, "y3"), (one, "eps3"), (one, "h3"))
    w = (((1.0 + h3) ** -2, "eps3"), ((1.0 + h3) ** -1, "y3"), (1.0 + h3, "r3"),
         (1.0 + 2.0 * h3, "h3"))
    return [
        EigenData("v_r3_minus", "K3", (0.0, -1.0, 0.0, h3), vr),
        EigenData("v_r3_plus", "K3", (0.0, 1.0, 0.0, h3), vr),
        EigenData("w_out", "K3", (0.0, 0.0, 0.0, h3), w),
    ]


def jacobian_fd(chart: str, z: Sequence[float], params: Params,
                step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the K1 or K3 one-step map at ``z``."""
    f = {"K1": (step_k1, K1Point), "K3": (step_k3, K3Point)}[chart]
    fn, cls = f
    z = np.asarray(z, dtype=float)
    J = np.empty((4, 4))
    for j in range(4):
        dz = np.zeros(4)
        dz[j] = step
        J[:, j] = (np.array(fn(cls(*(z + dz)), params))
                   - np.array(fn(cls(*(z - dz)), params))) / (2.0 * step)
    return J
