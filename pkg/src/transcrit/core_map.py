"""The Euler map of the transcritical normal form in original coordinates.

The map is

    P(x, y, eps, h) = (x + h (x**2 - y**2 + lam*eps), y + eps*h, eps, h),

the explicit Euler step of ``x' = x**2 - y**2 + lam*eps, y' = eps``.  This
module holds the map, the critical-manifold classifier, the entry and exit
segments at ``x = -rho`` / ``x = rho`` and the global transition maps that
send the entry segment to its closest approach of an exit segment.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .errors import CapReachedError, DivergenceError, ParameterError, StepSizeUnderflowError
from .params import Params
from .sections import Interval, SectionSet

__all__ = [
    "State",
    "BranchId",
    "Hit",
    "Trajectory",
    "euler_step",
    "iterate",
    "classify_branch",
    "section_delta",
    "default_half_width",
    "iteration_cap",
    "transit",
    "pi_a",
    "pi_e",
    "reference_flow",
    "DIVERGENCE_FACTOR",
    "PATIENCE",
]

log = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e3
PATIENCE = 8


class State(NamedTuple):
    """A point ``(x, y, eps, h)`` of the original phase space."""

    x: float
    y: float
    eps: float
    h: float


class BranchId(str, enum.Enum):
    S_a_minus = "S_a_minus"
    S_a_plus = "S_a_plus"
    S_r_minus = "S_r_minus"
    S_r_plus = "S_r_plus"
    off_manifold = "off_manifold"
    origin = "origin"


class Hit(NamedTuple):
    """Closest approach of a trajectory to a target section.

    ``confirmed`` is False when the patience rule never fired and the index is
    the global-minimum fallback at the cap.
    """

    index: int
    distance: float
    confirmed: bool


@dataclass(frozen=True)
class Trajectory:
    """Iterates of the Euler map.

    ``eps`` and ``h`` are invariant and stored once; ``xs[k], ys[k]`` is the
    state with step index ``start_index + k``.
    """

    xs: np.ndarray
    ys: np.ndarray
    eps: float
    h: float
    start_index: int = 0
    hit: Hit | None = None
    cap_reached: bool = False

    def __len__(self) -> int:
        return len(self.xs)

    def __getitem__(self, k: int) -> State:
        return State(float(self.xs[k]), float(self.ys[k]), self.eps, self.h)

    @property
    def states(self) -> list[State]:
        return [self[k] for k in range(len(self))]

    @property
    def last(self) -> State:
        return self[len(self) - 1]


def euler_step(s: State, p: Params) -> State:
    """One step of the Euler map; only ``p.lam`` is read from ``p``.

    Raises
    ------
    DivergenceError
        If the result is not finite (``step`` is 1, relative to ``s``).
    """
    x, y, eps, h = s
    x1 = x + h * (x * x - y * y + p.lam * eps)
    y1 = y + eps * h
    if not (math.isfinite(x1) and math.isfinite(y1)):
        raise DivergenceError(1, (x1, y1, eps, h))
    return State(x1, y1, eps, h)


def classify_branch(s: State, tol: float | None = None) -> BranchId:
    """Locate a point relative to the critical manifold ``x**2 = y**2``.

    The default tolerance is ``1e-12 * max(|x|, |y|, 1)``.
    """
    x, y = float(s[0]), float(s[1])
    if tol is None:
        tol = 1e-12 * max(abs(x), abs(y), 1.0)
    if abs(x) <= tol and abs(y) <= tol:
        return BranchId.origin
    if abs(abs(x) - abs(y)) > tol:
        return BranchId.off_manifold
    if abs(x - y) <= abs(x + y):
        # x = y
        return BranchId.S_a_minus if y < 0 else BranchId.S_r_plus
    # x = -y
    return BranchId.S_a_plus if y > 0 else BranchId.S_r_minus


def default_half_width(kind: str, p: Params) -> float:
    """Default half-width of the segment interval J.

    The entry and attracting-exit segments use ``rho*delta/4``.  The escape
    exit uses ``rho*delta**(1/3)``: the exit height grows like ``sqrt(eps)``,
    which leaves the narrower window for any practical eps.
    """
    if kind == "e_out":
        return p.rho * p.delta ** (1.0 / 3.0)
    return p.rho * p.delta / 4.0


def section_delta(kind: str, p: Params, half_width: float | None = None) -> SectionSet:
    """Entry or exit segment in original coordinates.

    Parameters
    ----------
    kind : {"in", "a_out", "e_out"}
        ``in`` sits at ``x=-rho`` centred on ``y=-rho``, ``a_out`` at ``x=-rho``
        centred on ``y=rho``, ``e_out`` at ``x=rho`` centred on ``y=0``.
    half_width : float, optional
        Half-width of the open interval J; see :func:`default_half_width`.
    """
    if half_width is None:
        half_width = default_half_width(kind, p)
    if not half_width > 0:
        raise ParameterError(f"half_width must be positive, got {half_width!r}")
    centre = {"in": (-p.rho, -p.rho), "a_out": (-p.rho, p.rho), "e_out": (p.rho, 0.0)}
    if kind not in centre:
        raise ValueError(f"unknown section kind {kind!r}")
    x0, y0 = centre[kind]
    return SectionSet.build(
        f"delta_{kind}", "orig",
        x=Interval.point(x0),
        y=Interval(y0 - half_width, y0 + half_width, lo_open=True, hi_open=True),
        eps=Interval.point(p.eps),
        h=Interval.point(p.h),
    )


def iteration_cap(p: Params) -> int:
    """Default hard cap ``ceil(16 rho / (h eps))``."""
    if p.eps <= 0:
        return 10**7
    return int(math.ceil(16.0 * p.rho / (p.h * p.eps)))


def _raise_status(status: int, last: int, xs, ys, s0: State, rho: float) -> None:
    if status == K.NONFINITE:
        raise DivergenceError(last, (float(xs[-1]), float(ys[-1]), s0.eps, s0.h))
    if status == K.BOUND:
        raise DivergenceError(last, (float(xs[-1]), float(ys[-1]), s0.eps, s0.h),
                              reason=f"|x| or |y| > {DIVERGENCE_FACTOR * rho:g}")


def iterate(s0: State, p: Params, n: int, stop: SectionSet | None = None, *,
            patience: int = PATIENCE, cap: int | None = None) -> Trajectory:
    """Iterate the Euler map from ``s0``.

    Parameters
    ----------
    n : int
        Number of steps (upper bound when ``stop`` is given).
    stop : SectionSet, optional
        Original-space target; the run ends at the argmin of the distance to
        it (first strict minimum followed by ``patience`` non-improving steps;
        the smallest index wins ties) and the trajectory is cut after the hit.
    cap : int, optional
        Hard cap, default :func:`iteration_cap`.  Asking for more steps runs
        ``cap`` steps and sets ``cap_reached``.

    Raises
    ------
    DivergenceError
        Non-finite iterate or ``|x|, |y| > 1e3 rho``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    s0 = State(*map(float, s0))
    if cap is None:
        cap = iteration_cap(p)
    steps = min(n, cap)
    bound = DIVERGENCE_FACTOR * p.rho
    if stop is None:
        lo = hi = np.zeros(2)
        mode = 0
    else:
        lo, hi = stop.lo_hi()
        lo, hi = lo[:2].copy(), hi[:2].copy()
        mode = 1
    traj, last, status, hit, dist, bracketed = K.euler_orbit(
        s0.x, s0.y, s0.eps, s0.h, p.lam, steps, bound, mode, lo, hi, patience, True)
    xs, ys = traj[:, 0].copy(), traj[:, 1].copy()
    _raise_status(status, last, xs, ys, s0, p.rho)
    cap_reached = n > cap and (mode == 0 or status == K.CAP)
    h_rec = None
    if mode == 1:
        confirmed = status == K.OK
        h_rec = Hit(int(hit), float(dist), confirmed)
        if confirmed:
            xs, ys = xs[: hit + 1], ys[: hit + 1]
    return Trajectory(xs, ys, s0.eps, s0.h, 0, h_rec, cap_reached)


def transit(y0: float, p: Params, target: SectionSet, *, patience: int = PATIENCE,
            cap: int | None = None) -> tuple[State, Hit]:
    """Closest approach to ``target`` of the orbit from ``(-rho, y0)``.

    Falls back to the global minimum when the cap is reached with a bracketed
    minimum; raises :class:`CapReachedError` if the distance was still
    decreasing at the cap.
    """
    if cap is None:
        cap = iteration_cap(p)
    lo, hi = target.lo_hi()
    x0 = -p.rho
    _, last, status, hit, dist, bracketed = K.euler_orbit(
        x0, float(y0), p.eps, p.h, p.lam, cap, DIVERGENCE_FACTOR * p.rho, 1,
        lo[:2].copy(), hi[:2].copy(), patience, False)
    if status in (K.NONFINITE, K.BOUND):
        # rerun with storage only to report the offending state
        tr, last, status, *_ = K.euler_orbit(
            x0, float(y0), p.eps, p.h, p.lam, last, DIVERGENCE_FACTOR * p.rho, 0,
            lo[:2].copy(), hi[:2].copy(), patience, True)
        _raise_status(K.BOUND if status == K.OK else status, last, tr[:, 0], tr[:, 1],
                      State(x0, y0, p.eps, p.h), p.rho)
    if status == K.CAP and not bracketed:
        raise CapReachedError(cap, f"distance to {target.name} still decreasing")
    if status == K.CAP:
        log.warning("cap %d reached; using global-minimum fallback", cap)
    tr, *_ = K.euler_orbit(x0, float(y0), p.eps, p.h, p.lam, hit,
                           DIVERGENCE_FACTOR * p.rho, 0, lo[:2], hi[:2], patience, False)
    s = State(float(tr[-1, 0]), float(tr[-1, 1]), p.eps, p.h)
    return s, Hit(int(hit), float(dist), status == K.OK)


def _check_entry(y0: float, p: Params, half_width: float | None) -> None:
    din = section_delta("in", p, half_width)
    if not din.contains((-p.rho, y0, p.eps, p.h)):
        raise ParameterError(f"(-rho, {y0!r}) is not in the entry segment")


def pi_a(y0: float, p: Params, *, half_width: float | None = None,
         out_half_width: float | None = None, patience: int = PATIENCE,
         cap: int | None = None) -> tuple[State, int]:
    """Transition from the entry segment to the attracting exit (``lam < 1``).

    Returns the iterate closest to ``section_delta("a_out")`` and its index.
    """
    p.require_theorem_regime("below")
    _check_entry(y0, p, half_width)
    s, hit = transit(y0, p, section_delta("a_out", p, out_half_width),
                     patience=patience, cap=cap)
    return s, hit.index


def pi_e(y0: float, p: Params, *, half_width: float | None = None,
         out_half_width: float | None = None, patience: int = PATIENCE,
         cap: int | None = None) -> tuple[State, int]:
    """Transition from the entry segment to the escape exit (``lam > 1``)."""
    p.require_theorem_regime("above")
    _check_entry(y0, p, half_width)
    s, hit = transit(y0, p, section_delta("e_out", p, out_half_width),
                     patience=patience, cap=cap)
    return s, hit.index


def reference_flow(s0: State, p: Params, T: float, tol: float = 1e-12,
                   method: str = "DOP853") -> State:
    """Solve ``x' = x**2 - y**2 + lam*eps, y' = eps`` up to fast time ``T``.

    Uses an embedded adaptive Runge-Kutta pair (scipy's DOP853, order 8 with
    error estimators of order 5 and 3) with ``rtol = atol = tol``.

    Raises
    ------
    StepSizeUnderflowError
        If the integrator could not reach ``T``.
    """
    from scipy.integrate import solve_ivp

    lam, eps = p.lam, float(s0[2])

    def rhs(t, z):
        return [z[0] * z[0] - z[1] * z[1] + lam * eps, eps]

    if T == 0:
        return State(*map(float, s0))
    sol = solve_ivp(rhs, (0.0, float(T)), [float(s0[0]), float(s0[1])], method=method,
                    rtol=tol, atol=tol)
    if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
        raise StepSizeUnderflowError(f"reference flow stopped at t={sol.t[-1]!r}: "
                                     f"{sol.message}")
    return State(float(sol.y[0, -1]), float(sol.y[1, -1]), eps, float(s0[3]))
