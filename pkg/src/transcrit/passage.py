"""Entry/exit sets of the blow-up charts and the chart-level transition maps.

Chart K1 carries orbits from the entry segment towards the scaling region
(``pi_1_minus``) and from the scaling region back out along the attracting
branch (``pi_1_plus``); chart K2 carries the passage near the origin
(``pi_2``); chart K3 carries the escape (``pi_3``).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels as K
from .charts import (ChartPoint, K1Point, K2Point, K3Point, domain_boxes, k12, k21, k23)
from .errors import CapReachedError, InvariantBreachError, ParameterError
from .params import Params
from .sections import MEMBERSHIP_TOL, Interval, SectionSet

__all__ = [
    "BetaSet",
    "betas",
    "SectionCatalog",
    "build_sections",
    "sigma2a_out",
    "sigma2e_out",
    "PassageReport",
    "chart_cap",
    "transition_bound",
    "pi_1_minus",
    "pi_1_plus",
    "pi_2",
    "pi_3",
    "LemmaVerdict",
    "measure_lemma_monotonicity",
    "ContractionResult",
    "contraction_sweep",
    "sample_sigma2_in",
    "check_containments",
    "calibrate_omega",
    "PATIENCE",
]

log = logging.getLogger(__name__)

PATIENCE = 8
_BOUND = 1e12


@dataclass(frozen=True)
class BetaSet:
    """Widths of the slow-coordinate windows of the entry and exit sets."""

    beta1: float
    beta1_hat: float
    beta2: float
    beta2_hat: float
    beta2_plus: float
    beta2_plus_hat: float
    beta1_plus: float
    beta1_plus_hat: float


def betas(p: Params) -> BetaSet:
    lam, d = p.lam, p.delta
    inside = 0.0 < lam < 1.0
    return BetaSet(
        beta1=lam * d / 16.0 if inside else (2.0 * lam - 1.0) * d / 16.0,
        beta1_hat=abs(lam - 1.0) * d,
        beta2=lam * d / 8.0 if inside else (2.0 * lam - 1.0) * d / 4.0,
        beta2_hat=abs(lam - 1.0) * d,
        beta2_plus=abs(lam + 1.0) * d / 2.0,
        beta2_plus_hat=(abs(lam) + 1.0) * d / 2.0,
        beta1_plus=3.0 * abs(lam + 1.0) * d / 4.0,
        beta1_plus_hat=3.0 * (abs(lam) + 1.0) * d / 4.0,
    )


def _d2_ranges(p: Params) -> tuple[Interval, Interval]:
    D2 = domain_boxes(p).D2
    return D2.interval("r2"), D2.interval("h2")


def sigma2a_out(p: Params, h2: float, b: BetaSet | None = None) -> SectionSet:
    """Attracting K2 exit: ``|x2 + delta**-0.5| <= h2/2`` and
    ``delta**-0.5 (1 - b2+^) <= y2 <= delta**-0.5 (1 + b2+)``."""
    b = b or betas(p)
    s = p.delta ** -0.5
    r2, h2r = _d2_ranges(p)
    return SectionSet.build("sigma2a_out", "K2",
                            x2=Interval(-s - h2 / 2.0, -s + h2 / 2.0),
                            y2=Interval(s * (1.0 - b.beta2_plus_hat),
                                        s * (1.0 + b.beta2_plus)),
                            r2=r2, h2=h2r)


def sigma2e_out(p: Params, h2: float, omega: float | None = None) -> SectionSet:
    """Escape K2 exit: ``delta**-0.5 <= x2 <= delta**-0.5 + h2 (lam + 1/delta)``
    and ``0 <= y2 < omega delta**(-1/6)``."""
    if omega is None:
        omega = p.omega
    if omega is None:
        raise ParameterError(f"no exit-window constant omega for lambda={p.lam!r}; "
                             "set omega or calibrate it")
    s = p.delta ** -0.5
    r2, h2r = _d2_ranges(p)
    return SectionSet.build("sigma2e_out", "K2",
                            x2=Interval(s, s + h2 * (p.lam + 1.0 / p.delta)),
                            y2=Interval(0.0, omega * p.delta ** (-1.0 / 6.0), hi_open=True),
                            r2=r2, h2=h2r)


@dataclass(frozen=True)
class SectionCatalog:
    """All named entry/exit sets for one parameter set.

    The K2 exit sets depend on ``h2``; the catalog instantiates them at the
    value ``h2 = sqrt(eps) h`` of the given parameters.
    """

    params: Params
    beta: BetaSet
    sets: dict[str, SectionSet] = field(default_factory=dict)

    def __getitem__(self, name: str) -> SectionSet:
        return self.sets[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.sets)

    def __len__(self) -> int:
        return len(self.sets)


def build_sections(p: Params) -> SectionCatalog:
    """Instantiate the eleven entry/exit sets.

    ``sigma1p_in`` is the bounding box of the k21-image of ``sigma2a_out``
    over the whole of ``D2``, widened by 10% per coordinate.
    """
    if p.hypothesis_violations():
        p.require_theorem_regime("below" if p.lam < 1 else "above" if p.lam > 1 else None)
    rho, d, nu = p.rho, p.delta, p.nu
    b = betas(p)
    s = d ** -0.5
    pt = Interval.point
    r2, h2r = _d2_ranges(p)
    sets: dict[str, SectionSet] = {}
    sets["sigma1m_in"] = SectionSet.build("sigma1m_in", "K1", r1=pt(rho), eps1=pt(d / 4),
                                          h1=pt(nu))
    sets["sigma1m_out"] = SectionSet.build(
        "sigma1m_out", "K1", r1=Interval(rho / 2, rho / 2 * (1 + nu)),
        eps1=Interval(d * (1 - 2 * nu), d), h1=Interval(nu / 2, nu / 2 * (1 + nu)))
    sets["R1"] = SectionSet.build("R1", "K1", r1=pt(rho),
                                  y1=Interval(-1 - b.beta1, -1 + b.beta1_hat),
                                  eps1=pt(d / 4), h1=pt(nu))
    sets["sigma2_in"] = SectionSet.build(
        "sigma2_in", "K2", x2=Interval(-(d * (1 - 2 * nu)) ** -0.5, -s),
        y2=Interval(s * (-1 - b.beta2), s * (-1 + b.beta2_hat)), r2=r2, h2=h2r)
    h2_here = math.sqrt(p.eps) * p.h
    sets["sigma2a_out"] = sigma2a_out(p, h2_here, b)
    if p.lam > 1 and p.omega is not None:
        sets["sigma2e_out"] = sigma2e_out(p, h2_here)
    else:
        sets["sigma2e_out"] = SectionSet.build(
            "sigma2e_out", "K2", x2=Interval(s, s + h2_here * (p.lam + 1 / d)),
            y2=Interval(0.0, math.inf), r2=r2, h2=h2r)
    # k21-image of sigma2a_out: eps1 = x2**-2, r1 = |x2| r2, h1 = |x2| h2
    hmax = h2r.hi
    xa, xb = s - hmax / 2, s + hmax / 2
    sets["sigma1p_in"] = SectionSet.build(
        "sigma1p_in", "K1",
        r1=Interval(xa * r2.lo, xb * r2.hi).widened(0.1),
        eps1=Interval(xb ** -2.0, xa ** -2.0).widened(0.1),
        h1=Interval(xa * h2r.lo, xb * h2r.hi).widened(0.1))
    p_in = sets["sigma1p_in"]
    sets["R2"] = SectionSet.build("R2", "K1", r1=p_in.interval("r1"),
                                  y1=Interval(1 - b.beta1_plus_hat, 1 + b.beta1_plus),
                                  eps1=p_in.interval("eps1"), h1=p_in.interval("h1"))
    sets["sigma1p_out"] = SectionSet.build("sigma1p_out", "K1", r1=pt(rho),
                                           y1=Interval(0.0, math.inf, lo_open=True),
                                           eps1=pt(d / 4), h1=pt(nu))
    sets["sigma3_in"] = SectionSet.build("sigma3_in", "K3", r3=Interval(0.0, rho),
                                         eps3=Interval(1.0 / (1.0 / d + 4 * nu / d), d),
                                         h3=Interval(0.0, nu))
    sets["sigma3_out"] = SectionSet.build("sigma3_out", "K3", r3=pt(rho),
                                          y3=Interval(0.0, math.inf, lo_open=True),
                                          eps3=pt(d / 4), h3=pt(nu))
    return SectionCatalog(p, b, sets)


def transition_bound(p: Params) -> float:
    """Lower bound ``1 / (17 gamma nu delta)`` on the K1 entry passage length."""
    return 1.0 / (17.0 * p.gamma * p.nu * p.delta)


def chart_cap(p: Params) -> int:
    """Step cap for chart passages, ``ceil(64 / (nu delta))``.

    This is the original-space cap ``16 rho / (h eps)`` written in chart
    constants for ``eps = rho**2 delta / 4``.
    """
    return int(math.ceil(64.0 / (p.nu * p.delta)))


@dataclass
class PassageReport:
    """Outcome of one chart passage.

    ``entered`` is False when a first-entry passage missed its target; the
    report then describes the closest point reached (a counterexample).
    ``width_in``/``width_out`` are zero for a single orbit.
    """

    name: str
    entry: ChartPoint
    exit: ChartPoint
    steps: int
    bound: float = math.nan
    width_in: float = 0.0
    width_out: float = 0.0
    entered: bool = True
    distance: float = 0.0
    flags: dict[str, bool] = field(default_factory=dict)
    detail: str = ""
    path: np.ndarray | None = field(default=None, repr=False)

    HEADER = ("name", "chart", "entry_0", "entry_1", "entry_2", "entry_3", "exit_0",
              "exit_1", "exit_2", "exit_3", "steps", "bound", "width_in", "width_out",
              "entered", "distance", "flags")

    def row(self) -> tuple:
        chart = type(self.entry).__name__[:2]
        flags = ";".join(f"{k}={int(v)}" for k, v in sorted(self.flags.items()))
        return (self.name, chart, *map(float, self.entry), *map(float, self.exit),
                self.steps, self.bound, self.width_in, self.width_out, self.entered,
                self.distance, flags)


def _radial(chart: int, z0, p: Params, mode: int, box: SectionSet, cap: int,
            patience: int = PATIENCE, abort_idx: int = -1, abort_below: float = 0.0):
    lo, hi = box.lo_hi()
    finite = np.abs(np.r_[lo, hi])
    tol = MEMBERSHIP_TOL * max(1.0, float(finite[np.isfinite(finite)].max()))
    return K.radial_orbit(chart, np.asarray(z0, dtype=float), p.lam, cap, _BOUND, mode,
                          lo, hi, tol, patience, abort_idx, abort_below)


def _status_error(status: int, last: int, name: str, cap: int) -> None:
    if status == K.CAP:
        raise CapReachedError(cap, name)
    if status == K.DENOM:
        raise InvariantBreachError(f"{name}: desingularization denominator > 0", last)
    if status in (K.NONFINITE, K.BOUND):
        raise InvariantBreachError(f"{name}: finite orbit", last)


def _strict(arr: np.ndarray, increasing: bool) -> int:
    """Index of the first step breaking strict monotonicity, or -1."""
    d = np.diff(arr)
    bad = np.nonzero(d <= 0 if increasing else d >= 0)[0]
    return int(bad[0]) + 1 if bad.size else -1


def pi_1_minus(p0: K1Point, p: Params, *, check_entry: bool = True,
               cap: int | None = None) -> PassageReport:
    """K1 passage from ``R1`` to the first entry into ``sigma1m_out``.

    Along the way eps1 must increase strictly, r1 and h1 decrease strictly,
    and ``F1 = 1 - y1**2 + lam eps1`` stay positive.

    Raises
    ------
    InvariantBreachError
        If any of these fails.
    CapReachedError
        If the target was not reached within the cap.
    """
    cat = build_sections(p)
    if check_entry and not cat["R1"].contains(p0):
        raise ParameterError(f"{p0} is not in R1 ({cat['R1'].violations(p0)})")
    cap = cap or chart_cap(p)
    out = cat["sigma1m_out"]
    r_lo = out.interval("r1").lo
    traj, last, status, hit, _ = _radial(1, p0, p, 1, out, cap, abort_idx=0,
                                         abort_below=r_lo * (1 - 1e-12))
    if status == K.PASSED:
        raise InvariantBreachError("pi_1_minus: orbit skipped sigma1m_out", last)
    _status_error(status, last, "pi_1_minus", cap)
    for col, inc, what in ((2, True, "eps1 increasing"), (0, False, "r1 decreasing"),
                           (3, False, "h1 decreasing")):
        k = _strict(traj[:, col], inc)
        if k >= 0:
            raise InvariantBreachError(f"pi_1_minus: {what}", k)
    F = 1.0 - traj[:-1, 1] ** 2 + p.lam * traj[:-1, 2]
    if np.any(F <= 0):
        raise InvariantBreachError("pi_1_minus: F1 > 0", int(np.argmax(F <= 0)))
    return PassageReport("pi_1_minus", K1Point(*map(float, p0)),
                         K1Point(*map(float, traj[-1])), int(last),
                         bound=transition_bound(p), path=traj)


def pi_1_plus(p0: K1Point, p: Params, *, check_entry: bool = True,
              cap: int | None = None, patience: int = PATIENCE) -> PassageReport:
    """K1 passage from ``R2`` to the point closest to ``sigma1p_out``.

    The flag ``eps1_decreasing`` records whether eps1 fell at every step.
    It holds on the attracting graph ``l+``; entries below ``y1 = (1 +
    lam eps1)**0.5`` first move up in eps1 before joining the graph.
    """
    cat = build_sections(p)
    if check_entry and not cat["R2"].contains(p0):
        raise ParameterError(f"{p0} is not in R2 ({cat['R2'].violations(p0)})")
    cap = cap or chart_cap(p)
    traj, last, status, hit, dist = _radial(1, p0, p, 2, cat["sigma1p_out"], cap, patience)
    _status_error(status, last, "pi_1_plus", cap)
    path = traj[: hit + 1]
    flags = {"eps1_decreasing": _strict(path[:, 2], False) < 0}
    return PassageReport("pi_1_plus", K1Point(*map(float, p0)),
                         K1Point(*map(float, path[-1])), int(hit), distance=float(dist),
                         flags=flags, path=path)


def pi_3(p0: K3Point, p: Params, *, cap: int | None = None,
         patience: int = PATIENCE) -> PassageReport:
    """K3 passage to the point closest to ``sigma3_out``.

    ``F3`` must stay positive and eps3 decrease strictly up to the exit.
    """
    cat = build_sections(p)
    cap = cap or chart_cap(p)
    traj, last, status, hit, dist = _radial(3, p0, p, 2, cat["sigma3_out"], cap, patience)
    _status_error(status, last, "pi_3", cap)
    path = traj[: hit + 1]
    F = 1.0 - path[:-1, 1] ** 2 + p.lam * path[:-1, 2]
    if np.any(F <= 0):
        raise InvariantBreachError("pi_3: F3 > 0", int(np.argmax(F <= 0)))
    k = _strict(path[:, 2], False)
    if k >= 0:
        raise InvariantBreachError("pi_3: eps3 decreasing", k)
    return PassageReport("pi_3", K3Point(*map(float, p0)), K3Point(*map(float, path[-1])),
                         int(hit), distance=float(dist), path=path)


_REGIMES = {"attracting": 0, "exit": 1, "none": 2}


def _k2_run(p0: K2Point, p: Params, regime: str, cap: int):
    h2 = float(p0[3])
    if regime == "attracting":
        tgt = sigma2a_out(p, h2)
    elif regime == "exit":
        tgt = sigma2e_out(p, h2)
    else:
        tgt = None
    if tgt is None:
        xlo = xhi = ylo = yhi = 0.0
        yopen = False
    else:
        xi, yi = tgt.interval("x2"), tgt.interval("y2")
        xlo, xhi, ylo, yhi, yopen = xi.lo, xi.hi, yi.lo, yi.hi, yi.hi_open
    tol = MEMBERSHIP_TOL * max(1.0, abs(xlo), abs(xhi), abs(ylo))
    traj, last, status, gate = K.k2_orbit(np.asarray(p0, dtype=float), p.lam, cap, _BOUND,
                                          _REGIMES[regime], xlo, xhi, ylo, yhi, yopen, tol)
    return tgt, traj, int(last), int(status), int(gate)


def pi_2(p0: K2Point, p: Params, regime: str, *, check_regime: bool = True,
         check_entry: bool = True, cap: int | None = None) -> PassageReport:
    """K2 passage from ``sigma2_in`` to the first entry into the regime's exit.

    Parameters
    ----------
    regime : {"attracting", "exit"}
        ``attracting`` targets ``sigma2a_out`` (``lam < 1``), ``exit`` targets
        ``sigma2e_out`` (``lam > 1``).
    check_regime : bool
        Reject a regime that does not match the sign of ``lam - 1`` (and
        ``lam = 1`` altogether).

    Returns
    -------
    PassageReport
        ``entered`` tells whether the exit set was entered.  If not, ``exit``
        is the first point of the orbit inside the exit set's x-window (or the
        last point computed) and ``detail`` lists the violated coordinates.
        ``path`` holds the orbit up to that point.
    """
    if regime not in ("attracting", "exit"):
        raise ValueError(f"unknown regime {regime!r}")
    if check_regime:
        want = "attracting" if p.lam < 1 else "exit" if p.lam > 1 else None
        if want != regime:
            raise ParameterError(f"regime {regime!r} does not apply to lambda={p.lam!r}")
    if check_entry:
        cat = build_sections(p)
        if not cat["sigma2_in"].contains(p0):
            raise ParameterError(f"{p0} is not in sigma2_in "
                                 f"({cat['sigma2_in'].violations(p0)})")
    cap = cap or chart_cap(p)
    tgt, traj, last, status, gate = _k2_run(p0, p, regime, cap)
    entered = status == K.OK
    if entered:
        stop, path = last, traj
        detail = ""
    elif status in (K.PASSED, K.CAP):
        stop = gate if gate >= 0 else last
        path = traj[: stop + 1]
        pt = K2Point(*map(float, path[-1]))
        why = "passed the x-window" if status == K.PASSED else "cap reached"
        detail = f"{why}; violates {','.join(tgt.violations(pt))} at step {stop}"
    else:
        raise InvariantBreachError("pi_2: finite orbit", last)
    exitp = K2Point(*map(float, path[-1]))
    return PassageReport(f"pi_2_{regime}", K2Point(*map(float, p0)), exitp, int(stop),
                         entered=entered, distance=tgt.distance(exitp), detail=detail,
                         path=path)


@dataclass(frozen=True)
class LemmaVerdict:
    """Pointwise checks of the diagonal-crossing behaviour in chart K2.

    ``clauses`` maps clause names to ``(passed, index, note)``; ``index`` is
    the offending or decisive step.
    """

    lam: float
    clauses: dict[str, tuple[bool, int | None, str]]

    @property
    def passed(self) -> bool:
        return all(v[0] for v in self.clauses.values())


def measure_lemma_monotonicity(p0: K2Point, p: Params, *,
                               cap: int | None = None) -> LemmaVerdict:
    """Check the diagonal-side statements along one K2 orbit up to its exit.

    Clauses
    -------
    x_increasing (``0 < lam < 1``)
        ``x2`` increases strictly while ``x2, y2 < 0``.
    crossing_01 (``0 < lam < 1``, start below the diagonal)
        With ``n_c`` the first index at which ``x2 <= y2``, the index
        ``n* = max(n_c, ceil(lam sqrt(delta) / (8 (1 - lam) h2)))`` satisfies
        ``x2 <= y2 < 0`` and ``n* h2 / (n* h2 + sqrt(delta)/8) >= lam``.
    above_always (``lam <= 0``)
        ``x2 <= y2`` at every step.
    crossing_big (``lam > 1``, start above the diagonal)
        With ``n_c`` the first index with ``y2 <= x2``, the index
        ``n* = max(n_c, ceil(sqrt(delta) / h2))`` satisfies ``y2 <= x2 < 0``
        and ``n* h2 >= sqrt(delta)``.
    stays
        Once on the stated side (above for ``lam < 1``, below for ``lam > 1``)
        the orbit never leaves it again.

    ``crossing_first`` records (without affecting ``passed``) whether the
    inequality already holds at ``n_c`` itself.
    """
    if p.lam == 1.0:
        raise ParameterError("the diagonal lemmas do not apply to lambda = 1")
    regime = "attracting" if p.lam < 1 else "exit"
    cap = cap or chart_cap(p)
    _, traj, last, status, gate = _k2_run(K2Point(*map(float, p0)), p, regime, cap)
    if status in (K.NONFINITE, K.BOUND):
        traj = traj[:-1]
    x, y = traj[:, 0], traj[:, 1]
    h2 = float(p0[3])
    sd = math.sqrt(p.delta)
    lam = p.lam
    cl: dict[str, tuple[bool, int | None, str]] = {}
    n = len(x)
    if lam < 1:
        side = x <= y
    else:
        side = y <= x
    if 0 < lam < 1:
        neg = (x[:-1] < 0) & (y[:-1] < 0)
        bad = np.nonzero(neg & (np.diff(x) <= 0))[0]
        cl["x_increasing"] = (bad.size == 0, int(bad[0]) + 1 if bad.size else None, "")
    first_side = np.nonzero(side)[0]
    n_c = int(first_side[0]) if first_side.size else None
    if 0 < lam < 1 and y[0] < x[0]:
        if n_c is None:
            cl["crossing_01"] = (False, None, "never crossed the diagonal")
        else:
            n_min = math.ceil(lam * sd / (8 * (1 - lam) * h2))
            k = max(n_c, n_min)
            ok = k < n and x[k] <= y[k] < 0 and k * h2 / (k * h2 + sd / 8) >= lam
            cl["crossing_01"] = (bool(ok), k, f"first crossing at {n_c}")
            ratio = n_c * h2 / (n_c * h2 + sd / 8)
            cl["crossing_first"] = (True, n_c, f"ratio at first crossing {ratio!r} "
                                    f"vs lambda {lam!r}")
    if lam <= 0:
        below = np.nonzero(~side)[0]
        cl["above_always"] = (below.size == 0, int(below[0]) if below.size else None, "")
    if lam > 1 and x[0] < y[0]:
        if n_c is None:
            cl["crossing_big"] = (False, None, "never crossed the diagonal")
        else:
            k = max(n_c, math.ceil(sd / h2))
            ok = k < n and y[k] <= x[k] < 0 and k * h2 >= sd
            cl["crossing_big"] = (bool(ok), k, f"first crossing at {n_c}")
            cl["crossing_first"] = (True, n_c, f"n_c*h2={n_c * h2!r} vs "
                                    f"sqrt(delta)={sd!r}")
    if n_c is not None:
        after = np.nonzero(~side[n_c:])[0]
        cl["stays"] = (after.size == 0, n_c + int(after[0]) if after.size else None, "")
    else:
        cl["stays"] = (True, None, "never on the stated side")
    return LemmaVerdict(lam, cl)


@dataclass(frozen=True)
class ContractionResult:
    """Widths of a sampled slow-coordinate interval before and after a passage.

    ``width_out`` is the spread of the exit points across the fibres of the
    attracting graph: each exit ``(eps1, y1)`` is compared with a reference
    orbit at the same eps1 (cubic interpolation along the reference).  The raw
    y-diameter of the exit points, ``raw_width_out``, also contains the
    discrete phase at which each orbit stops.  ``rate`` is
    ``width_out / width_in`` (NaN for a zero-width input).
    """

    width_in: float
    width_out: float
    rate: float
    raw_width_out: float
    raw_rate: float
    reports: tuple[PassageReport, ...] = field(default=(), repr=False)

    def __iter__(self):
        return iter((self.width_in, self.width_out, self.rate))


def _fibre_offsets(reports: Sequence[PassageReport], p: Params, ref: int) -> np.ndarray:
    rep = reports[ref]
    extra = 64
    z0 = np.asarray(rep.entry, dtype=float)
    traj, last, status, _, _ = K.radial_orbit(1, z0, p.lam, rep.steps + extra, _BOUND, 0,
                                              np.zeros(4), np.zeros(4), 0.0, 0, -1, 0.0)
    e, y = traj[:, 2], traj[:, 1]
    order = np.argsort(e)
    spline = CubicSpline(e[order], y[order])
    ex = np.array([r.exit[2] for r in reports])
    ey = np.array([r.exit[1] for r in reports])
    if ex.min() < e.min() or ex.max() > e.max():
        raise InvariantBreachError("fibre reference does not cover the exits", rep.steps)
    return ey - spline(ex)


def contraction_sweep(section: SectionSet | str, p: Params, n_samples: int = 64, *,
                      ys: Sequence[float] | None = None) -> ContractionResult:
    """Push an evenly sampled slow interval of ``R1`` or ``R2`` through its map.

    ``R1`` samples go through :func:`pi_1_minus` at ``(rho, y1, delta/4, nu)``;
    ``R2`` samples through :func:`pi_1_plus` at the point
    ``r1 = rho/2, eps1 = eps/r1**2, h1 = h r1`` of the original ``(eps, h)``.
    ``ys`` replaces the even grid over the section's y1-window.
    """
    name = section if isinstance(section, str) else section.name
    cat = build_sections(p)
    if name not in ("R1", "R2"):
        raise ValueError("contraction is measured on R1 or R2")
    if ys is None:
        yiv = cat[name].interval("y1")
        ys = np.linspace(yiv.lo, yiv.hi, n_samples)
    ys = np.asarray(ys, dtype=float)
    if ys.size < 2:
        raise ValueError("need at least two samples")
    if name == "R1":
        base = (p.rho, p.delta / 4, p.nu)
        fn = pi_1_minus
    else:
        r1 = p.rho / 2
        base = (r1, p.eps / (r1 * r1), p.h * r1)
        fn = pi_1_plus
    reps = [fn(K1Point(base[0], float(y), base[1], base[2]), p) for y in ys]
    width_in = float(ys.max() - ys.min())
    ey = np.array([r.exit[1] for r in reps])
    raw = float(ey.max() - ey.min())
    if width_in == 0.0:
        return ContractionResult(0.0, 0.0, math.nan, raw, math.nan, tuple(reps))
    off = _fibre_offsets(reps, p, len(reps) // 2)
    w = float(off.max() - off.min())
    for r in reps:
        r.width_in = width_in
        r.width_out = w
    return ContractionResult(width_in, w, w / width_in, raw, raw / width_in, tuple(reps))


def sample_sigma2_in(p: Params, n: int, rng: np.random.Generator) -> list[K2Point]:
    """Uniform samples of ``sigma2_in`` (all four coordinates)."""
    box = build_sections(p)["sigma2_in"]
    return [K2Point(*map(float, row)) for row in box.sample(rng, n)]


def _reachable_k2_band(p: Params) -> tuple[Interval, Interval]:
    """Ranges of ``(r2, h2)`` on the k12-image of ``sigma1m_out``."""
    out = build_sections(p)["sigma1m_out"]
    e, r, h = out.interval("eps1"), out.interval("r1"), out.interval("h1")
    return (Interval(math.sqrt(e.lo) * r.lo, math.sqrt(e.hi) * r.hi),
            Interval(math.sqrt(e.lo) * h.lo, math.sqrt(e.hi) * h.hi))


@dataclass(frozen=True)
class ContainmentCheck:
    name: str
    samples: int
    violations: int
    example: str = ""


def check_containments(p: Params, n: int, rng: np.random.Generator) -> list[ContainmentCheck]:
    """Monte-Carlo check of the three chart-change containments.

    * ``k12(pi_1_minus(R1))`` in ``sigma2_in`` (only for ``lam != 1``);
    * ``k21(sigma2a_out)`` in ``R2`` (``lam < 1``);
    * ``k23(sigma2e_out)`` in ``sigma3_in`` (``lam > 1``), with ``(r2, h2)``
      drawn from the band actually reached from chart K1 (the full ``D2`` box
      is larger than ``sigma3_in`` allows in ``r3`` and ``h3``).
    """
    cat = build_sections(p)
    out: list[ContainmentCheck] = []
    R1 = cat["R1"].interval("y1")
    bad, ex = 0, ""
    for y in rng.uniform(R1.lo, R1.hi, n):
        rep = pi_1_minus(K1Point(p.rho, float(y), p.delta / 4, p.nu), p)
        q = k12(rep.exit)
        v = cat["sigma2_in"].violations(q)
        if v:
            bad += 1
            ex = ex or f"y1={y!r} -> {q} violates {v}"
    out.append(ContainmentCheck("k12(pi_1_minus(R1)) in sigma2_in", n, bad, ex))
    r2i, h2i = _d2_ranges(p)
    s = p.delta ** -0.5
    if p.lam < 1:
        b = betas(p)
        bad, ex = 0, ""
        for _ in range(n):
            h2 = rng.uniform(h2i.lo, h2i.hi)
            q2 = K2Point(rng.uniform(-s - h2 / 2, -s + h2 / 2),
                         rng.uniform(s * (1 - b.beta2_plus_hat), s * (1 + b.beta2_plus)),
                         rng.uniform(r2i.lo, r2i.hi), h2)
            q = k21(q2)
            v = cat["R2"].violations(q)
            if v:
                bad += 1
                ex = ex or f"{q2} -> {q} violates {v}"
        out.append(ContainmentCheck("k21(sigma2a_out) in R2", n, bad, ex))
    if p.lam > 1:
        r2b, h2b = _reachable_k2_band(p)
        ywin = p.omega * p.delta ** (-1 / 6)
        bad, ex = 0, ""
        for _ in range(n):
            h2 = rng.uniform(h2b.lo, h2b.hi)
            q2 = K2Point(rng.uniform(s, s + h2 * (p.lam + 1 / p.delta)),
                         rng.uniform(0.0, ywin), rng.uniform(r2b.lo, r2b.hi), h2)
            q = k23(q2)
            v = cat["sigma3_in"].violations(q)
            if v:
                bad += 1
                ex = ex or f"{q2} -> {q} violates {v}"
        out.append(ContainmentCheck("k23(sigma2e_out) in sigma3_in", n, bad, ex))
    return out


def calibrate_omega(lam: float, deltas: Sequence[float], nus: Sequence[float],
                    n_samples: int, seed: int = 0, factor: float = 1.25) -> float:
    """Exit-window constant from a calibration sweep.

    Runs escape passages from uniform ``sigma2_in`` samples with an unbounded
    y-window and returns ``factor`` times the largest ``y2 delta**(1/6)`` seen
    at entry into the x-window.
    """
    if not lam > 1:
        raise ParameterError("the escape window exists only for lambda > 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d in deltas:
        for nu in nus:
            p = Params.from_chart(lam, d, nu, omega=math.inf)
            for q in sample_sigma2_in(p, n_samples, rng):
                rep = pi_2(q, p, "exit")
                if not rep.entered:
                    raise InvariantBreachError(f"calibration orbit missed the escape "
                                               f"window: {rep.detail}", rep.steps)
                worst = max(worst, rep.exit[1] * d ** (1 / 6))
    return factor * worst
