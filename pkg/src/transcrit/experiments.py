"""End-to-end checks: composed chart maps, scaling fits, convergence, claims.

Every acceptance check is a function ``check_*(cfg) -> list[ClaimRow]``;
:func:`run_claim_suite` runs them all and the test-suite calls them one by
one.  Rows carry only deterministic content (no timings), so a report is
byte-reproducible.
"""
from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import charts as C
from . import manifolds as M
from . import passage as P
from .core_map import (State, euler_step, iterate, pi_a, pi_e, reference_flow,
                       section_delta)
from .errors import ParameterError, TranscritError
from .io import csv_text
from .params import Params

__all__ = [
    "FitResult",
    "scaling_fit",
    "linear_fit",
    "SweepSpec",
    "SweepPoint",
    "run_sweep",
    "Composition",
    "GlobalMap",
    "compose_pi_a",
    "compose_pi_e",
    "convergence_study",
    "ClosenessResult",
    "closeness_study",
    "exit_heights",
    "ClaimRow",
    "SuiteConfig",
    "run_claim_suite",
    "report_csv",
    "report_table",
    "CHECKS",
]

log = logging.getLogger(__name__)


# ----------------------------------------------------------------- fitting

@dataclass(frozen=True)
class FitResult:
    """Least-squares line ``y = slope * x + intercept``."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    """Ordinary least squares on the raw values (at least three points)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d and of equal length")
    if x.size < 3:
        raise ValueError(f"need at least 3 points for a fit, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in fit input")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise ValueError("all xs are equal")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - slope * x - intercept) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(slope, intercept, r2, int(x.size))


def scaling_fit(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    """Least-squares line through ``(log xs, log ys)``; all values must be > 0."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("scaling_fit needs strictly positive values")
    return linear_fit(np.log(x), np.log(y))


# -------------------------------------------------------- composed maps

@dataclass(frozen=True)
class Composition:
    """One input pushed through the chart-composed map and the direct map."""

    y0: float
    composed: State
    direct: State
    composed_steps: int
    direct_steps: int
    legs: tuple[P.PassageReport, ...] = field(repr=False)
    k2_entered_exit: bool = True

    @property
    def rel_y_error(self) -> float:
        return abs(self.composed.y - self.direct.y) / abs(self.direct.y)


@dataclass(frozen=True)
class GlobalMap:
    """Chart-composed transition map from the entry segment.

    ``regime="attracting"`` composes ``pi_1_plus . k21 . pi_2 . k12 .
    pi_1_minus``; ``"escape"`` composes ``pi_3 . k23 . pi_2 . k12 .
    pi_1_minus``.  When the K2 passage passes its exit x-window without
    entering the exit set, the hand-off to the next chart happens at the
    first point inside the x-window; the map is the same orbit either way.
    """

    params: Params
    regime: str

    def entry_interval(self) -> tuple[float, float]:
        """y-range (original coordinates) of ``R1`` intersected with the entry segment."""
        p = self.params
        r1 = P.build_sections(p)["R1"].interval("y1")
        din = section_delta("in", p).interval("y")
        lo = max(p.rho * r1.lo, np.nextafter(din.lo, np.inf))
        hi = min(p.rho * r1.hi, np.nextafter(din.hi, -np.inf))
        return float(lo), float(hi)

    def inputs(self, n: int) -> np.ndarray:
        lo, hi = self.entry_interval()
        return np.linspace(lo, hi, n)

    def composed(self, y0: float) -> tuple[State, int, tuple[P.PassageReport, ...], bool]:
        p = self.params
        q1 = C.lift_to_k1(State(-p.rho, float(y0), p.eps, p.h))
        a = P.pi_1_minus(q1, p)
        k2_regime = "attracting" if self.regime == "attracting" else "exit"
        b = P.pi_2(C.k12(a.exit), p, k2_regime, check_entry=False)
        if self.regime == "attracting":
            c = P.pi_1_plus(C.k21(b.exit), p, check_entry=False)
        else:
            c = P.pi_3(C.k23(b.exit), p)
        steps = a.steps + b.steps + c.steps
        return C.blow_down(c.exit), steps, (a, b, c), b.entered

    def direct(self, y0: float) -> tuple[State, int]:
        fn = pi_a if self.regime == "attracting" else pi_e
        return fn(float(y0), self.params)

    def __call__(self, y0: float) -> Composition:
        s, n, legs, entered = self.composed(y0)
        d, m = self.direct(y0)
        return Composition(float(y0), s, d, n, m, legs, entered)


def compose_pi_a(params: Params) -> GlobalMap:
    """Chart-composed attracting passage (``lam < 1``)."""
    params.require_theorem_regime("below")
    return GlobalMap(params, "attracting")


def compose_pi_e(params: Params) -> GlobalMap:
    """Chart-composed escape passage (``lam > 1``)."""
    params.require_theorem_regime("above")
    return GlobalMap(params, "escape")


# ----------------------------------------------------------- convergence

def convergence_study(params_base: Params, h_grid: Sequence[float], *, T: float = 2.0,
                      s0: State | None = None, tol: float = 1e-13) -> tuple[FitResult, np.ndarray]:
    """Global Euler error at fast time ``T`` against the reference flow.

    Each ``h`` in ``h_grid`` must divide ``T`` into a whole number of steps.
    Returns the log-log fit of error against ``h`` and the errors.
    """
    p0 = params_base
    if s0 is None:
        s0 = State(-p0.rho, -0.9 * p0.rho, p0.eps, p0.h)
    ref = reference_flow(State(s0.x, s0.y, p0.eps, p0.h), p0, T, tol=tol)
    errs = []
    for h in h_grid:
        n = int(round(T / h))
        if not math.isclose(n * h, T, rel_tol=1e-12):
            raise ValueError(f"h={h!r} does not divide T={T!r}")
        p = replace(p0, h=float(h))
        tr = iterate(State(s0.x, s0.y, p0.eps, float(h)), p, n, cap=n)
        e = tr.last
        errs.append(max(abs(e.x - ref.x), abs(e.y - ref.y)))
    errs = np.asarray(errs)
    fit = scaling_fit(h_grid, errs) if np.all(errs > 0) and len(errs) >= 3 else None
    return fit, errs


# ---------------------------------------------------- closeness / heights

def _direct_samples(p: Params, regime: str, n: int) -> list[tuple[float, State, float]]:
    kind = "a_out" if regime == "attracting" else "e_out"
    tgt = section_delta(kind, p)
    din = section_delta("in", p).interval("y")
    fn = pi_a if regime == "attracting" else pi_e
    pad = 0.05 * din.width
    out = []
    for y0 in np.linspace(din.lo + pad, din.hi - pad, n):
        s, _ = fn(float(y0), p)
        out.append((float(y0), s, tgt.distance(s)))
    return out


@dataclass(frozen=True)
class ClosenessResult:
    """Distance-to-exit constants on two interleaved halves of a sweep."""

    regime: str
    points: tuple[tuple[float, float, float], ...]  # (eps, h, max distance / rate)
    k_calibration: float
    k_validation: float

    @property
    def drift(self) -> float:
        return abs(self.k_validation / self.k_calibration - 1.0)


def closeness_study(regime: str, lam: float, grid: Sequence[tuple[float, float]],
                    samples: int, rho: float = 1.0) -> ClosenessResult:
    """Fit ``K`` in ``dist <= K * rate`` with ``rate = h eps`` (attracting) or
    ``h (eps + rho**2)`` (escape).

    Grid points are ordered by ``rate`` and split alternately into a
    calibration and a validation half; each half's constant is the largest
    ``dist / rate`` over its points and samples.
    """
    pts = []
    for eps, h in grid:
        p = Params(lam, eps, h, rho)
        rate = h * eps if regime == "attracting" else h * (eps + rho * rho)
        worst = max(d for _, _, d in _direct_samples(p, regime, samples)) / rate
        pts.append((rate, eps, h, worst))
    pts.sort()
    cal = [w for i, (*_, w) in enumerate(pts) if i % 2 == 0]
    val = [w for i, (*_, w) in enumerate(pts) if i % 2 == 1]
    return ClosenessResult(regime, tuple((e, h, w) for _, e, h, w in pts),
                           max(cal), max(val))


def exit_heights(lam: float, eps_grid: Sequence[float], h_of_eps: Callable[[float], float],
                 samples: int = 3, rho: float = 1.0) -> np.ndarray:
    """Largest ``|y|`` of the escape-map image of the entry segment, per eps."""
    out = []
    for eps in eps_grid:
        p = Params(lam, float(eps), float(h_of_eps(eps)), rho)
        out.append(max(abs(s.y) for _, s, _ in _direct_samples(p, "escape", samples)))
    return np.asarray(out)


# --------------------------------------------------------------- sweeps

_AXES = ("eps", "h", "delta", "nu", "lam")


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep.

    ``axis`` in ``eps, h`` varies the original-space constants of ``fixed``;
    ``delta, nu`` vary the chart constants (``eps = rho**2 delta / 4``,
    ``h = nu / rho``); ``lam`` varies lambda.
    """

    axis: str
    grid: tuple[float, ...]
    fixed: Params
    samples_per_point: int = 8

    def __post_init__(self) -> None:
        if self.axis not in _AXES:
            raise ParameterError(f"sweep axis must be one of {_AXES}, got {self.axis!r}")
        if len(self.grid) == 0:
            raise ParameterError("empty sweep grid")
        if self.samples_per_point < 2:
            raise ParameterError("samples_per_point must be at least 2")
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))

    def params_at(self, v: float) -> Params:
        f = self.fixed
        if self.axis == "eps":
            return replace(f, eps=v, delta=None)
        if self.axis == "h":
            return replace(f, h=v, c=None)
        if self.axis == "lam":
            return replace(f, lam=v, omega=None)
        delta = v if self.axis == "delta" else f.delta
        nu = v if self.axis == "nu" else f.nu
        return Params.from_chart(f.lam, delta, nu, f.rho)

    def points(self) -> list[Params]:
        return [self.params_at(v) for v in self.grid]


@dataclass(frozen=True)
class SweepPoint:
    """Measurements at one sweep point; ``error`` is set for failed points."""

    value: float
    params: Params
    width_in: float = math.nan
    width_out: float = math.nan
    width_ratio: float = math.nan
    exit_height: float = math.nan
    transition_steps: int = -1
    transition_bound: float = math.nan
    error: str = ""

    HEADER = ("axis_value", "lam", "eps", "h", "rho", "delta", "nu", "width_in",
              "width_out", "width_ratio", "exit_height", "transition_steps",
              "transition_bound", "flag")

    def row(self) -> tuple:
        p = self.params
        return (self.value, p.lam, p.eps, p.h, p.rho, p.delta, p.nu, self.width_in,
                self.width_out, self.width_ratio, self.exit_height,
                self.transition_steps, self.transition_bound, self.error)


def _measure_point(v: float, p: Params, samples: int) -> SweepPoint:
    try:
        p.require_theorem_regime()
        cw = P.contraction_sweep("R1", p, samples)
        r1 = P.build_sections(p)["R1"].interval("y1")
        mid = C.K1Point(p.rho, 0.5 * (r1.lo + r1.hi), p.delta / 4, p.nu)
        tr = P.pi_1_minus(mid, p)
        height = math.nan
        if p.lam > 1:
            height = float(exit_heights(p.lam, [p.eps], lambda e: p.h, 3, p.rho)[0])
        return SweepPoint(v, p, cw.width_in, cw.width_out, cw.rate, height, tr.steps,
                          tr.bound)
    except TranscritError as exc:
        return SweepPoint(v, p, error=f"{type(exc).__name__}: {exc}")


def run_sweep(spec: SweepSpec, threads: int = 1) -> tuple[list[SweepPoint], dict[str, FitResult]]:
    """Measure every grid point and fit the summary exponents.

    Fits (where at least three finite points exist): ``exit_height`` against
    the axis (log-log), ``width_ratio`` against the axis (log-log) and
    ``log(width_ratio)`` against ``1 / (nu delta)`` (affine).
    """
    params = spec.points()
    work = list(zip(spec.grid, params))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            pts = list(ex.map(lambda a: _measure_point(a[0], a[1], spec.samples_per_point),
                              work))
    else:
        pts = [_measure_point(v, p, spec.samples_per_point) for v, p in work]
    fits: dict[str, FitResult] = {}
    ok = [q for q in pts if not q.error]
    xs = np.array([q.value for q in ok])
    h = np.array([q.exit_height for q in ok])
    if np.sum(np.isfinite(h) & (h > 0)) >= 3 and np.all(xs > 0):
        m = np.isfinite(h) & (h > 0)
        fits["exit_height"] = scaling_fit(xs[m], h[m])
    w = np.array([q.width_ratio for q in ok])
    m = np.isfinite(w) & (w > 0)
    if m.sum() >= 3:
        if np.all(xs[m] > 0) and len(set(xs[m])) >= 2:
            fits["width_ratio"] = scaling_fit(xs[m], w[m])
        inv = np.array([1.0 / (q.params.nu * q.params.delta) for q in ok])[m]
        if len(set(inv)) >= 2:
            fits["log_width_ratio_vs_inv_nu_delta"] = linear_fit(inv, np.log(w[m]))
    return pts, fits


# ------------------------------------------------------------ claim suite

@dataclass(frozen=True)
class ClaimRow:
    """One line of the traceability report.

    ``status`` is ``pass``, ``fail`` or ``skip``.
    """

    claim: str
    status: str
    measured: str
    expected: str
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"


def _row(claim: str, ok: bool, measured: str, expected: str, note: str = "") -> ClaimRow:
    return ClaimRow(claim, "pass" if ok else "fail", measured, expected, note)


@dataclass(frozen=True)
class SuiteConfig:
    """Grid and sample sizes of the claim suite.

    The defaults are the acceptance sizes.  The (lambda, delta, nu) grid drives
    the chart-passage checks; the scaling, closeness and convergence checks
    use their own fixed sweeps and only need a lambda on the matching side of
    1 to be present in the grid.
    """

    lams: tuple[float, ...] = (-0.5, 0.5, 2.0)
    deltas: tuple[float, ...] = (0.05, 0.1)
    nus: tuple[float, ...] = (0.005, 0.01)
    rho: float = 1.0
    seed: int = 0
    chart_samples: int = 100_000
    k2_samples: int = 1000
    transition_starts: int = 60
    containment_samples: int = 10_000
    composition_samples: int = 100
    closeness_samples: int = 4
    exit_band: tuple[float, float] = (0.25, 0.42)
    exit_eps: tuple[float, ...] = (1e-3, 1.78e-3, 3.16e-3, 5.62e-3, 1e-2)
    contraction_deltas: tuple[float, ...] = (0.15, 0.2, 0.25, 0.3, 0.35, 0.4)
    contraction_nu: float = 0.01
    contraction_lam: float = 0.5
    convergence_steps: tuple[int, ...] = (50, 80, 125, 200, 320, 500)
    threads: int = 1

    def theorem_lams(self) -> list[float]:
        return [lam for lam in self.lams if lam != 1.0]

    def grid(self, side: str | None = None) -> list[Params]:
        """Chart-constant grid points, optionally only ``lam < 1`` / ``lam > 1``."""
        out = []
        for lam, d, nu in itertools.product(self.theorem_lams(), self.deltas, self.nus):
            if side == "below" and not lam < 1:
                continue
            if side == "above" and not lam > 1:
                continue
            out.append(Params.from_chart(lam, d, nu, self.rho))
        return out

    def validate(self) -> None:
        """Reject grid points that break the passage hypotheses."""
        bad = []
        for p in self.grid():
            v = p.hypothesis_violations()
            if v:
                bad.append(f"(lam={p.lam}, delta={p.delta}, nu={p.nu}): {'; '.join(v)}")
        if bad:
            raise ParameterError("grid violates hypotheses: " + " | ".join(bad))

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b != 0 else abs(a - b)


def _conj_discrepancy(cp: C.ChartPoint, p: Params) -> float:
    step = {C.K1Point: C.step_k1, C.K2Point: C.step_k2, C.K3Point: C.step_k3}[type(cp)]
    a = C.blow_down(step(cp, p))
    b = euler_step(C.blow_down(cp), p)
    scale = max(abs(b.x), abs(b.y))
    return max(abs(a.x - b.x) / scale, abs(a.y - b.y) / scale, _rel(a.eps, b.eps),
               _rel(a.h, b.h))


def _chart_sample_arrays(p: Params, n: int, rng: np.random.Generator):
    """Random rows of the K1, K2 and K3 domain boxes (radii strictly positive)."""
    rho, d, nu = p.rho, p.delta, p.nu
    a, b, c, e = rng.random((n, 4)).T
    k1 = np.column_stack((rho * (1 - a), 4 * b - 2, 2 * d * (1 - c), nu * (1 - e)))
    a, b, c, e = rng.random((n, 4)).T
    s, sd = d ** -0.5, math.sqrt(d)
    k2 = np.column_stack((s * (3 * a - 1.5), s * (3 * b - 1.5), sd * rho * (0.5 + 0.5 * c),
                          sd * nu * (0.5 + 0.5 * e)))
    a, b, c, e = rng.random((n, 4)).T
    k3 = np.column_stack((rho * (1 - a), 4 * b - 2, d * (1 - c), nu * (1 - e)))
    return k1, k2, k3


def _chart_samples(p: Params, n: int, rng: np.random.Generator):
    """Random points of the K1, K2 and K3 domain boxes."""
    k1, k2, k3 = _chart_sample_arrays(p, n, rng)
    return ([C.K1Point._make(r) for r in k1.tolist()],
            [C.K2Point._make(r) for r in k2.tolist()],
            [C.K3Point._make(r) for r in k3.tolist()])


def check_conjugacy(cfg: SuiteConfig) -> list[ClaimRow]:
    """Blow-down of a chart step equals the Euler step of the blow-down."""
    p = Params.from_chart(0.5, 0.1, 0.01, cfg.rho)
    k1, k2, k3 = _chart_samples(p, cfg.chart_samples, cfg.rng(1))
    worst = {}
    for name, pts in (("K1", k1), ("K2", k2), ("K3", k3)):
        worst[name] = max(_conj_discrepancy(q, p) for q in pts)
    w = max(worst.values())
    return [_row("chart step conjugacy", w <= 1e-12,
                 ", ".join(f"{k} {v:.3g}" for k, v in worst.items()),
                 "max relative discrepancy <= 1e-12",
                 f"{cfg.chart_samples} points per chart")]


def check_round_trips(cfg: SuiteConfig) -> list[ClaimRow]:
    """Chart changes composed with their inverses are the identity to 2 ulp."""
    p = Params.from_chart(0.5, 0.1, 0.01, cfg.rho)
    k1, k2, _ = _chart_sample_arrays(p, cfg.chart_samples, cfg.rng(2))
    k1 = k1[k1[:, 2] > 0]
    k2m, k2p = k2.copy(), k2.copy()
    k2m[:, 0] = np.where(k2[:, 0] == 0, -1.0, -np.abs(k2[:, 0]))
    k2p[:, 0] = np.where(k2[:, 0] == 0, 1.0, np.abs(k2[:, 0]))
    cases = (("k21.k12", k1, C.K1Point, lambda q: C.k21(C.k12(q))),
             ("k12.k21", k2m, C.K2Point, lambda q: C.k12(C.k21(q))),
             ("k23.k32", k1, C.K3Point, lambda q: C.k23(C.k32(q))),
             ("k32.k23", k2p, C.K2Point, lambda q: C.k32(C.k23(q))))
    parts, ok = [], True
    for name, a, cls, fn in cases:
        b = np.array([fn(cls._make(r)) for r in a.tolist()], dtype=float)
        ulps = np.abs(b - a) / np.spacing(np.abs(a))
        m = float(ulps.max())
        ok &= m <= 2.0
        parts.append(f"{name} {m:g} ulp")
    return [_row("chart change round trips", ok, ", ".join(parts), "<= 2 ulp per component",
                 f"{len(k1)} samples per composition")]


def check_conserved_products(cfg: SuiteConfig, n_orbits: int = 20,
                             steps: int = 1000) -> list[ClaimRow]:
    """``eps_i r_i h_i`` drift in K1/K3; ``r2, h2`` fixed in K2."""
    rng = cfg.rng(3)
    p = Params.from_chart(0.5, 0.1, 0.001, cfg.rho)
    d, nu = p.delta, p.nu
    drift = {"K1": 0.0, "K3": 0.0}
    for chart in ("K1", "K3"):
        cls, step = (C.K1Point, C.step_k1) if chart == "K1" else (C.K3Point, C.step_k3)
        for _ in range(n_orbits):
            # |y3| < 1 keeps F3 > 0; beyond it the K3 orbit leaves the chart
            yr = 1.5 if chart == "K1" else 0.9
            z = cls(cfg.rho * rng.uniform(0.5, 1.0), rng.uniform(-yr, yr),
                    rng.uniform(d / 4, d), rng.uniform(nu / 2, nu))
            c0 = z[0] * z[2] * z[3]
            for _ in range(steps):
                z = step(z, p)
                drift[chart] = max(drift[chart], _rel(z[0] * z[2] * z[3], c0))
    const = True
    for q in P.sample_sigma2_in(p, n_orbits, rng):
        z = q
        for _ in range(steps):
            z = C.step_k2(z, p)
        const &= z.r2 == q.r2 and z.h2 == q.h2
    ok = drift["K1"] <= 1e-12 and drift["K3"] <= 1e-12 and const
    return [_row("conserved chart products", ok,
                 f"K1 drift {drift['K1']:.3g}, K3 drift {drift['K3']:.3g}, "
                 f"K2 r2/h2 {'bitwise constant' if const else 'changed'}",
                 "drift <= 1e-12; r2, h2 bitwise constant",
                 f"{n_orbits} orbits x {steps} steps per chart")]


def residual_slopes(lam: float = 0.5, branch: str = "minus") -> tuple[FitResult, FitResult]:
    """Log-log slopes of the truncated-graph invariance residual.

    Against eps1 over ``[0.01, 0.1]`` at ``h1 = 0.01`` and against h1 over
    ``[0.001, 0.01]`` at ``eps1 = 0.1``.
    """
    g = M.graph_minus(lam) if branch == "minus" else M.graph_plus(lam)
    p = Params.from_chart(lam, 0.1, 0.01)
    es = np.geomspace(0.01, 0.1, 6)
    hs = np.geomspace(0.001, 0.01, 6)
    re = [abs(M.invariance_residual_k1(g, e, 0.01, p)) for e in es]
    rh = [abs(M.invariance_residual_k1(g, 0.1, h, p)) for h in hs]
    return scaling_fit(es, re), scaling_fit(hs, rh)


def check_residual_order(cfg: SuiteConfig) -> list[ClaimRow]:
    rows = []
    for branch in ("minus", "plus"):
        fe, fh = residual_slopes(0.5, branch)
        ok = abs(fe.slope - 2) <= 0.15 and abs(fh.slope - 1) <= 0.15
        rows.append(_row(f"invariance residual order ({branch} graph)", ok,
                         f"slope eps1 {fe.slope:.4f}, slope h1 {fh.slope:.4f}",
                         "2 +- 0.15 and 1 +- 0.15"))
    return rows


def _match_eigs(fd: np.ndarray, closed: Sequence[float]) -> float:
    """Largest relative mismatch after greedy nearest matching."""
    left = list(np.asarray(fd, dtype=complex))
    worst = 0.0
    for c in sorted(closed):
        j = int(np.argmin([abs(v - c) for v in left]))
        worst = max(worst, abs(left.pop(j) - c) / abs(c))
    return worst


def check_eigenvalues(cfg: SuiteConfig, h: float = 0.01) -> list[ClaimRow]:
    p = Params.from_chart(0.5, 0.1, 0.01, cfg.rho)
    parts, worst = [], 0.0
    for e in M.fixed_points_k1(h) + M.fixed_points_k3(h):
        J = M.jacobian_fd(e.chart, e.location, p)
        m = _match_eigs(np.linalg.eigvals(J), [v for v, _ in e.eigenvalues])
        worst = max(worst, m)
        parts.append(f"{e.name} {m:.2g}")
    w = {lab: v for v, lab in M.fixed_points_k3(h)[2].eigenvalues}
    res_closed = abs(w["eps3"] * w["r3"] - w["y3"]) / w["y3"]
    ok = worst <= 1e-6 and res_closed <= 1e-15
    return [_row("fixed point multipliers", ok, "; ".join(parts) +
                 f"; K3 resonance eps3*r3 vs y3 {res_closed:.2g}",
                 "finite-difference vs closed form <= 1e-6 relative",
                 f"h1 = h3 = {h}")]


def check_transition_time(cfg: SuiteConfig) -> list[ClaimRow]:
    grid = cfg.grid()
    if not grid:
        return [ClaimRow("K1 entry transition time bound", "skip", "", "",
                         "no lambda != 1 in grid")]
    per = max(2, math.ceil(cfg.transition_starts / len(grid)))
    n, bad, margin = 0, [], math.inf
    for p in grid:
        r1 = P.build_sections(p)["R1"].interval("y1")
        for y in np.linspace(r1.lo, r1.hi, per):
            rep = P.pi_1_minus(C.K1Point(p.rho, float(y), p.delta / 4, p.nu), p)
            n += 1
            margin = min(margin, rep.steps / rep.bound)
            if rep.steps < math.ceil(rep.bound):
                bad.append(f"lam={p.lam} delta={p.delta} nu={p.nu} y1={y!r}")
    return [_row("K1 entry transition time bound", not bad,
                 f"{n} starts, min N/bound {margin:.3g}", "N >= 1/(17 gamma nu delta)",
                 "; ".join(bad[:3]))]


def check_k2_passages(cfg: SuiteConfig) -> list[ClaimRow]:
    rows = []
    lemma_bad: list[str] = []
    lemma_n = 0
    for i, lam in enumerate(cfg.theorem_lams()):
        grid = [p for p in cfg.grid() if p.lam == lam]
        per = math.ceil(cfg.k2_samples / len(grid))
        regime = "attracting" if lam < 1 else "exit"
        rng = cfg.rng(100 + i)
        n, entered, worst = 0, 0, ""
        for p in grid:
            for q in P.sample_sigma2_in(p, per, rng):
                rep = P.pi_2(q, p, regime)
                n += 1
                entered += rep.entered
                if not rep.entered and not worst:
                    worst = (f"delta={p.delta} nu={p.nu}: {rep.detail}; "
                             f"exit {tuple(round(v, 6) for v in rep.exit)}")
                v = P.measure_lemma_monotonicity(q, p)
                lemma_n += 1
                if not v.passed and len(lemma_bad) < 3:
                    lemma_bad.append(f"lam={lam}: " + ",".join(
                        k for k, c in v.clauses.items() if not c[0]))
        target = "sigma2a_out" if lam < 1 else "sigma2e_out"
        rows.append(_row(f"K2 passage exits through {target} (lam={lam:g})", entered == n,
                         f"{entered}/{n} entered", f"{n}/{n}", worst))
    rows.append(_row("diagonal side lemmas", not lemma_bad, f"{lemma_n} orbits checked",
                     "every clause passes", "; ".join(lemma_bad)))
    return rows


def check_containments(cfg: SuiteConfig) -> list[ClaimRow]:
    grid = cfg.grid()
    if not grid:
        return [ClaimRow("section containments", "skip", "", "", "no lambda != 1 in grid")]
    per_lam: dict[float, int] = {}
    for p in grid:
        per_lam[p.lam] = per_lam.get(p.lam, 0) + 1
    tot: dict[str, list[int]] = {}
    ex: dict[str, str] = {}
    for i, p in enumerate(grid):
        n = math.ceil(cfg.containment_samples / per_lam[p.lam])
        for c in P.check_containments(p, n, cfg.rng(200 + i)):
            t = tot.setdefault(c.name, [0, 0])
            t[0] += c.samples
            t[1] += c.violations
            if c.example and c.name not in ex:
                ex[c.name] = c.example
    return [_row(f"containment {name}", v == 0, f"{v} violations / {n} samples",
                 "0 violations", ex.get(name, "")) for name, (n, v) in tot.items()]


def check_compositions(cfg: SuiteConfig) -> list[ClaimRow]:
    rows = []
    for side, fn in (("below", compose_pi_a), ("above", compose_pi_e)):
        grid = cfg.grid(side)
        if not grid:
            continue
        worst, n, handoff, wider = 0.0, 0, 0, []
        per = max(2, math.ceil(cfg.composition_samples / len(grid)))
        for p in grid:
            gm = fn(p)
            ys = gm.inputs(per)
            comps = [gm(y) for y in ys]
            n += len(comps)
            worst = max(worst, max(c.rel_y_error for c in comps))
            handoff += sum(not c.k2_entered_exit for c in comps)
            out = [c.direct.y for c in comps]
            if max(out) - min(out) >= ys.max() - ys.min():
                wider.append(f"lam={p.lam} delta={p.delta} nu={p.nu}")
        name = "attracting" if side == "below" else "escape"
        rows.append(_row(f"composed chart map equals direct map ({name})", worst <= 1e-8,
                         f"max relative y difference {worst:.3g} over {n} inputs",
                         "<= 1e-8",
                         f"{handoff} K2 passages handed off at the x-window"))
        rows.append(_row(f"image narrower than input ({name})", not wider,
                         f"{len(grid) - len(wider)}/{len(grid)} grid points",
                         "all grid points", "; ".join(wider[:3])))
    return rows


def check_exit_height(cfg: SuiteConfig, lam: float = 2.0) -> list[ClaimRow]:
    if not any(v > 1 for v in cfg.theorem_lams()):
        return [ClaimRow("escape exit height exponent", "skip", "", "",
                         "no lambda > 1 in grid")]
    eps = np.asarray(cfg.exit_eps)
    k = exit_heights(lam, eps, lambda e: e / 10.0, 3, cfg.rho)
    fit = scaling_fit(eps, k)
    lo, hi = cfg.exit_band
    ok = lo <= fit.slope <= hi and fit.r_squared >= 0.98
    ratio = k / eps ** (1 / 3)
    rows = [_row("escape exit height exponent", ok,
                 f"slope {fit.slope:.4f}, r2 {fit.r_squared:.5f}",
                 f"slope in [{lo}, {hi}], r2 >= 0.98",
                 f"lam={lam}, h=eps/10, eps {eps.min():g}..{eps.max():g}"),
            _row("escape exit height within O(eps^(1/3))",
                 fit.slope >= 1 / 3 and bool(np.all(np.diff(ratio) >= 0)),
                 f"k/eps^(1/3) from {ratio[0]:.4g} to {ratio[-1]:.4g}",
                 "k/eps^(1/3) bounded as eps decreases")]
    return rows


def contraction_points(cfg: SuiteConfig) -> list[tuple[Params, P.ContractionResult]]:
    out = []
    for d in cfg.contraction_deltas:
        p = Params.from_chart(cfg.contraction_lam, d, cfg.contraction_nu, cfg.rho)
        out.append((p, P.contraction_sweep("R1", p, 64)))
    return out


def check_contraction(cfg: SuiteConfig) -> list[ClaimRow]:
    pts = contraction_points(cfg)
    inv = [1 / (p.nu * p.delta) for p, _ in pts]
    rates = [c.rate for _, c in pts]
    narrower = all(c.width_out < c.width_in for _, c in pts)
    fit = linear_fit(inv, np.log(rates))
    ok = narrower and fit.slope < 0 and fit.r_squared >= 0.95 and len(pts) >= 5
    return [_row("K1 contraction rate affine in 1/(nu delta)", ok,
                 f"slope {fit.slope:.4g}, r2 {fit.r_squared:.4f}, "
                 f"rates {min(rates):.3g}..{max(rates):.3g}",
                 "width_out < width_in, slope < 0, r2 >= 0.95",
                 f"lam={cfg.contraction_lam}, nu={cfg.contraction_nu}, {len(pts)} deltas")]


# The image of the entry segment is nearly a single point, so each (eps, h)
# contributes one discrete crossing phase; two incommensurate h/eps ratios per
# eps spread the phases so the max over a half approaches its supremum.
_CLOSE_GRID = tuple((float(e), float(e * f)) for e in np.geomspace(0.005, 0.04, 8)
                    for f in (0.1, 0.17))


def check_closeness(cfg: SuiteConfig) -> list[ClaimRow]:
    rows = []
    for side, regime, lam, rate in (("below", "attracting", 0.5, "h eps"),
                                    ("above", "escape", 2.0, "h (eps + rho^2)")):
        if not cfg.grid(side):
            continue
        res = closeness_study(regime, lam, _CLOSE_GRID, cfg.closeness_samples, cfg.rho)
        rows.append(_row(f"closeness to the {regime} exit", res.drift <= 0.25,
                         f"K calibration {res.k_calibration:.4g}, "
                         f"validation {res.k_validation:.4g}",
                         f"dist <= K {rate}, K stable within 25%",
                         f"lam={lam}, {len(_CLOSE_GRID)} (eps, h) points"))
    return rows


def check_euler_order(cfg: SuiteConfig) -> list[ClaimRow]:
    T = 2.0
    p = Params(0.5, 0.05, T / cfg.convergence_steps[0], cfg.rho)
    hs = [T / n for n in cfg.convergence_steps]
    fit, errs = convergence_study(p, hs, T=T)
    pair = errs[0] / errs[2] / (hs[0] / hs[2])
    ok = fit is not None and abs(fit.slope - 1) <= 0.1
    return [_row("Euler global error order one", ok,
                 f"slope {fit.slope:.4f}, r2 {fit.r_squared:.5f}, "
                 f"error ratio per h ratio {pair:.3f}", "slope 1 +- 0.1",
                 f"eps=0.05, T={T}, h {min(hs):g}..{max(hs):g}")]


def canard_diagonal(k_max: int = 12) -> tuple[float, bool, bool]:
    """Diagonal checks at ``lam = 1`` with dyadic constants.

    Returns the largest Euler-vs-reference error (relative to
    ``max(|x|, 1)``), whether every Euler iterate had ``x == y`` and whether
    the K2 orbit on the diagonal stayed on it without reaching an exit.
    """
    eps = 2.0 ** -5
    worst, exact = 0.0, True
    for k in range(6, k_max + 1):
        h = 2.0 ** -k
        T = 1.0
        n = int(T / h)
        p = Params(1.0, eps, h)
        s0 = State(-1.0, -1.0, eps, h)
        tr = iterate(s0, p, n, cap=n)
        exact &= bool(np.all(tr.xs == tr.ys))
        ref = reference_flow(s0, p, T)
        e = tr.last
        worst = max(worst, max(abs(e.x - ref.x), abs(e.y - ref.y)) / max(abs(ref.x), 1.0))
    p = Params.from_chart(1.0, 0.1, 0.01)
    s = 0.1 ** -0.5
    q = C.K2Point(-s, -s, math.sqrt(p.eps), math.sqrt(p.eps) * p.h)
    rep = P.pi_2(q, p, "attracting", check_regime=False, check_entry=False,
                 cap=P.chart_cap(p))
    on_diag = bool(np.all(rep.path[:, 0] == rep.path[:, 1]))
    return worst, exact, (not rep.entered) and on_diag


def check_canard(cfg: SuiteConfig) -> list[ClaimRow]:
    worst, exact, k2 = canard_diagonal()
    eps_m = np.finfo(float).eps
    return [_row("canard diagonal exactness (lam=1)", worst <= 4 * eps_m and exact and k2,
                 f"Euler vs reference {worst:.3g}, x==y every step: {exact}, "
                 f"K2 diagonal orbit stays and never exits: {k2}",
                 "error <= 4 machine eps; diagonal invariant",
                 "outside the passage analysis; checked on its own")]


CHECKS: tuple[tuple[str, Callable[[SuiteConfig], list[ClaimRow]], bool], ...] = (
    ("conjugacy", check_conjugacy, False),
    ("round_trips", check_round_trips, False),
    ("conserved_products", check_conserved_products, False),
    ("residual_order", check_residual_order, False),
    ("eigenvalues", check_eigenvalues, False),
    ("transition_time", check_transition_time, True),
    ("k2_passages", check_k2_passages, True),
    ("containments", check_containments, True),
    ("compositions", check_compositions, True),
    ("exit_height", check_exit_height, True),
    ("contraction", check_contraction, True),
    ("closeness", check_closeness, True),
    ("euler_order", check_euler_order, False),
    ("canard", check_canard, False),
)


def _run_check(name: str, fn, cfg: SuiteConfig) -> list[ClaimRow]:
    t = time.perf_counter()
    try:
        rows = fn(cfg)
    except Exception as exc:  # a crashing check is a failing row
        log.exception("check %s crashed", name)
        rows = [ClaimRow(name, "fail", "", "", f"{type(exc).__name__}: {exc}")]
    log.info("%s: %.2f s", name, time.perf_counter() - t)
    return rows


def run_claim_suite(cfg: SuiteConfig | None = None,
                    only: Sequence[str] | None = None) -> list[ClaimRow]:
    """Run every check and return the report rows in a fixed order.

    Raises
    ------
    ParameterError
        If a grid point violates the passage hypotheses; nothing is run.
    """
    cfg = cfg or SuiteConfig()
    cfg.validate()
    todo = [(n, f, thm) for n, f, thm in CHECKS if only is None or n in only]
    theorem_ok = bool(cfg.theorem_lams())
    jobs = []
    for name, fn, theorem in todo:
        if theorem and not theorem_ok:
            jobs.append((name, None))
        else:
            jobs.append((name, fn))

    def go(job):
        name, fn = job
        if fn is None:
            return [ClaimRow(name, "skip", "", "",
                             "out of theorem scope (canard, lambda = 1)")]
        return _run_check(name, fn, cfg)

    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            parts = list(ex.map(go, jobs))
    else:
        parts = [go(j) for j in jobs]
    return [r for part in parts for r in part]


def report_csv(rows: Sequence[ClaimRow]) -> str:
    return csv_text(("claim", "status", "measured", "expected", "note"),
                    [(r.claim, r.status, r.measured, r.expected, r.note) for r in rows])


def report_table(rows: Sequence[ClaimRow]) -> str:
    w = max([len(r.claim) for r in rows] + [5])
    lines = [f"{'claim'.ljust(w)}  status  measured"]
    for r in rows:
        lines.append(f"{r.claim.ljust(w)}  {r.status.ljust(6)}  {r.measured}")
    fails = sum(r.status == "fail" for r in rows)
    lines.append(f"{len(rows)} rows, {fails} failing")
    return "\n".join(lines) + "\n"
