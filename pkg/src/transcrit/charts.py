"""Blow-up charts of the degenerate origin and the maps they carry.

Chart coordinates relate to the original ones by

* K1 (entry):   x = -r1,   y = r1*y1,  eps = r1**2*eps1,  h = h1/r1
* K2 (scaling): x = r2*x2, y = r2*y2,  eps = r2**2,       h = h2/r2
* K3 (exit):    x = r3,    y = r3*y3,  eps = r3**2*eps3,  h = h3/r3

In K1 and K3 the Euler map becomes a map that is regular at ``r = 0``; in K2
it is the Euler map of ``x2' = x2**2 - y2**2 + lam, y2' = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

from .core_map import State
from .errors import ChartDomainError, DesingularizationError, DivergenceError
from .params import Params
from .sections import Interval, SectionSet

__all__ = [
    "K1Point",
    "K2Point",
    "K3Point",
    "ChartPoint",
    "blow_down",
    "lift_to_k1",
    "lift_to_k2",
    "lift_to_k3",
    "k12",
    "k21",
    "k32",
    "k23",
    "step_k1",
    "step_k2",
    "step_k3",
    "chart_of",
    "DomainBoxes",
    "domain_boxes",
    "classify_chart",
]


class K1Point(NamedTuple):
    r1: float
    y1: float
    eps1: float
    h1: float


class K2Point(NamedTuple):
    x2: float
    y2: float
    r2: float
    h2: float


class K3Point(NamedTuple):
    r3: float
    y3: float
    eps3: float
    h3: float


ChartPoint = Union[K1Point, K2Point, K3Point]


def chart_of(cp: ChartPoint) -> str:
    """Chart tag of a chart point: ``"K1"``, ``"K2"`` or ``"K3"``."""
    if isinstance(cp, K1Point):
        return "K1"
    if isinstance(cp, K2Point):
        return "K2"
    if isinstance(cp, K3Point):
        return "K3"
    raise TypeError(f"not a chart point: {cp!r}")


def blow_down(cp: ChartPoint) -> State:
    """Original-space state of a chart point (radius must be positive)."""
    if isinstance(cp, K2Point):
        x2, y2, r2, h2 = cp
        if not r2 > 0:
            raise ChartDomainError("r2", r2, "r2 > 0 (h = h2/r2)")
        return State(r2 * x2, r2 * y2, r2 * r2, h2 / r2)
    if isinstance(cp, K1Point):
        r, y, e, h = cp
        if not r > 0:
            raise ChartDomainError("r1", r, "r1 > 0 (h = h1/r1)")
        return State(-r, r * y, r * r * e, h / r)
    if isinstance(cp, K3Point):
        r, y, e, h = cp
        if not r > 0:
            raise ChartDomainError("r3", r, "r3 > 0 (h = h3/r3)")
        return State(r, r * y, r * r * e, h / r)
    raise TypeError(f"not a chart point: {cp!r}")


def _need_h(s: State) -> None:
    if not s.h > 0:
        raise ChartDomainError("h", s.h, "h > 0")


def lift_to_k1(s: State) -> K1Point:
    _need_h(s)
    if not s.x < 0:
        raise ChartDomainError("x", s.x, "x < 0 in chart K1")
    r = -s.x
    return K1Point(r, s.y / r, s.eps / (r * r), s.h * r)


def lift_to_k2(s: State) -> K2Point:
    _need_h(s)
    if not s.eps > 0:
        raise ChartDomainError("eps", s.eps, "eps > 0 in chart K2")
    r = math.sqrt(s.eps)
    return K2Point(s.x / r, s.y / r, r, s.h * r)


def lift_to_k3(s: State) -> K3Point:
    _need_h(s)
    if not s.x > 0:
        raise ChartDomainError("x", s.x, "x > 0 in chart K3")
    r = s.x
    return K3Point(r, s.y / r, s.eps / (r * r), s.h * r)


# Chart changes.  The factor q = eps**-0.5 is computed once and reused, and the
# radial/step coordinates are divided by q rather than multiplied by
# eps**0.5; both are the displayed formulas in exact arithmetic, and sharing q
# keeps the round trips within two ulp.

def k12(p: K1Point) -> K2Point:
    r1, y1, e1, h1 = p
    if not e1 > 0:
        raise ChartDomainError("eps1", e1, "eps1 > 0 for k12")
    q = e1 ** -0.5
    return K2Point(-q, q * y1, r1 / q, h1 / q)


def k21(p: K2Point) -> K1Point:
    x2, y2, r2, h2 = p
    if not x2 < 0:
        raise ChartDomainError("x2", x2, "x2 < 0 for k21")
    return K1Point(-x2 * r2, -y2 / x2, x2 ** -2.0, -x2 * h2)


def k32(p: K3Point) -> K2Point:
    r3, y3, e3, h3 = p
    if not e3 > 0:
        raise ChartDomainError("eps3", e3, "eps3 > 0 for k32")
    q = e3 ** -0.5
    return K2Point(q, q * y3, r3 / q, h3 / q)


def k23(p: K2Point) -> K3Point:
    x2, y2, r2, h2 = p
    if not x2 > 0:
        raise ChartDomainError("x2", x2, "x2 > 0 for k23")
    return K3Point(x2 * r2, y2 / x2, x2 ** -2.0, x2 * h2)


def step_k1(p: K1Point, params: Params) -> K1Point:
    """Euler map in chart K1.

    With ``F1 = 1 - y1**2 + lam*eps1`` and ``D = 1 - h1*F1``::

        r1 -> r1*D,  y1 -> (y1 + eps1*h1)/D,  eps1 -> eps1/D**2,  h1 -> h1*D

    Raises
    ------
    DesingularizationError
        If ``D <= 0``.
    """
    r, y, e, h = p
    f = 1.0 - y * y + params.lam * e
    d = 1.0 - h * f
    if not d > 0:
        raise DesingularizationError("1-h1*F1", d, "1 - h1*F1 > 0")
    return K1Point(r * d, (y + e * h) / d, e / (d * d), h * d)


def step_k2(p: K2Point, params: Params) -> K2Point:
    """Euler map in chart K2; ``r2`` and ``h2`` pass through untouched."""
    x, y, r, h = p
    x1 = x + h * (x * x - y * y + params.lam)
    y1 = y + h
    if not (math.isfinite(x1) and math.isfinite(y1)):
        raise DivergenceError(1, (x1, y1, r, h))
    return K2Point(x1, y1, r, h)


def step_k3(p: K3Point, params: Params) -> K3Point:
    """Euler map in chart K3 (``D = 1 + h3*F3``, otherwise as in K1)."""
    r, y, e, h = p
    f = 1.0 - y * y + params.lam * e
    d = 1.0 + h * f
    if not d > 0:
        raise DesingularizationError("1+h3*F3", d, "1 + h3*F3 > 0")
    return K3Point(r * d, (y + e * h) / d, e / (d * d), h * d)


@dataclass(frozen=True)
class DomainBoxes:
    """Working domains of the passage analysis, one box per name."""

    D1: SectionSet
    D1_hat: SectionSet
    D2: SectionSet
    D3: SectionSet
    D3_hat: SectionSet


def domain_boxes(p: Params) -> DomainBoxes:
    """Domain boxes built from the parameters.

    ``D1``: ``0 <= r1 <= rho, 0 <= eps1 <= 2 delta, 0 <= h1 <= nu``;
    ``D1_hat``: ``rho/2 <= r1 <= rho, delta/4 <= eps1 <= delta,
    nu/2 <= h1 <= nu``; ``D2``: ``delta**0.5 rho/2 <= r2 <= delta**0.5 rho``,
    ``delta**0.5 nu/2 <= h2 <= delta**0.5 nu``; ``D3``/``D3_hat`` mirror the K1
    boxes with ``eps3 <= delta``.  Slow coordinates are unrestricted.
    """
    rho, d, nu = p.rho, p.delta, p.nu
    sd = math.sqrt(d)
    return DomainBoxes(
        D1=SectionSet.build("D1", "K1", r1=Interval(0.0, rho), eps1=Interval(0.0, 2 * d),
                            h1=Interval(0.0, nu)),
        D1_hat=SectionSet.build("D1_hat", "K1", r1=Interval(rho / 2, rho),
                                eps1=Interval(d / 4, d), h1=Interval(nu / 2, nu)),
        D2=SectionSet.build("D2", "K2", r2=Interval(sd * rho / 2, sd * rho),
                            h2=Interval(sd * nu / 2, sd * nu)),
        D3=SectionSet.build("D3", "K3", r3=Interval(0.0, rho), eps3=Interval(0.0, d),
                            h3=Interval(0.0, nu)),
        D3_hat=SectionSet.build("D3_hat", "K3", r3=Interval(rho / 2, rho),
                                eps3=Interval(d / 4, d), h3=Interval(nu / 2, nu)),
    )


def classify_chart(s: State, p: Params) -> str:
    """Chart in which a state is naturally described.

    K2 when ``eps > 0``, its K2 image has ``(r2, h2)`` in ``D2`` and
    ``|x2| <= (delta (1 - 2 nu))**-0.5`` (the x-extent of the K2 entry set);
    otherwise K1 for ``x < 0`` and K3 for ``x > 0``.  ``x = 0`` outside the K2
    region returns ``"none"``.
    """
    if s.eps > 0 and s.h > 0:
        k2p = lift_to_k2(s)
        x_ext = (p.delta * (1.0 - 2.0 * p.nu)) ** -0.5
        if domain_boxes(p).D2.contains(k2p) and abs(k2p.x2) <= x_ext:
            return "K2"
    if s.x < 0:
        return "K1"
    if s.x > 0:
        return "K3"
    return "none"
