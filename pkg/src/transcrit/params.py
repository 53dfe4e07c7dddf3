"""Problem constants for the discretized transcritical normal form."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError

__all__ = ["Params", "OMEGA_DEFAULTS"]

# Exit-window constant for the K2 escape set, keyed by lambda.  Each value is
# 1.25x the largest y2 * delta**(1/6) seen over the calibration sweep run by
# ``passage.calibrate_omega`` (lambda=2: 2000 starts over delta in {0.05, 0.1},
# nu in {0.005, 0.01}; seeds 0 and 1 both give 0.2497, rounded up here).
OMEGA_DEFAULTS: dict[float, float] = {2.0: 0.25}


@dataclass(frozen=True)
class Params:
    """Constants of the map and of the blow-up analysis.

    Parameters
    ----------
    lam : float
        Normal-form constant multiplying eps in the fast equation.
    eps : float
        Time-scale separation, ``eps >= 0``.
    h : float
        Step size, ``h > 0``.
    rho : float
        Abscissa of the entry and exit sections.
    delta : float, optional
        Ceiling of the chart-K1 eps-coordinate.  Defaults to ``4 eps / rho**2``
        so that the section at ``r1 = rho`` sits at ``eps1 = delta / 4``.
    c : float, optional
        Contraction parameter in ``(0, nu)``; defaults to ``nu / 2``.
    omega : float, optional
        Exit-window constant of the K2 escape set.  Falls back to
        ``OMEGA_DEFAULTS`` when lambda is tabulated there.

    Notes
    -----
    Construction only checks that the numbers make sense for the map itself.
    The hypotheses of the passage analysis are checked separately by
    :meth:`require_theorem_regime` so that degenerate cases (``eps = 0``) can
    still be iterated.
    """

    lam: float
    eps: float
    h: float
    rho: float = 1.0
    delta: float | None = None
    c: float | None = None
    omega: float | None = None

    def __post_init__(self) -> None:
        for name in ("lam", "eps", "h", "rho"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.h <= 0.0:
            raise ParameterError(f"h must be positive, got {self.h!r}")
        if self.rho <= 0.0:
            raise ParameterError(f"rho must be positive, got {self.rho!r}")
        if self.eps < 0.0:
            raise ParameterError(f"eps must be non-negative, got {self.eps!r}")
        if self.delta is None:
            object.__setattr__(self, "delta", 4.0 * self.eps / self.rho**2)
        if self.c is None:
            object.__setattr__(self, "c", 0.5 * self.rho * self.h)
        if self.omega is None and self.lam in OMEGA_DEFAULTS:
            object.__setattr__(self, "omega", OMEGA_DEFAULTS[self.lam])
        for name in ("delta", "c"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.omega is not None:
            object.__setattr__(self, "omega", float(self.omega))

    @classmethod
    def from_chart(cls, lam: float, delta: float, nu: float, rho: float = 1.0,
                   **kw) -> "Params":
        """Build parameters from chart-level constants.

        The original-space values follow from the entry section
        ``r1 = rho, eps1 = delta/4, h1 = nu``: ``eps = rho**2 delta / 4`` and
        ``h = nu / rho``.
        """
        return cls(lam=lam, eps=rho * rho * delta / 4.0, h=nu / rho, rho=rho,
                   delta=delta, **kw)

    @property
    def nu(self) -> float:
        return self.rho * self.h

    @property
    def gamma(self) -> float:
        return 2.0 * abs(self.lam - 1.0) + abs(self.lam)

    def hypothesis_violations(self) -> list[str]:
        """List every violated hypothesis of the passage analysis."""
        out = []
        r3h = self.h * self.rho**3
        if not (0.0 < r3h < self.eps):
            out.append(f"need 0 < h*rho^3 < eps (h*rho^3={r3h!r}, eps={self.eps!r})")
        if not (0.0 < self.delta):
            out.append(f"need delta > 0 (delta={self.delta!r})")
        if not self.nu < self.delta:
            out.append(f"need nu=rho*h < delta (nu={self.nu!r}, delta={self.delta!r})")
        if not self.nu < 0.125:
            out.append(f"need nu < 1/8 (nu={self.nu!r})")
        if not abs(self.lam * self.delta) <= 1.0:
            out.append(f"need |lambda*delta| <= 1 (got {self.lam * self.delta!r})")
        if not (0.0 < self.c < self.nu):
            out.append(f"need 0 < c < nu (c={self.c!r}, nu={self.nu!r})")
        if self.eps > self.rho**2 * self.delta:
            out.append(f"need eps <= rho^2*delta (eps={self.eps!r})")
        return out

    def require_theorem_regime(self, lam_side: str | None = None) -> None:
        """Raise :class:`ParameterError` unless all hypotheses hold.

        Parameters
        ----------
        lam_side : {"below", "above", None}
            Additionally require ``lam < 1`` or ``lam > 1``.
        """
        bad = self.hypothesis_violations()
        if lam_side == "below" and not self.lam < 1.0:
            bad.append(f"need lambda < 1 (lambda={self.lam!r})")
        if lam_side == "above" and not self.lam > 1.0:
            bad.append(f"need lambda > 1 (lambda={self.lam!r})")
        if lam_side is None and self.lam == 1.0:
            bad.append("lambda = 1 is the canard case, outside the passage analysis")
        if bad:
            raise ParameterError("; ".join(bad))
