"""Plain-Python reference loops, written independently of the package.

They share no code with the compiled kernels or with ``transcrit``'s own
iteration helpers, and serve as the second route for frozen values.
"""
from __future__ import annotations

import math


def euler_argmin(x, y, eps, h, lam, box, patience=8, cap=10**7):
    """Argmin of the distance to an (x, y) box along the Euler orbit.

    ``box`` is ``((xlo, xhi), (ylo, yhi))``.  Same rule as documented for the
    package: the hit is the first strict running minimum after which
    ``patience`` further steps bring no improvement; counting starts once the
    start point has been improved on.
    """
    def dist(px, py):
        dx = max(box[0][0] - px, 0.0, px - box[0][1])
        dy = max(box[1][0] - py, 0.0, py - box[1][1])
        return math.hypot(dx, dy)

    best, hit, since, armed = dist(x, y), 0, 0, False
    best_pt = (x, y)
    for k in range(1, cap + 1):
        x, y = x + h * (x * x - y * y + lam * eps), y + eps * h
        d = dist(x, y)
        if d < best:
            best, hit, since, armed, best_pt = d, k, 0, True, (x, y)
        elif armed:
            since += 1
            if since >= patience:
                return hit, best, best_pt
    raise RuntimeError("cap reached")


def k1_first_entry(r, y, e, h, lam, out_box, cap=10**6):
    """Steps of the chart-K1 map until ``(r, eps, h)`` enters ``out_box``."""
    (rlo, rhi), (elo, ehi), (hlo, hhi) = out_box
    for k in range(1, cap + 1):
        f = 1.0 - y * y + lam * e
        d = 1.0 - h * f
        r, y, e, h = r * d, (y + e * h) / d, e / (d * d), h * d
        if rlo <= r <= rhi and elo <= e <= ehi and hlo <= h <= hhi:
            return k, (r, y, e, h)
    raise RuntimeError("cap reached")
