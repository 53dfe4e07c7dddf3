"""Compiled inner loops.

Every kernel repeats the arithmetic of the pure-Python step functions in the
same operation order, so a compiled orbit is bitwise identical to iterating
the Python step.  The tests check this directly.

Status codes shared by all kernels:

0  finished normally (n steps done, hit confirmed, or target entered)
1  non-finite iterate
2  iterate beyond the divergence bound
3  cap reached without a confirmed hit / entry
4  desingularization denominator became non-positive
5  trajectory passed the target without entering it (first-entry modes)
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

OK, NONFINITE, BOUND, CAP, DENOM, PASSED = 0, 1, 2, 3, 4, 5

_CHUNK = 4096


@njit(cache=True, nogil=True)
def _grow(buf, need):
    if need < buf.shape[0]:
        return buf
    size = max(2 * buf.shape[0], need + 1)
    out = np.empty((size, buf.shape[1]))
    out[: buf.shape[0]] = buf
    return out


@njit(cache=True, nogil=True)
def _box_dist(z, lo, hi):
    acc = 0.0
    for i in range(z.shape[0]):
        if z[i] < lo[i]:
            d = lo[i] - z[i]
            acc += d * d
        elif z[i] > hi[i]:
            d = z[i] - hi[i]
            acc += d * d
    return math.sqrt(acc)


@njit(cache=True, nogil=True)
def euler_orbit(x, y, eps, h, lam, n, bound, mode, lo, hi, patience, store):
    """Iterate the Euler map in original coordinates.

    mode 0 runs exactly ``n`` steps; mode 1 stops at the argmin of the distance
    from ``(x, y)`` to the box ``[lo, hi]`` with the patience rule (counted
    from the first improvement on the start point), with ``n`` acting as the
    cap.

    Returns ``(traj, last, status, hit, hit_dist, bracketed)``; ``traj`` holds
    rows ``(x, y)`` for indices ``0..last`` when ``store`` is set, otherwise
    the single row of the final iterate.
    """
    buf = np.empty((_CHUNK if store else 1, 2))
    if store:
        buf[0, 0] = x
        buf[0, 1] = y
    z = np.empty(2)
    z[0] = x
    z[1] = y
    best = _box_dist(z, lo, hi) if mode == 1 else 0.0
    hit = 0
    since = 0
    armed = False
    bracketed = False
    status = OK
    k = 0
    while k < n:
        x, y = x + h * (x * x - y * y + lam * eps), y + eps * h
        k += 1
        if store:
            buf = _grow(buf, k)
            buf[k, 0] = x
            buf[k, 1] = y
        if not (math.isfinite(x) and math.isfinite(y)):
            status = NONFINITE
            break
        if abs(x) > bound or abs(y) > bound:
            status = BOUND
            break
        if mode == 1:
            z[0] = x
            z[1] = y
            d = _box_dist(z, lo, hi)
            if d < best:
                best = d
                hit = k
                since = 0
                armed = True
            elif armed:
                since += 1
                bracketed = True
                if since >= patience:
                    break
    if mode == 1 and status == OK and since < patience:
        status = CAP
    if store:
        return buf[: k + 1], k, status, hit, best, bracketed
    buf[0, 0] = x
    buf[0, 1] = y
    return buf[:1], k, status, hit, best, bracketed


@njit(cache=True, nogil=True)
def _step_k1(r, y, e, h, lam):
    f = 1.0 - y * y + lam * e
    d = 1.0 - h * f
    return r * d, (y + e * h) / d, e / (d * d), h * d, d


@njit(cache=True, nogil=True)
def _step_k3(r, y, e, h, lam):
    f = 1.0 - y * y + lam * e
    d = 1.0 + h * f
    return r * d, (y + e * h) / d, e / (d * d), h * d, d


@njit(cache=True, nogil=True)
def radial_orbit(chart, z0, lam, n, bound, mode, lo, hi, tol, patience,
                 abort_idx, abort_below):
    """Iterate the chart-K1 (``chart=1``) or chart-K3 (``chart=3``) map.

    Coordinates are ordered ``(r, y, eps, h)``.  mode 0 runs ``n`` steps;
    mode 1 stops at first entry into the closed box ``[lo-tol, hi+tol]`` and
    reports ``PASSED`` once ``z[abort_idx] < abort_below``; mode 2 stops at the
    argmin distance to the box with the patience rule, counted only after the
    first improvement on the start point (orbits in K1 and K3 may first move
    away from the exit before turning towards it).  ``n`` is the cap.

    Returns ``(traj, last, status, hit, hit_dist)``.
    """
    buf = np.empty((_CHUNK, 4))
    buf[0] = z0
    r, y, e, h = z0[0], z0[1], z0[2], z0[3]
    z = z0.copy()
    best = _box_dist(z, lo, hi)
    hit = 0
    since = 0
    armed = False
    status = OK
    k = 0
    if mode == 1:
        inside = True
        for i in range(4):
            if z[i] < lo[i] - tol or z[i] > hi[i] + tol:
                inside = False
        if inside:
            return buf[:1], 0, OK, 0, 0.0
    while k < n:
        if chart == 1:
            r, y, e, h, d = _step_k1(r, y, e, h, lam)
        else:
            r, y, e, h, d = _step_k3(r, y, e, h, lam)
        k += 1
        buf = _grow(buf, k)
        buf[k, 0] = r
        buf[k, 1] = y
        buf[k, 2] = e
        buf[k, 3] = h
        if not d > 0.0:
            status = DENOM
            break
        if not (math.isfinite(r) and math.isfinite(y) and math.isfinite(e)
                and math.isfinite(h)):
            status = NONFINITE
            break
        if abs(y) > bound:
            status = BOUND
            break
        z[0] = r
        z[1] = y
        z[2] = e
        z[3] = h
        if mode == 1:
            inside = True
            for i in range(4):
                if z[i] < lo[i] - tol or z[i] > hi[i] + tol:
                    inside = False
            if inside:
                hit = k
                best = 0.0
                break
            if abort_idx >= 0 and z[abort_idx] < abort_below:
                status = PASSED
                break
        elif mode == 2:
            dd = _box_dist(z, lo, hi)
            if dd < best:
                best = dd
                hit = k
                since = 0
                armed = True
            elif armed:
                since += 1
                if since >= patience:
                    break
    if status == OK and k >= n and mode != 0:
        if mode == 1 or since < patience:
            status = CAP
    return buf[: k + 1], k, status, hit, best


@njit(cache=True, nogil=True)
def k2_orbit(z0, lam, n, bound, regime, xlo, xhi, ylo, yhi, yhi_open, tol):
    """Iterate the chart-K2 map towards an exit window.

    ``regime`` 0 targets the attracting exit (a narrow x-window near
    ``x2 = -delta**-0.5`` with ``y2 > 0``), 1 the escape exit (x-window to the
    right of ``delta**-0.5``), and 2 just runs ``n`` steps.  The run stops at
    the first entry into ``[xlo, xhi] x [ylo, yhi]``, or with ``PASSED`` once
    the orbit has crossed the x-window without entering.

    Returns ``(traj, last, status, gate)`` where ``gate`` is the first index
    at which the orbit reached the x-window (or -1).
    """
    buf = np.empty((_CHUNK, 4))
    buf[0] = z0
    x, y, r, h = z0[0], z0[1], z0[2], z0[3]
    status = OK
    gate = -1
    k = 0
    while True:
        if regime != 2:
            if regime == 0:
                reached = y > 0.0 and x <= xhi + tol
            else:
                reached = x >= xlo - tol
            if reached and gate < 0:
                gate = k
            if reached:
                inx = x >= xlo - tol and x <= xhi + tol
                if yhi_open:
                    iny = y >= ylo - tol and y < yhi
                else:
                    iny = y >= ylo - tol and y <= yhi + tol
                if inx and iny:
                    break
                if not inx:
                    status = PASSED
                    break
        if k >= n:
            if regime != 2:
                status = CAP
            break
        x, y = x + h * (x * x - y * y + lam), y + h
        k += 1
        buf = _grow(buf, k)
        buf[k, 0] = x
        buf[k, 1] = y
        buf[k, 2] = r
        buf[k, 3] = h
        if not (math.isfinite(x) and math.isfinite(y)):
            status = NONFINITE
            break
        if abs(x) > bound or abs(y) > bound:
            status = BOUND
            break
    return buf[: k + 1], k, status, gate
