import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from transcrit import (BranchId, K1Point, K2Point, K3Point, Params, State, blow_down,
                       classify_branch, euler_step, k12, k21, k23, k32, lift_to_k1,
                       lift_to_k2, lift_to_k3, step_k1, step_k2, step_k3)
from transcrit.experiments import scaling_fit
from transcrit.io import fmt
from transcrit.sections import Interval

coord = st.floats(-5.0, 5.0, allow_nan=False)
pos = st.floats(1e-4, 0.5, allow_nan=False)
lam = st.floats(-2.0, 3.0, allow_nan=False)


def bits(v):
    return np.float64(v).tobytes()


@given(coord, coord, pos, pos, lam)
def test_eps_and_h_pass_through_bitwise(x, y, e, h, lm):
    s = euler_step(State(x, y, e, h), Params(lm, e, h))
    assert bits(s.eps) == bits(e) and bits(s.h) == bits(h)


@given(coord, pos, pos)
def test_diagonal_invariance(x, e, h):
    s = euler_step(State(x, x, e, h), Params(1.0, e, h))
    assert abs(s.x - s.y) <= 4 * np.finfo(float).eps * max(abs(x), 1.0)


SWAP = {BranchId.S_a_minus: BranchId.S_r_plus, BranchId.S_r_plus: BranchId.S_a_minus,
        BranchId.S_r_minus: BranchId.S_a_plus, BranchId.S_a_plus: BranchId.S_r_minus,
        BranchId.origin: BranchId.origin, BranchId.off_manifold: BranchId.off_manifold}


@given(coord, st.one_of(coord, st.just(None)), st.sampled_from([1.0, -1.0]))
def test_classify_branch_point_symmetry(x, y, sign):
    if y is None:
        y = sign * x
    a = classify_branch(State(x, y, 0.0, 0.1))
    b = classify_branch(State(-x, -y, 0.0, 0.1))
    assert b == SWAP[a]


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.009, -0.991), st.sampled_from([0.5, -0.5]))
def test_pi_a_is_deterministic(y0, lm):
    from transcrit import pi_a
    p = Params(lm, 0.02, 0.004)
    assert pi_a(y0, p) == pi_a(y0, p)


k1pts = st.builds(K1Point, st.floats(0.05, 1.0), st.floats(-1.5, 1.5), st.floats(1e-3, 0.3),
                  st.floats(1e-4, 0.02))
k2pts = st.builds(K2Point, st.floats(-8.0, 8.0), st.floats(-8.0, 8.0), st.floats(0.02, 0.5),
                  st.floats(1e-4, 0.01))
k3pts = st.builds(K3Point, st.floats(0.05, 1.0), st.floats(-0.9, 0.9), st.floats(1e-3, 0.3),
                  st.floats(1e-4, 0.02))


@given(st.one_of(k1pts, k2pts, k3pts), lam)
def test_conjugacy(cp, lm):
    p = Params(lm, 0.01, 0.001)
    step = {K1Point: step_k1, K2Point: step_k2, K3Point: step_k3}[type(cp)]
    a = blow_down(step(cp, p))
    b = euler_step(blow_down(cp), p)
    scale = max(abs(b.x), abs(b.y))
    assert abs(a.x - b.x) <= 1e-12 * scale and abs(a.y - b.y) <= 1e-12 * scale
    assert math.isclose(a.eps, b.eps, rel_tol=1e-12) and math.isclose(a.h, b.h, rel_tol=1e-12)


def close_ulp(a, b, n=2):
    return all(abs(u - v) <= n * math.ulp(max(abs(u), abs(v))) for u, v in zip(a, b))


@given(k1pts)
def test_k1_k2_round_trip(q):
    assert close_ulp(k21(k12(q)), q)


@given(k3pts)
def test_k3_k2_round_trip(q):
    assert close_ulp(k23(k32(q)), q)


@given(st.floats(-8.0, -0.1), st.floats(-8.0, 8.0), st.floats(0.02, 0.5), st.floats(1e-4, 0.01))
def test_k2_k1_round_trip(x, y, r, h):
    q = K2Point(x, y, r, h)
    assert close_ulp(k12(k21(q)), q)


@given(st.floats(0.1, 8.0), st.floats(-8.0, 8.0), st.floats(0.02, 0.5), st.floats(1e-4, 0.01))
def test_k2_k3_round_trip(x, y, r, h):
    q = K2Point(x, y, r, h)
    assert close_ulp(k32(k23(q)), q)


@given(st.floats(0.05, 2.0), coord, pos, pos)
def test_lift_blow_down_inverse(r, y, e, h):
    for s, lift in ((State(-r, y, e, h), lift_to_k1), (State(r, y, e, h), lift_to_k3),
                    (State(y, r, e, h), lift_to_k2)):
        back = blow_down(lift(s))
        assert close_ulp(back, s, 4)


@settings(max_examples=25, deadline=None)
@given(k1pts, st.sampled_from([-0.5, 0.5, 2.0]))
def test_k1_product_conserved(q, lm):
    p = Params(lm, 0.01, 0.001)
    c0 = q.eps1 * q.r1 * q.h1
    assume(abs(q.y1) < 1.0)
    for _ in range(200):
        try:
            q = step_k1(q, p)
        except Exception:
            break
        if not (0 < q.r1 < 1e3 and abs(q.y1) < 1e3):
            break
        assert math.isclose(q.eps1 * q.r1 * q.h1, c0, rel_tol=1e-12)


@given(st.floats(0.1, 3.0), st.floats(0.2, 2.0))
def test_scaling_fit_recovers_power(a, k):
    xs = np.geomspace(1e-3, 1e-1, 6)
    assert math.isclose(scaling_fit(xs, k * xs**a).slope, a, rel_tol=1e-9)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_number_round_trip(v):
    assert float(fmt(v)) == v


@given(st.floats(-10, 10), st.floats(0, 5), st.floats(-20, 20))
def test_interval_membership_matches_distance(lo, w, v):
    iv = Interval(lo, lo + w)
    assert iv.contains(v, tol=0.0) == (iv.distance(v) == 0.0)
