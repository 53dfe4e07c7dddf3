import math

import numpy as np
import pytest

from transcrit import (BranchId, DivergenceError, ParameterError, Params, State,
                       classify_branch, euler_step, iterate, pi_a, pi_e, reference_flow,
                       section_delta)

import oracles


def test_origin_without_eps_is_fixed():
    for lam in (-1.0, 0.5, 2.0):
        s = State(0.0, 0.0, 0.0, 0.01)
        assert euler_step(s, Params(lam, 0.0, 0.01)) == s


def test_diagonal_step_at_lambda_one():
    p = Params(1.0, 0.02, 0.005)
    s = euler_step(State(0.3, 0.3, 0.02, 0.005), p)
    assert s.x == s.y


def test_step_from_origin_with_eps():
    s = euler_step(State(0.0, 0.0, 0.01, 0.001), Params(2.0, 0.01, 0.001))
    assert s == State(2e-5, 1e-5, 0.01, 0.001)


def test_nonfinite_step_raises():
    with pytest.raises(DivergenceError):
        euler_step(State(1e200, 0.0, 0.0, 1.0), Params(0.5, 0.0, 1.0))


def test_iterate_zero_steps():
    s0 = State(-1.0, -1.0, 0.01, 0.001)
    tr = iterate(s0, Params(0.5, 0.01, 0.001), 0)
    assert len(tr) == 1 and tr[0] == s0 and tr.hit is None


def test_iterate_keeps_diagonal_at_lambda_one():
    tr = iterate(State(-1.0, -1.0, 0.01, 0.001), Params(1.0, 0.01, 0.001), 5000)
    assert np.array_equal(tr.xs, tr.ys)


def test_iterate_hit_is_within_one_step_of_exit_line():
    p = Params(0.5, 0.01, 0.001)
    tr = iterate(State(-1.0, -1.005, p.eps, p.h), p, 10**6, section_delta("a_out", p))
    assert tr.hit is not None and tr.hit.confirmed
    s = tr.last
    prev = tr[len(tr) - 2]
    assert abs(s.x + p.rho) <= p.h * abs(prev.x**2 - prev.y**2 + p.lam * p.eps)


def test_iterate_divergence_is_reported():
    with pytest.raises(DivergenceError):
        iterate(State(2.0, 0.0, 0.01, 0.1), Params(0.5, 0.01, 0.1), 10**4)


@pytest.mark.parametrize("pt,label", [((-1.0, -1.0), BranchId.S_a_minus),
                                      ((0.0, 0.0), BranchId.origin),
                                      ((1.0, -1.0), BranchId.S_r_minus),
                                      ((-1.0, 1.0), BranchId.S_a_plus),
                                      ((1.0, 1.0), BranchId.S_r_plus),
                                      ((0.5, 0.2), BranchId.off_manifold)])
def test_classify_branch(pt, label):
    assert classify_branch(State(*pt, 0.0, 0.1)) == label


def test_section_delta_entry_segment():
    p = Params(0.5, 0.01, 0.001)
    sec = section_delta("in", p, 0.05)
    assert sec.interval("x").lo == sec.interval("x").hi == -1.0
    y = sec.interval("y")
    assert (y.lo, y.hi, y.lo_open, y.hi_open) == (-1.05, -0.95, True, True)
    assert sec.contains((-1.0, -1.0, p.eps, p.h))
    assert not sec.contains((-1.0, -0.95, p.eps, p.h))


def test_section_delta_escape_segment():
    sec = section_delta("e_out", Params(2.0, 0.01, 0.001), 0.05)
    assert sec.interval("x").lo == 1.0
    assert (sec.interval("y").lo, sec.interval("y").hi) == (-0.05, 0.05)


def test_section_delta_rejects_bad_width():
    with pytest.raises(ParameterError):
        section_delta("in", Params(0.5, 0.01, 0.001), 0.0)


# Frozen from the plain-Python argmin loop in tests/oracles.py.
PI_A_INDEX = 200751
PI_A_DISTANCE = 2.650114641067347e-07
PI_E_INDEX = 104417
PI_E_Y = 0.04416999999808661


def test_pi_a_matches_reference_loop():
    p = Params(0.5, 1e-2, 1e-3)
    s, k = pi_a(-1.0, p)
    assert k == PI_A_INDEX
    assert abs(s.x + 1.0) == pytest.approx(PI_A_DISTANCE, rel=1e-12)
    assert abs(s.x + 1.0) <= 1.0 * p.h * p.eps


def test_pi_a_reference_loop_agrees():
    p = Params(0.5, 1e-2, 1e-3)
    y = section_delta("a_out", p).interval("y")
    k, dist, pt = oracles.euler_argmin(-1.0, -1.0, p.eps, p.h, p.lam,
                                       ((-1.0, -1.0), (y.lo, y.hi)))
    s, kk = pi_a(-1.0, p)
    assert (k, pt) == (kk, (s.x, s.y))


def test_pi_a_contracts_nearby_starts():
    p = Params(0.5, 1e-2, 1e-3)
    a, _ = pi_a(-1.0, p)
    b, _ = pi_a(-1.0 + 1e-3, p)
    assert abs(a.y - b.y) < 1e-3


def test_pi_a_rejects_zero_eps():
    with pytest.raises(ParameterError):
        pi_a(-1.0, Params(0.5, 0.0, 1e-3))


def test_pi_a_rejects_start_outside_entry():
    with pytest.raises(ParameterError):
        pi_a(-0.5, Params(0.5, 1e-2, 1e-3))


def test_pi_e_exit_height():
    p = Params(2.0, 1e-2, 1e-3)
    s, k = pi_e(-1.0, p)
    assert k == PI_E_INDEX and s.y == PI_E_Y
    # 0.25 is the closeness constant fitted over the escape grid
    assert 0.0 < s.y <= 0.25 * p.eps ** (1 / 3)
    y = section_delta("e_out", p).interval("y")
    kk, _, pt = oracles.euler_argmin(-1.0, -1.0, p.eps, p.h, p.lam, ((1.0, 1.0), (y.lo, y.hi)))
    assert (kk, pt) == (k, (s.x, s.y))


def test_pi_e_rejects_attracting_lambda():
    with pytest.raises(ParameterError):
        pi_e(-1.0, Params(0.5, 1e-2, 1e-3))


def test_pi_maps_are_deterministic():
    p = Params(2.0, 1e-2, 1e-3)
    assert pi_e(-0.995, p) == pi_e(-0.995, p)


def test_reference_flow_diagonal():
    p = Params(1.0, 0.05, 0.01)
    s = reference_flow(State(-1.0, -1.0, 0.05, 0.01), p, 2.0)
    assert s.x == pytest.approx(-0.9, abs=1e-12) and s.y == pytest.approx(-0.9, abs=1e-12)


@pytest.mark.parametrize("x0", [0.5, -0.3, -2.0])
def test_reference_flow_riccati_closed_form(x0):
    a, T = 1.0, 1.0
    p = Params(0.5, 0.0, 0.1)
    s = reference_flow(State(x0, a, 0.0, 0.1), p, T)
    if abs(x0) < a:
        exact = -a * math.tanh(a * T - math.atanh(x0 / a))
    else:
        exact = -a / math.tanh(a * T - math.atanh(a / x0))
    assert s.y == a
    assert s.x == pytest.approx(exact, abs=1e-11)
