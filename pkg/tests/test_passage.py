import math

import numpy as np
import pytest

from transcrit import InvariantBreachError, K1Point, K2Point, ParameterError, Params, k23
from transcrit.manifolds import l_minus, l_plus
from transcrit.passage import (betas, build_sections, check_containments, contraction_sweep,
                               measure_lemma_monotonicity, pi_1_minus, pi_1_plus, pi_2,
                               pi_3, sample_sigma2_in, sigma2e_out, transition_bound)

import oracles


def chart_params(lam, delta=0.1, nu=0.01):
    return Params.from_chart(lam, delta, nu)


def test_betas_examples():
    b = betas(chart_params(0.5))
    assert b.beta1 == pytest.approx(0.003125, rel=1e-15)
    assert b.beta1_hat == pytest.approx(0.05, rel=1e-15)
    assert betas(chart_params(2.0)).beta2 == pytest.approx(0.075, rel=1e-15)


def test_betas_formulas():
    for lam in (-0.5, 0.5, 2.0):
        d = 0.05
        b = betas(chart_params(lam, d))
        assert b.beta2_plus == pytest.approx(abs(lam + 1) * d / 2)
        assert b.beta2_plus_hat == pytest.approx((abs(lam) + 1) * d / 2)
        assert b.beta1_plus == pytest.approx(3 * abs(lam + 1) * d / 4)
        assert b.beta1_plus_hat == pytest.approx(3 * (abs(lam) + 1) * d / 4)


def test_r1_contains_centre():
    p = chart_params(0.5)
    cat = build_sections(p)
    assert cat["R1"].contains((p.rho, -1.0, p.delta / 4, p.nu))
    assert set(cat) >= {"sigma1m_in", "sigma1m_out", "R1", "sigma2_in", "sigma2a_out",
                        "sigma2e_out", "sigma1p_in", "R2", "sigma1p_out", "sigma3_in",
                        "sigma3_out"}


def test_sigma2e_out_needs_omega():
    p = Params.from_chart(3.0, 0.1, 0.01)
    with pytest.raises(ParameterError):
        sigma2e_out(p, 0.001)


# Frozen from the plain-Python K1 loop in tests/oracles.py.
K1_STEPS = 2028


def test_pi_1_minus_transition_time():
    p = chart_params(0.5)
    assert transition_bound(p) == pytest.approx(39.2157, rel=1e-4)
    rep = pi_1_minus(K1Point(1.0, -1.0, 0.025, 0.01), p)
    assert rep.steps == K1_STEPS and rep.steps >= math.ceil(rep.bound)
    o = build_sections(p)["sigma1m_out"]
    box = tuple((o.interval(c).lo, o.interval(c).hi) for c in ("r1", "eps1", "h1"))
    k, z = oracles.k1_first_entry(1.0, -1.0, 0.025, 0.01, 0.5, box)
    assert k == rep.steps and z == tuple(rep.exit)


def test_pi_1_minus_conserved_product_and_invariants():
    p = chart_params(-0.5, 0.05, 0.005)
    rep = pi_1_minus(K1Point(1.0, -0.99, 0.0125, 0.005), p)
    e = rep.exit
    assert e.eps1 * e.r1 * e.h1 == pytest.approx(0.0125 * 0.005, rel=1e-12)


def test_pi_1_minus_graph_distance_is_second_order_in_eps1():
    # The invariance residual is O(eps1**2 h1) per step, but the graph attracts at
    # rate 1 - 2 h1, so an orbit on the graph settles O(eps1**2) away from the
    # truncated expansion with no h1 factor.
    devs = []
    for nu in (0.0025, 0.005, 0.01):
        p = chart_params(0.5, 0.1, nu)
        rep = pi_1_minus(K1Point(1.0, l_minus(0.025, nu, 0.5), 0.025, nu), p)
        e = rep.exit
        devs.append((e.y1 - l_minus(e.eps1, e.h1, 0.5)) / e.eps1**2)
    assert max(abs(d) for d in devs) <= 0.1
    assert max(devs) - min(devs) <= 0.01 * max(abs(d) for d in devs)


def test_pi_1_minus_contracts_slow_offsets():
    p = chart_params(0.5)
    a = pi_1_minus(K1Point(1.0, -1.0, 0.025, 0.01), p)
    b = pi_1_minus(K1Point(1.0, -1.0 + 1e-3, 0.025, 0.01), p)
    assert abs(a.exit.y1 - b.exit.y1) < 1e-3


def test_pi_1_minus_rejects_outside_r1():
    with pytest.raises(ParameterError):
        pi_1_minus(K1Point(1.0, -0.5, 0.025, 0.01), chart_params(0.5))


def test_pi_1_minus_flags_f1_sign():
    # start on the repelling side where F1 < 0 at once
    with pytest.raises(InvariantBreachError):
        pi_1_minus(K1Point(1.0, -1.5, 0.025, 0.01), chart_params(0.5), check_entry=False)


def test_pi_1_plus_on_graph():
    for lam in (0.5, 2.0):
        p = chart_params(lam)
        r1 = 0.5
        e0, h0 = p.eps / r1**2, p.h * r1
        rep = pi_1_plus(K1Point(r1, l_plus(e0, h0, lam), e0, h0), p)
        e = rep.exit
        assert rep.flags["eps1_decreasing"]
        assert abs(e.eps1 - p.delta / 4) <= 1e-3 * p.delta
        assert abs(e.y1 - l_plus(e.eps1, e.h1, lam)) <= 0.5 * e.eps1**2


def test_pi_2_attracting_example():
    for lam in (0.5, -0.5):
        p = chart_params(lam)
        s = p.delta ** -0.5
        r2 = math.sqrt(p.eps)
        q = K2Point(-s, -s * (1 - p.delta / 2), r2, r2 * p.h)
        rep = pi_2(q, p, "attracting")
        assert abs(rep.exit.x2) <= rep.exit.y2
        assert abs(rep.exit.x2 + s) <= rep.exit.h2 / 2


def test_pi_2_escape_example():
    p = chart_params(2.0)
    s = p.delta ** -0.5
    r2 = math.sqrt(p.eps)
    rep = pi_2(K2Point(-s, -s * 0.99, r2, r2 * p.h), p, "exit")
    assert rep.entered
    assert 0 <= rep.exit.y2 < p.omega * p.delta ** (-1 / 6)


def test_pi_2_rejects_wrong_regime_and_lambda_one():
    s = 0.1 ** -0.5
    q = K2Point(-s, -s, 0.2, 0.002)
    with pytest.raises(ParameterError):
        pi_2(q, chart_params(0.5), "exit")
    with pytest.raises(ParameterError):
        pi_2(q, chart_params(1.0), "attracting")


def test_canard_never_exits():
    p = chart_params(1.0)
    s = p.delta ** -0.5
    r2 = math.sqrt(p.eps)
    rep = pi_2(K2Point(-s, -s, r2, r2 * p.h), p, "attracting", check_regime=False,
               check_entry=False)
    assert not rep.entered
    assert np.array_equal(rep.path[:, 0], rep.path[:, 1])


def test_lemma_verdicts():
    s = 0.1 ** -0.5
    p = chart_params(-0.5)
    r2 = math.sqrt(p.eps)
    v = measure_lemma_monotonicity(K2Point(-s, -s * 0.995, r2, r2 * p.h), p)
    assert v.passed and v.clauses["above_always"][0]
    p = chart_params(0.5)
    v = measure_lemma_monotonicity(K2Point(-s * 0.999, -s * 1.005, r2, r2 * p.h), p)
    assert v.passed and "crossing_01" in v.clauses
    p = chart_params(2.0)
    v = measure_lemma_monotonicity(K2Point(-s, -s * 0.99, r2, r2 * p.h), p)
    assert v.passed and v.clauses["crossing_big"][1] * r2 * p.h >= math.sqrt(p.delta)


def test_lemma_rejects_lambda_one():
    with pytest.raises(ParameterError):
        measure_lemma_monotonicity(K2Point(-3.0, -3.0, 0.2, 0.002), chart_params(1.0))


def test_pi_3_from_escape_exit():
    exits = []
    for delta in (0.025, 0.05, 0.1):
        p = chart_params(2.0, delta, 0.005)
        s = p.delta ** -0.5
        r2 = math.sqrt(p.eps)
        rep2 = pi_2(K2Point(-s, -s * 0.99, r2, r2 * p.h), p, "exit")
        z = k23(rep2.exit)
        assert build_sections(p)["sigma3_in"].contains(z)
        assert z.y3 <= p.delta ** (1 / 3)
        rep = pi_3(z, p)
        assert rep.exit.eps3 < z.eps3
        exits.append(rep.exit.y3 / delta ** (1 / 3))
    assert all(0 < e < 0.5 for e in exits)


def test_contraction_endpoints_and_sentinel():
    p = chart_params(0.5, 0.2)
    res = contraction_sweep("R1", p, 2)
    assert res.width_out < res.width_in
    deg = contraction_sweep("R1", p, ys=[-1.0, -1.0])
    assert deg.width_in == 0.0 and deg.width_out == 0.0 and math.isnan(deg.rate)


def test_contraction_log_rate_steps_evenly_in_inverse_nu_delta():
    # 1/(nu delta) = 250, 500, 750.  log(rate) has a positive intercept (about
    # 3.3 here), so halving nu delta does not exactly double it; equal steps in
    # 1/(nu delta) give equal decrements.
    logs = [math.log(contraction_sweep("R1", chart_params(0.5, d), 8).rate)
            for d in (0.4, 0.2, 0.4 / 3)]
    d1, d2 = logs[1] - logs[0], logs[2] - logs[1]
    assert d1 < 0 and d2 < 0
    assert abs(d1 - d2) <= 0.1 * abs(d1)


def test_containments_small_sample():
    p = chart_params(0.5)
    for c in check_containments(p, 300, np.random.default_rng(1)):
        assert c.violations == 0, c


def test_passage_reports_deterministic():
    p = chart_params(2.0)
    qs = sample_sigma2_in(p, 3, np.random.default_rng(7))
    assert [pi_2(q, p, "exit").row() for q in qs] == [pi_2(q, p, "exit").row() for q in qs]
