import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from fptsim.distribution import (EvalBracket, ToleranceSpec, cdf, conditional_cdf, density, log_q, prob_finite,
                                 q_bracket, std_normal_integral)
from fptsim.series import Boundary, q_partial
from fptsim.validation import invert_conditional_cdf, right_tail_bound

coef = st.floats(0.05, 5.0)

# 40-digit mpmath values
CDF_111 = 0.18081171102353293
CCDF_111 = 0.66967381812078704
F_111 = 0.39953108338075409
C_11 = 0.26999967167735452


def _mp_cdf(a, b, t):
    K = int(math.sqrt(40.0 / (a * b))) + 3
    a, b, t = mp.mpf(a), mp.mpf(b), mp.mpf(t)
    x = a + b * t
    return 1 - mp.fsum((-1) ** k * mp.e ** (-2 * k * k * a * b)
                       * (mp.ncdf((x + 2 * a * k) / mp.sqrt(t)) - mp.ncdf((-x + 2 * a * k) / mp.sqrt(t)))
                       for k in range(-K, K + 1))


def test_tolerance_spec():
    assert ToleranceSpec().abs_tol == 1e-12
    for bad in (0.0, 1.0, -1e-3, 2.0):
        with pytest.raises(ValueError):
            ToleranceSpec(bad)


def test_eval_bracket():
    br = EvalBracket(1.0, 3.0)
    assert br.mid == 2.0 and br.width == 2.0
    with pytest.raises(ValueError):
        EvalBracket(2.0, 1.0)


# -- prob_finite ----------------------------------------------------------

def test_prob_finite_examples():
    assert prob_finite(Boundary(1, 1)) == pytest.approx(C_11, abs=1e-12)
    assert prob_finite(Boundary(0.5, 0.5)) == pytest.approx(0.96394524366487509, abs=1e-12)
    assert prob_finite(Boundary(3, 3), ToleranceSpec(1e-12)) == pytest.approx(3.0459959489425257e-8, abs=1e-12)
    assert prob_finite(Boundary(3, 3)) == pytest.approx(2 * math.exp(-18), rel=1e-20)


def test_prob_finite_documented_values_within_rounding():
    # the quoted 0.2700027 and 0.963947 are off in the 6th digit
    assert abs(prob_finite(Boundary(1, 1)) - 0.2700027) < 4e-6
    assert abs(prob_finite(Boundary(0.5, 0.5)) - 0.963947) < 4e-6


@given(coef, coef, st.sampled_from([1e-4, 1e-8, 1e-12]))
def test_prob_finite_within_tol(a, b, tol):
    ab = a * b
    mp.mp.dps = 30
    exact = 2 * mp.fsum((-1) ** (k + 1) * mp.e ** (-2 * k * k * mp.mpf(ab)) for k in range(1, 80))
    v = prob_finite(Boundary(a, b), tol)
    assert abs(v - float(exact)) <= tol
    assert 0.0 < v < 1.0


def test_prob_finite_decreasing_in_ab():
    # below ab ~ 0.05, C rounds to 1.0 in double precision
    ab = np.geomspace(0.1, 10, 60)
    vals = [prob_finite(Boundary(math.sqrt(p), math.sqrt(p))) for p in ab]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    # depends on (a, b) only through ab
    assert prob_finite(Boundary(0.5, 2.0)) == prob_finite(Boundary(1.0, 1.0))


# -- std_normal_integral --------------------------------------------------

def test_std_normal_integral_examples():
    assert abs(std_normal_integral(-40, 40) - 1.0) <= 1e-14
    assert std_normal_integral(-2, 2) == pytest.approx(0.95449973610364159, abs=1e-14)
    assert std_normal_integral(0, 0) == 0.0
    with pytest.raises(ValueError):
        std_normal_integral(1, 0)


@given(st.floats(-40, 40), st.floats(0, 40))
def test_std_normal_integral_accuracy(lo, width):
    hi = lo + width
    mp.mp.dps = 30
    exact = float(mp.ncdf(hi) - mp.ncdf(lo))
    assert abs(std_normal_integral(lo, hi) - exact) <= 1e-14 * max(1.0, exact)


def test_std_normal_integral_far_tail_relative():
    v = std_normal_integral(30.0, 31.0)
    mp.mp.dps = 40
    assert v == pytest.approx(float(mp.ncdf(31) - mp.ncdf(30)), rel=1e-12)


# -- cdf ------------------------------------------------------------------

def test_cdf_examples():
    bd = Boundary(1, 1)
    assert cdf(bd, 0.0) == 0.0
    assert cdf(bd, 1.0) == pytest.approx(CDF_111, abs=1e-12)
    assert abs(cdf(bd, 1e6) - prob_finite(bd)) <= 1e-9


def test_cdf_matches_mpmath():
    mp.mp.dps = 30
    for a, b, t in [(1, 1, 1), (0.2, 3.0, 0.01), (2.0, 0.3, 5.0), (0.1, 0.1, 40.0)]:
        assert cdf(Boundary(a, b), t) == pytest.approx(float(_mp_cdf(a, b, t)), abs=1e-12)


def test_cdf_vectorized_and_errors():
    bd = Boundary(1, 1)
    t = np.array([0.0, 0.5, 1.0, 2.0])
    out = cdf(bd, t)
    assert out.shape == t.shape
    assert out[2] == cdf(bd, 1.0)
    for bad in (-1e-9, -1.0, math.nan):
        with pytest.raises(ValueError):
            cdf(bd, bad)


@given(coef, coef, st.floats(0, 50), st.floats(0, 50))
def test_cdf_monotone_and_defective(a, b, t1, t2):
    bd = Boundary(a, b)
    lo, hi = sorted((t1, t2))
    tol = 1e-12
    assert cdf(bd, lo) <= cdf(bd, hi) + 2 * tol
    assert cdf(bd, hi) <= prob_finite(bd) + 2 * tol


@given(coef, coef)
def test_cdf_limit(a, b):
    bd = Boundary(a, b)
    assert abs(cdf(bd, 1e6 / b ** 2) - prob_finite(bd)) <= 1e-6


@given(coef, coef, st.floats(1e-3, 30), st.sampled_from([0.5, 2.0]))
def test_cdf_time_scaling(a, b, t, c):
    # tau_{a,b} = c^2 tau_{a/c, bc} in law
    assert abs(cdf(Boundary(a, b), t) - cdf(Boundary(a / c, b * c), t / c ** 2)) <= 4e-12


# -- conditional_cdf ------------------------------------------------------

def test_conditional_cdf_examples():
    bd = Boundary(1, 1)
    assert conditional_cdf(bd, 0.0) == 0.0
    assert conditional_cdf(bd, 1.0) == pytest.approx(CCDF_111, abs=1e-11)
    assert conditional_cdf(bd, math.inf) == 1.0
    assert conditional_cdf(bd, 1e9) == pytest.approx(1.0, abs=1e-11)
    with pytest.raises(ValueError):
        conditional_cdf(bd, -1.0)


# -- density --------------------------------------------------------------

def test_density_examples():
    bd = Boundary(1, 1)
    assert 0.0 <= density(bd, 0.001) <= 1e-50
    h = 1e-4
    fd = (conditional_cdf(bd, 1 + h) - conditional_cdf(bd, 1 - h)) / (2 * h)
    f1 = density(bd, 1.0)
    assert f1 > 0 and abs(f1 - fd) < 1e-6
    assert f1 == pytest.approx(F_111, abs=1e-12)
    c = prob_finite(bd)
    bound = right_tail_bound(bd, 10.0) * 100 ** -0.5 * math.exp(-50) / c
    assert 0.0 <= density(bd, 100.0) <= bound
    for bad in (0.0, -2.0):
        with pytest.raises(ValueError):
            density(bd, bad)


@given(coef, coef, st.floats(1e-3, 30))
def test_density_nonnegative(a, b, t):
    assert density(Boundary(a, b), t) >= -1e-12


@pytest.mark.parametrize("a,b", [(1, 1), (0.3, 0.8), (2.0, 0.25), (0.2, 4.0)])
def test_density_integrates_to_cdf(a, b):
    bd = Boundary(a, b)
    c = prob_finite(bd)
    T = float(invert_conditional_cdf(bd, np.array([0.99]))[0])
    mode_guess = a * a / 3.0
    val, _ = quad(lambda t: density(bd, t) * c, 0.0, T, points=[mode_guess, a / b], epsabs=1e-12, epsrel=1e-11,
                  limit=200)
    assert abs(val - cdf(bd, T)) < 1e-6


def test_q_bracket_width():
    bd = Boundary(0.3, 0.6)
    for t in (0.01, 0.5, 4.0, 40.0):
        for tol in (1e-6, 1e-10, 1e-14):
            br = q_bracket(bd, t, tol)
            assert br.width <= 2 * tol
            assert br.lower <= q_partial(bd, t, 300) + 1e-15 and q_partial(bd, t, 300) <= br.upper + 1e-15
    with pytest.raises(ValueError):
        q_bracket(bd, 0.0)


@settings(max_examples=50)
@given(coef, coef, st.floats(0.05, 30))
def test_log_q_agrees_with_q(a, b, t):
    bd = Boundary(a, b)
    lq, scale = log_q(bd, t, return_scale=True)
    q = q_partial(bd, t, 300)
    if lq[0] > scale[0] + math.log(1e-10) and q > 1e-300:
        assert lq[0] == pytest.approx(math.log(q), abs=1e-6)


def test_log_q_below_underflow():
    # Q(1e-4) is near exp(-5000); only the log form can represent it
    lq = log_q(Boundary(1, 1), 1e-4)[0]
    assert -5100 < lq < -4900
