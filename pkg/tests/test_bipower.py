import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate, stats

from diurnalvol.bipower import (TruncationRule, abs_moment, adaptive_threshold, bipower,
                                bipower_scale, truncated_bipower)
from diurnalvol.errors import DegenerateError
from diurnalvol.preavg import (PreAveragedSeries, PreAvgScheme, ReturnGrid, choose_window,
                               pre_average)

from conftest import make_series


def brute_force_bipower(v, k, N, n, l, r, thr):
    total = 0.0
    for i in range(N):
        a, b = abs(v[i]), abs(v[i + k])
        if a < thr and b < thr:
            total += a ** l * b ** r
    return n ** ((l + r) / 4) / (N * abs_moment(l) * abs_moment(r)) * total


@pytest.mark.parametrize("p,expected", [(0, 1.0), (2, 1.0), (1, 0.7978845608), (4, 3.0)])
def test_abs_moment(p, expected):
    assert abs_moment(p) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("p", [0.5, 1.0, 1.5, 3.0])
def test_abs_moment_by_quadrature(p):
    q = integrate.quad(lambda x: abs(x) ** p * stats.norm.pdf(x), -np.inf, np.inf)[0]
    assert abs_moment(p) == pytest.approx(q, rel=1e-8)


def test_single_term():
    scheme = PreAvgScheme(3, 2, 1.0, np.array([0.5]), 1.0, 0.125, 1.0, 1 / 12)
    s = PreAveragedSeries(np.array([1.0, 0.3, -1.0]), scheme)
    assert s.N_n == 1
    assert bipower(s, 1, 1).value == pytest.approx(math.sqrt(3) * math.pi / 2, rel=1e-12)


def test_zero_series():
    s = make_series(np.zeros(400))
    assert bipower(s, 1, 1).value == 0.0
    with pytest.raises(DegenerateError, match="no dispersion"):
        adaptive_threshold(s)


def test_threshold_constants():
    assert stats.norm.ppf(0.999) == pytest.approx(3.0902, abs=1e-4)
    s = choose_window(23400, 1 / 3)
    assert (s.k_n / s.n) ** 0.49 == pytest.approx(0.0497, abs=1e-4)


def test_threshold_formula(rng):
    s = make_series(rng.standard_normal(4680) * 0.01)
    rule = adaptive_threshold(s)
    bv11 = bipower(s, 1, 1).value
    expected = stats.norm.ppf(0.999) * math.sqrt(bv11) * (s.k_n / s.n) ** 0.49
    assert rule.threshold == pytest.approx(expected, rel=1e-12)


def test_threshold_scale_equivariance(rng):
    r = rng.standard_normal(4680) * 0.01
    c1 = adaptive_threshold(make_series(r)).scale_c
    c2 = adaptive_threshold(make_series(2 * r)).scale_c
    assert c2 == pytest.approx(2 * c1, rel=1e-12)


def test_infinite_threshold_is_plain_bipower(rng):
    s = make_series(rng.standard_normal(1000))
    for l, r in [(1, 1), (2, 2)]:
        assert truncated_bipower(s, l, r, np.inf).value == bipower(s, l, r).value


def test_tiny_threshold_kills_everything(rng):
    s = make_series(rng.standard_normal(1000))
    assert truncated_bipower(s, 1, 1, 1e-300).value == 0.0


def test_one_huge_value(rng):
    r = rng.standard_normal(900) * 0.01
    r[450] = 5.0
    s = make_series(r)
    thr = 0.5
    got = truncated_bipower(s, 2, 2, thr).value
    assert got == pytest.approx(brute_force_bipower(s.values, s.k_n, s.N_n, s.n, 2, 2, thr),
                                rel=1e-12)
    assert got < bipower(s, 2, 2).value / 10


def test_rule_rescale():
    rule = TruncationRule(0.49, 0.999, 2.0, 0.01)
    assert rule.rescaled(3.0).threshold == pytest.approx(3.0 * rule.threshold)


def test_consistency_on_constant_volatility(rng):
    # BV(1,1)/(theta psi2) minus the noise term recovers sigma^2
    n, sigma2, omega2 = 23400, 1.0, 1e-6
    x = rng.standard_normal(n) * math.sqrt(sigma2 / n)
    eps = rng.standard_normal(n + 1) * math.sqrt(omega2)
    g = ReturnGrid(x + np.diff(eps))
    sc = choose_window(n, 1 / 3)
    bv = bipower(pre_average(g, sc), 1, 1).value
    th = sc.theta_effective
    est = bv / (th * sc.psi2_n) - sc.psi1_n / (th * th * sc.psi2_n) * omega2
    assert est == pytest.approx(sigma2, rel=0.1)


@given(arrays(float, 120, elements=st.floats(-1, 1)), st.floats(0.01, 2.0),
       st.sampled_from([(1, 1), (2, 2), (1, 2)]))
def test_matches_indicator_loop(r, thr, lr):
    s = pre_average(ReturnGrid(r), choose_window(120, 0.5))
    l, rr = lr
    assert truncated_bipower(s, l, rr, thr).value == pytest.approx(
        brute_force_bipower(s.values, s.k_n, s.N_n, s.n, l, rr, thr), rel=1e-12, abs=1e-300)


@given(arrays(float, 120, elements=st.floats(-1, 1)), st.floats(0.01, 1.0), st.floats(1.0, 3.0))
def test_monotone_in_threshold(r, thr, factor):
    s = pre_average(ReturnGrid(r), choose_window(120, 0.5))
    assert truncated_bipower(s, 1, 1, thr).value <= truncated_bipower(s, 1, 1, thr * factor).value


@given(arrays(float, 120, elements=st.floats(-1, 1)), st.floats(0.1, 10))
def test_homogeneous_of_degree_l_plus_r(r, a):
    s1 = pre_average(ReturnGrid(r), choose_window(120, 0.5))
    s2 = pre_average(ReturnGrid(a * r), choose_window(120, 0.5))
    assert bipower(s2, 2, 2).value == pytest.approx(a ** 4 * bipower(s1, 2, 2).value,
                                                    rel=1e-9, abs=1e-300)


def test_scale_factor():
    s = make_series(np.ones(100))
    assert bipower_scale(s, 1, 1) == pytest.approx(10.0 / (s.N_n * 2 / math.pi))
