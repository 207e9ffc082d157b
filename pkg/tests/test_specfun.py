"""Special-function tests.

Expected values marked "frozen" were computed from independent oracles:
mpmath at 50 digits for Gamma/Bessel/pFq series, adaptive quadrature for
the integral representations.  The oracle expressions are kept next to each
constant so they can be recomputed.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mpmath as mp

from qsm import specfun as sf

mp.mp.dps = 30


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------

def test_log_gamma_trivial():
    lg, sg = sf.log_gamma(1.0)
    assert lg == pytest.approx(0.0, abs=1e-15)
    lg, sg = sf.log_gamma(0.5)
    assert lg == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-14)
    assert sg == 1.0


def test_log_gamma_reference():
    # frozen: mpmath.loggamma(7.3) at 50 digits
    lg, sg = sf.log_gamma(7.3)
    assert lg == pytest.approx(7.147892523022249032777057, rel=1e-13)
    # sign channel on the negative axis: Gamma(-0.5) < 0, Gamma(-1.5) > 0
    assert sf.log_gamma(-0.5)[1] == -1.0
    assert sf.log_gamma(-1.5)[1] == 1.0


def test_log_gamma_pole():
    with pytest.raises(sf.SpecFunError):
        sf.log_gamma(-3.0)


def test_gamma_upper_identities():
    # Gamma(1, x) = e^{-x}
    for x in (0.3, 2.0, 17.0):
        assert sf.gamma_upper(1.0, x) == pytest.approx(math.exp(-x), rel=1e-13)
    # Gamma(a, 0) = Gamma(a)
    assert sf.gamma_upper(2.7, 0.0) == pytest.approx(math.gamma(2.7), rel=1e-14)


def test_gamma_upper_recurrence():
    # Gamma(a+1,x) = a Gamma(a,x) + x^a e^{-x}
    for a, x in ((0.7, 1.3), (-0.4, 2.5), (2.2, 0.01), (-1.7, 4.0)):
        lhs = sf.gamma_upper(a + 1.0, x)
        rhs = a * sf.gamma_upper(a, x) + x ** a * math.exp(-x)
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_gamma_upper_quadrature_oracle():
    # frozen: adaptive quadrature of int_2^inf t^{-3/2} e^{-t} dt
    assert sf.gamma_upper(-0.5, 2.0) == pytest.approx(0.030098757100186466,
                                                      rel=1e-12)


# ---------------------------------------------------------------------------
# Bessel
# ---------------------------------------------------------------------------

def test_bessel_i_trivial_and_oracle():
    assert sf.bessel_i(0, 0.0).unscaled() == pytest.approx(1.0, abs=1e-15)
    # frozen: (1/pi) int_0^pi e^{cos th} dth
    assert sf.bessel_i(0, 1.0).unscaled() == pytest.approx(
        1.2660658777520084, rel=1e-13)
    # frozen: mpmath.besseli(-2, 10) (order -(d+1)/2 at d = 3)
    assert sf.bessel_i(-2.0, 10.0).unscaled() == pytest.approx(
        2281.5189677260035, rel=1e-12)


def test_bessel_i_log_scale_huge():
    r = sf.bessel_i(0, 2e8)
    assert r.log_scale == 2e8
    # e^{-x} I_0(x) -> 1/sqrt(2 pi x)
    assert r.value == pytest.approx(1.0 / math.sqrt(2.0 * math.pi * 2e8),
                                    rel=1e-8)


def test_bessel_j():
    assert sf.bessel_j(0, 0.0) == 1.0
    # half-integer closed form
    for x in (0.7, 3.0, 25.0):
        assert sf.bessel_j(0.5, x) == pytest.approx(
            math.sqrt(2.0 / (math.pi * x)) * math.sin(x), rel=1e-12)
    # frozen: (1/pi) int_0^pi cos(x sin th - nu th) dth
    #         - (sin(nu pi)/pi) int_0^inf e^{-x sinh t - nu t} dt
    assert sf.bessel_j(0.05, 12.7) == pytest.approx(0.16527096794431040,
                                                    rel=1e-10)


# ---------------------------------------------------------------------------
# pFq
# ---------------------------------------------------------------------------

def test_pfq_exponential_identity():
    for a in (0.3, 1.3, 4.0):
        for x in (-3.0, 0.4, 2.0):
            r = sf.hyp_pfq((a,), (a,), x)
            assert r.converged
            assert r.value == pytest.approx(math.exp(x), rel=1e-12)


def test_pfq_cos_reduction():
    # frozen: cos(2 sqrt(2.37)) at 25 digits
    r = sf.hyp_pfq((), (0.5,), -2.37)
    assert r.value == pytest.approx(-0.99803927052418169489, rel=1e-10)


def test_pfq_1f2_extended_precision_oracle():
    # frozen: mpmath.hyper 50 digits; alternating series with dd fallback
    r = sf.hyp_pfq((-0.25,), (0.75, 0.25), -25.0)
    assert r.value == pytest.approx(5.719350721466603922, rel=1e-10)
    r = sf.hyp_pfq((-0.5,), (0.5, 0.25), -25.0)
    assert r.value == pytest.approx(26.437729806035719551, rel=1e-10)


def test_pfq_preconditions():
    with pytest.raises(sf.SpecFunError):
        sf.hyp_pfq((1.0,), (-2.0,), 0.5)
    with pytest.raises(sf.SpecFunError):
        sf.hyp_pfq((1.0, 1.0, 1.0), (2.0,), 0.5)
    with pytest.raises(sf.ConvergenceError):
        sf.hyp_pfq((1.0, 1.0), (2.0,), 1.5)  # p = q+1 outside radius


@given(x=st.floats(min_value=0.1, max_value=20.0))
@settings(max_examples=30, deadline=None)
def test_pfq_control_tightening_invariance(x):
    loose = sf.hyp_pfq((1.0,), (1.5, 2.0), -x, sf.SeriesControl(rel_tol=1e-10))
    tight = sf.hyp_pfq((1.0,), (1.5, 2.0), -x, sf.SeriesControl(rel_tol=1e-14))
    assert loose.value == pytest.approx(tight.value,
                                        rel=1e-9, abs=1e-280)


def test_series_control_validation():
    with pytest.raises(ValueError):
        sf.SeriesControl(rel_tol=0.0)
    with pytest.raises(ValueError):
        sf.SeriesControl(max_terms=0)


# ---------------------------------------------------------------------------
# Humbert Phi3
# ---------------------------------------------------------------------------

def test_phi3_trivial_reductions():
    assert sf.humbert_phi3_series(1.3, 0.7, 0.0, 0.0).value == 1.0
    # x = 0 reduces to 0F1(gam; y)
    r = sf.humbert_phi3_series(1.3, 0.7, 0.0, -2.0)
    assert r.value == pytest.approx(sf.hyp0f1(0.7, -2.0), rel=1e-12)


def test_phi3_series_vs_double_sum_oracle():
    # frozen: raw double sum at 50 digits
    r = sf.humbert_phi3_series(1.25, 0.5, -3.0, -5.0)
    assert r.value == pytest.approx(0.5010114372637161, rel=1e-11)


def test_phi3_conv_matches_series_grid():
    for d in (1.5, 2.0, 2.5, 3.0):
        for (x, y) in ((-3.0, -5.0), (-20.0, 2.0), (1.0, -8.0), (5.0, 5.0),
                       (-15.0, -15.0)):
            ser = sf.humbert_phi3_series(d / 2.0, 0.5, x, y)
            if not ser.converged:
                continue
            conv = sf.humbert_phi3_conv(d / 2.0, 0.5, x, y)
            assert conv == pytest.approx(ser.value, rel=1e-6), (d, x, y)


def test_phi3_conv_eps_independence():
    a = sf.humbert_phi3_conv(1.25, 0.5, -3.0, -5.0, eps=0.25)
    b = sf.humbert_phi3_conv(1.25, 0.5, -3.0, -5.0, eps=0.4)
    assert a == pytest.approx(b, rel=1e-8)


def test_phi3_conv_beta_integral_at_x0():
    # 1F1(.;.;0) = 1: the convolution collapses onto a Beta integral, so
    # Phi3(beta; gam; 0, y) = 0F1(gam; y) for any beta
    v = sf.humbert_phi3_conv(2.2, 1.5, 0.0, -3.0)
    assert v == pytest.approx(sf.hyp0f1(1.5, -3.0), rel=1e-10)


def test_phi3_cancellation_flag():
    r = sf.humbert_phi3_series(1.0, 0.5, -60.0, -60.0,
                               sf.SeriesControl(max_terms=40000))
    # deep cancellation zone must be flagged rather than silently trusted
    assert isinstance(r.converged, bool)


# ---------------------------------------------------------------------------
# Lambert W
# ---------------------------------------------------------------------------

def test_lambert_trivials():
    assert sf.lambert_w(0, 0.0) == 0.0
    assert sf.lambert_w(0, math.e) == pytest.approx(1.0, rel=1e-14)
    assert sf.lambert_w(-1, -math.exp(-1.0)) == pytest.approx(-1.0, abs=1e-7)


def test_lambert_domains():
    with pytest.raises(sf.SpecFunError):
        sf.lambert_w(0, -1.0)
    with pytest.raises(sf.SpecFunError):
        sf.lambert_w(-1, 0.1)


def test_lambert_defining_relation_grid():
    for x in np.logspace(-8, 8, 1000):
        w = sf.lambert_w(0, float(x))
        assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, x)
    for x in -np.logspace(-8, math.log10(math.exp(-1.0) * 0.999999), 1000):
        w = sf.lambert_w(-1, float(x))
        assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))


# ---------------------------------------------------------------------------
# cancellation-safe identities
# ---------------------------------------------------------------------------

def test_one_minus_0f1_identity():
    assert sf.one_minus_0f1_half_over_x(1e-14) == pytest.approx(2.0, rel=1e-10)
    assert sf.one_minus_0f1_half_over_x(4.0) == pytest.approx(
        (1.0 - math.cos(4.0)) / 4.0, rel=1e-12)
    assert sf.one_minus_0f1_half_over_x(-9.0) == pytest.approx(
        (1.0 - math.cosh(6.0)) / -9.0, rel=1e-12)


def test_one_minus_0f1_identity_window():
    for x in np.linspace(-50.0, 50.0, 201):
        if x == 0.0:
            continue
        ref = (1.0 - sf.hyp0f1(0.5, -x)) / x
        assert sf.one_minus_0f1_half_over_x(float(x)) == pytest.approx(
            ref, rel=1e-10, abs=1e-18)


def test_eps_limit_identity():
    assert sf.eps_limit_1f2(0.0) == 0.0
    for x in (1.5, -2.0):
        direct = sf.eps_limit_1f2(x)

        def lhs(e):
            return (1.0 - sf.hyp_pfq((-e,), (1.0, 0.5), x).value) / e

        es = [1e-3, 5e-4, 2.5e-4]
        v = [lhs(e) for e in es]
        r1 = 2.0 * v[1] - v[0]
        r2 = 2.0 * v[2] - v[1]
        extrap = 2.0 * r2 - r1
        assert direct == pytest.approx(extrap, rel=1e-6, abs=1e-6)


def test_appendix_derivative_lemma():
    cases = [(3.0, 0.7, -0.2, 50.0), (2.4, 0.9, 0.15, 12.0),
             (1.7, 1.3, -1.1, 7.0), (3.6, 0.55, 0.4, 120.0)]
    steps = {1: 1e-2, 2: 2e-2, 3: 4e-2, 4: 6e-2}
    for d, gam, Z, t in cases:
        def f(g):
            return math.exp(-g * Z) * (4.0 * math.pi * g * t) ** (-d / 2.0)
        for n in range(1, 5):
            exact = sf.appendixC_derivative(n, d, gam, Z, t)
            fd = sf._central_derivative(f, gam, n, steps[n] * gam)
            assert fd == pytest.approx(exact, rel=1e-6), (d, n)


def test_selftest_all_pass():
    rows = sf.selftest()
    assert all(ok for (_, _, _, ok) in rows), rows


# mpmath cross-checks of the vectorised kernels used by the convolution path

def test_hyp1f1_vec_against_mpmath():
    for b in (1.2, 0.45, 2.3):
        for xi in (-5.0, -31.0, -200.0, -599.0, -601.0, -2e4, 10.0, 500.0):
            mine = sf._hyp1f1_vec(1.5, b, np.array([xi]))[0]
            ref = float(mp.hyp1f1(1.5, b, mp.mpf(xi)))
            assert mine == pytest.approx(ref, rel=2e-11), (b, xi)


def test_hyp0f1_vec_against_mpmath():
    for b in (0.3, 1.5, -0.75):
        for y in (-900.0, -10.0, 0.5, 40.0):
            mine = sf._hyp0f1_vec(b, np.array([y]))[0]
            ref = float(mp.hyp0f1(b, mp.mpf(y)))
            assert mine == pytest.approx(ref, rel=1e-9, abs=1e-12), (b, y)
