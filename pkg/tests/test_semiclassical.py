"""Volterra-limit tests: kernel, effective temperature, the product
integration march, correlator forms and the coarsening fits."""

import math

import numpy as np
import pytest

from qsm import lattice as lat
from qsm import semiclassical as sc


def _params(d=3.0, g=0.0, T=1.0, gamma=1.0):
    return lat.ModelParams(d=d, g=g, T=T, gamma0=2.0 * gamma)


def test_kernel_trivial_and_asymptotic():
    assert sc.kernel_f(0.0, 1.0, 3.0) == 1.0
    assert sc.kernel_f(1e7, 1.0, 3.0) == pytest.approx(
        (4.0 * math.pi * 1e7) ** -1.5, rel=1e-6)
    # integer-d quadrature oracle
    ref = lat.bz_integral_quadrature(lambda w: np.exp(-2.0 * w), 3, n=96)
    assert sc.kernel_f(2.0, 1.0, 3.0) == pytest.approx(ref, rel=1e-9)


def test_effective_temperature():
    assert sc.effective_temperature(2.0, 0.0) == 2.0
    assert sc.effective_temperature(1.0, 1.2) == pytest.approx(1.0 / 0.9,
                                                               rel=1e-14)
    with pytest.raises(sc.ExpansionError):
        sc.effective_temperature(1.0, 12.0)


def test_effective_temperature_matches_equilibrium_expansion():
    # the dynamical T* equals the temperature renormalisation of the
    # equilibrium constraint: LHS(z; T, g) = T* int 1/(z+omega) + O(g^2)
    from qsm import equilibrium as eq
    z, T, g = 0.8, 2.0, 1e-3
    lhs = eq.constraint_lhs(z, lat.ModelParams(d=3.0, g=g, T=T))
    tstar = sc.effective_temperature(T, g)
    ref = tstar * lat.bz_integral("power", 3.0, z=z, nu=1.0)
    assert lhs == pytest.approx(ref, rel=1e-7)


def test_volterra_zero_temperature_returns_kernel():
    sol = sc.solve_volterra(_params(T=0.0), 50.0, 0.02)
    assert np.array_equal(sol.G, sol.F)
    assert sol.G[0] == 1.0


def test_volterra_residual_machine_zero():
    sol = sc.solve_volterra(_params(T=3.0), 30.0, 0.05)
    assert np.abs(sol.residual()).max() < 1e-12


def test_volterra_positive_and_kernel_monotone():
    sol = sc.solve_volterra(_params(T=5.0), 50.0, 0.02)
    assert np.all(sol.G > 0.0)
    assert np.all(np.diff(sol.F) < 0.0)


def test_volterra_step_halving_order():
    # product-trapezoid march converges at second order in h
    p = _params(T=5.0)
    ref = sc.solve_volterra(p, 20.0, 0.003125).G[-1]
    errs = []
    for h in (0.05, 0.025, 0.0125):
        errs.append(abs(sc.solve_volterra(p, 20.0, h).G[-1] - ref))
    slope = np.polyfit(np.log([0.05, 0.025, 0.0125]), np.log(errs), 1)[0]
    assert 1.9 <= slope <= 2.1


def test_relaxation_time_pole_vs_measured():
    tc = 1.0 / lat.watson_a1(3.0)
    for factor in (1.2, 1.5):
        tstar = factor * tc
        te = sc.relaxation_time(3.0, 1.0, tstar)
        sol = sc.solve_volterra(_params(T=tstar), 22.0 * te, te / 800.0)
        measured = sc.measure_teq(sol)
        assert measured == pytest.approx(te, rel=5e-3), factor


def test_relaxation_time_asymptote_near_critical():
    # the closed form is the T* -> T*_c limit of the pole condition
    tc = 1.0 / lat.watson_a1(3.0)
    for factor, tol in ((1.001, 0.02), (1.01, 0.06)):
        pole = sc.relaxation_time(3.0, 1.0, factor * tc)
        asym = sc.relaxation_time_asymptote(3.0, 1.0, factor * tc)
        assert asym == pytest.approx(pole, rel=tol), factor


def test_q_correlator_initial_and_sum_rule():
    p = _params(T=5.0, g=0.05)
    sol = sc.solve_volterra(p, 40.0, 0.01)
    assert np.allclose(sc.q_correlator_sc(np.array([0.0, 1.0, 4.0]), 0.0,
                                          sol, p), 1.0)
    for t in (5.0, 20.0, 40.0):
        assert abs(sc.sum_rule_residual(sol, p, t)) < 1e-4


def test_q_correlator_ornstein_zernike():
    # above criticality the correlator settles into g/12T + T/(omega+1/xi^2)
    tc = 1.0 / lat.watson_a1(3.0)
    T = 1.4 * tc
    g = 0.02
    tstar = sc.effective_temperature(T, g)
    p = _params(T=T, g=g)
    te = sc.relaxation_time(3.0, 1.0, tstar)
    sol = sc.solve_volterra(p, 25.0 * te, te / 400.0)
    xi_sq = sc.relaxation_time(3.0, 1.0, tstar)  # gamma = 1: xi^2 = t_eq
    omegas = np.array([0.5, 1.0, 2.0])
    q = sc.q_correlator_sc(omegas, float(sol.t[-1]), sol, p)
    ref = g / (12.0 * T) + T / (omegas + 1.0 / xi_sq)
    assert np.allclose(q, ref, rtol=0.01)


def test_q_correlator_critical_scaling_form():
    # at T* = T*_c (discrete), 2 < d < 4:
    # Q_k -> g/(12 Tc) + (2 gamma Tc/(d-2)) t 1F1(1, d/2; -gamma omega t)
    from qsm.specfun import hyp_pfq
    d, gamma, h = 3.0, 1.0, 0.02
    n = int(4000.0 / h)
    tch = sc.critical_temperature_discrete(d, gamma, h, n)
    g = 0.02
    # bare T such that T* = tch
    T = tch / (1.0 + g / (12.0 * tch))
    T = tch * (1.0 - g / (12.0 * tch))  # first order; refine below
    from scipy import optimize
    T = optimize.brentq(lambda TT: sc.effective_temperature(TT, g) - tch,
                        0.5 * tch, tch)
    p = _params(T=T, g=g)
    sol = sc.solve_volterra(p, 4000.0, h, t_eff=tch)
    t = 3000.0
    omegas = np.array([1e-4, 5e-4, 1e-3])
    q = sc.q_correlator_sc(omegas, t, sol, p)
    ref = np.array([g / (12.0 * T) + 2.0 * gamma * T / (d - 2.0) * t
                    * hyp_pfq((1.0,), (d / 2.0,), -gamma * w * t).value
                    for w in omegas])
    assert np.allclose(q, ref, rtol=0.01)


def test_classical_g_zero_reduction():
    # with g = 0 the correlator is the classical one: no hard-core term
    p0 = _params(T=4.5, g=0.0)
    sol = sc.solve_volterra(p0, 30.0, 0.02)
    om = np.array([0.7])
    t = 20.0
    i = int(round(t / sol.h))
    decay = math.exp(-1.0 * t * 0.7) / sol.G[i]
    tau = sol.t[:i + 1]
    w = np.full(i + 1, sol.h)
    w[0] = w[-1] = sol.h / 2.0
    conv = float(np.sum(w * sol.G[:i + 1] * np.exp(-(t - tau) * 0.7)))
    ref = decay + 4.5 * conv / sol.G[i]
    assert sc.q_correlator_sc(om, t, sol, p0)[0] == pytest.approx(ref,
                                                                  rel=1e-10)


def test_plateau_below_critical():
    tc = 1.0 / lat.watson_a1(3.0)
    p = _params(T=0.5 * tc)
    sol = sc.solve_volterra(p, 1500.0, 0.05)
    rep = sc.classical_plateau_check(sol, p)
    assert rep.slope == pytest.approx(rep.slope_predicted, abs=0.04)
    assert rep.slope_predicted == -0.75
    assert rep.collapse_error is not None and rep.collapse_error < 0.02


def test_plateau_critical_d3_and_d5():
    h = 0.05
    for d, pred in ((3.0, -0.25), (5.0, 0.0)):
        n = int(1500.0 / h)
        tch = sc.critical_temperature_discrete(d, 1.0, h, n)
        p = _params(d=d, T=tch)
        sol = sc.solve_volterra(p, 1500.0, h, t_eff=tch)
        rep = sc.classical_plateau_check(sol, p, at_critical=True)
        assert rep.slope_predicted == pred
        assert rep.slope == pytest.approx(pred, abs=0.05 / 4.0 + 0.01), d
