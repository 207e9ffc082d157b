"""Lattice/Brillouin-zone tests: dispersion, energies, damping, kernels.

The integer-dimension tensor-product quadrature acts as the independent
oracle for every kernel decomposition; the Watson integral value is frozen
from its Gamma-function closed form.
"""

import math

import numpy as np
import pytest

from qsm import lattice as lat


def test_omega_bounds_and_corners():
    d = 3
    assert lat.omega_of_k([0.0] * d) == 0.0
    assert lat.omega_of_k([math.pi] * d) == pytest.approx(4.0 * d, rel=1e-14)
    m = lat.Mode.from_k([0.3, -1.2, 2.0])
    assert 0.0 <= m.omega <= 12.0


def test_mode_zone_validation():
    with pytest.raises(ValueError):
        lat.Mode.from_k([4.0])


def test_model_params_validation():
    with pytest.raises(ValueError):
        lat.ModelParams(d=1.0)
    with pytest.raises(ValueError):
        lat.ModelParams(d=2.0, lam=1.5)
    with pytest.raises(ValueError):
        lat.ModelParams(d=2.0, g=-0.1)


def test_lambda_pm_isotropic():
    d = 2.0
    m = lat.Mode.from_omega(0.0)
    lp, lm = lat.lambda_pm(m, S=d, lam=1.0, d=d)
    assert lp == pytest.approx(0.0, abs=1e-12)       # gap closes at S = d
    assert lm == pytest.approx(math.sqrt(d), rel=1e-14)
    z = 0.8
    m2 = lat.Mode.from_omega(1.7)
    lp2, _ = lat.lambda_pm(m2, S=d + z / 2.0, lam=1.0, d=d)
    assert lp2 == pytest.approx(math.sqrt((z + 1.7) / 2.0), rel=1e-14)


def test_lambda_pm_general_direct_oracle():
    d, lam, S = 2.0, 0.3, 2.4
    m = lat.Mode.from_k([math.pi / 3.0, math.pi / 2.0])
    lp, lm = lat.lambda_pm(m, S=S, lam=lam, d=d)
    shift = m.omega - 2.0 * d
    assert lp == pytest.approx(math.sqrt(S + (1 + lam) / 4.0 * shift), rel=1e-14)
    assert lm == pytest.approx(math.sqrt(S + (1 - lam) / 4.0 * shift), rel=1e-14)


def test_lambda_pm_stability_error():
    with pytest.raises(lat.StabilityError):
        lat.lambda_pm(lat.Mode.from_omega(0.0), S=0.5, lam=1.0, d=3.0)


def test_mode_energy():
    m = lat.Mode.from_omega(3.0)
    assert lat.mode_energy(m, S=2.0, g=0.0, lam=1.0, d=2.0) == 0.0
    # lam=1, z=1, omega=3: E = sqrt(g) sqrt(z+omega) = sqrt(0.8)
    z = 1.0
    e = lat.mode_energy(m, S=2.0 + z / 2.0, g=0.2, lam=1.0, d=2.0)
    assert e == pytest.approx(math.sqrt(0.8), rel=1e-14)


def test_mode_energy_small_k_linear():
    d, g = 3.0, 0.4
    for k in (1e-3, 2e-3):
        m = lat.Mode.from_k([k, 0.0, 0.0])
        e = lat.mode_energy(m, S=d, g=g, lam=1.0, d=d)
        assert e == pytest.approx(math.sqrt(g) * k, rel=1e-5)


def test_damping_rate_normalisation():
    # gamma0 = 2 gives gamma_k = 2 Lambda^2 = z + omega exactly
    z, omega = 0.5, 1.5
    m = lat.Mode.from_omega(omega)
    d = 2.0
    gam = lat.damping_rate(m, S=d + z / 2.0, gamma0=2.0, lam=1.0, d=d)
    assert gam == pytest.approx(z + omega, rel=1e-13)
    # critical mode undamped
    gam0 = lat.damping_rate(lat.Mode.from_omega(0.0), S=d, gamma0=2.0,
                            lam=1.0, d=d)
    assert gam0 == pytest.approx(0.0, abs=1e-13)


def test_damping_duality():
    d, S = 2.0, 2.9
    for omega in (0.4, 2.2, 6.0):
        m = lat.Mode.from_omega(omega)
        a = lat.damping_rate(m, S=S, gamma0=1.3, lam=0.45, d=d)
        b = lat.damping_rate(m, S=S, gamma0=1.3, lam=-0.45, d=d)
        assert a == pytest.approx(b, rel=1e-13)
        ea = lat.mode_energy(m, S=S, g=0.7, lam=0.45, d=d)
        eb = lat.mode_energy(m, S=S, g=0.7, lam=-0.45, d=d)
        assert ea == pytest.approx(eb, rel=1e-13)


# ---------------------------------------------------------------------------
# Brillouin-zone integrals
# ---------------------------------------------------------------------------

def test_bz_exp_integral_factorisation():
    for d in (1, 2, 3):
        for s in (0.0, 0.3, 3.7, 20.0, 100.0):
            # the integrand peaks on a scale 1/sqrt(s): resolve it
            n = max(96, int(16.0 * math.sqrt(max(s, 1.0))))
            a = lat.bz_exp_integral(s, d)
            b = lat.bz_integral_quadrature(lambda w: np.exp(-s * w), d, n=n)
            assert a == pytest.approx(b, rel=1e-9), (d, s)


def test_bz_exp_integral_monotonicity():
    ss = np.linspace(0.0, 10.0, 40)
    vals = [lat.bz_exp_integral(float(s), 2.3) for s in ss]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    for s in (0.5, 4.0):
        assert lat.bz_exp_integral(s, 1.7) > lat.bz_exp_integral(s, 2.9)


def test_bz_exp_integral_asymptotic_branch():
    for s in (1e6, 1e8, 1e12):
        assert lat.bz_exp_integral(s, 3.0) == pytest.approx(
            (4.0 * math.pi * s) ** -1.5, rel=1e-6)
    assert lat.log_bz_exp_integral(1e8, 3.0) == pytest.approx(
        -1.5 * math.log(4.0 * math.pi * 1e8), abs=1e-6)


def test_watson_integral_golden():
    # frozen: A_1 = (sqrt(6)/192 pi^3) Gamma(1/24) Gamma(5/24) Gamma(7/24)
    #               Gamma(11/24)   (simple-cubic Watson integral / 2)
    a1 = lat.watson_a1(3.0)
    assert a1 == pytest.approx(0.252731009858663003, rel=1e-11)
    with pytest.raises(lat.UnsupportedKernelError):
        lat.watson_a1(2.0)


def test_power_kernel_vs_quadrature():
    for d in (2, 3):
        for z, nu in ((0.5, 1.0), (0.5, 0.5), (1.7, 2.0), (0.02, 0.5)):
            mine = lat.bz_integral("power", float(d), z=z, nu=nu)
            # GL converges slowly near the k = 0 kink when z is small
            ref = lat.bz_integral_quadrature(
                lambda w: (z + w) ** -nu, d, n=256)
            assert mine == pytest.approx(ref, rel=1e-9), (d, z, nu)


def test_exp_sqrt_kernel_vs_quadrature():
    for d in (2, 3):
        for z, a in ((0.5, 1.3), (1.0, 0.2)):
            mine = lat.bz_integral("exp_sqrt", float(d), z=z, a=a)
            ref = lat.bz_integral_quadrature(
                lambda w: np.exp(-a * np.sqrt(z + w)) / np.sqrt(z + w),
                d, n=256)
            assert mine == pytest.approx(ref, rel=2e-8), (d, z, a)


def test_exp_sqrt_kernel_z0_mpmath():
    # the 1/|k| singularity defeats the lattice quadrature at z = 0; use a
    # high-precision independent evaluation of the subordination integral
    import mpmath as mp
    mp.mp.dps = 30
    for d, a in ((2.0, 2.0), (3.0, 0.7)):
        c = 1 / mp.sqrt(mp.pi)
        ref = float(mp.quad(
            lambda s: c * s ** mp.mpf("-0.5") * mp.exp(-a * a / (4 * s))
            * (mp.exp(-2 * s) * mp.besseli(0, 2 * s)) ** mp.mpf(d),
            [0, 1, 10, 100, 1000, mp.inf]))
        assert lat.bz_integral("exp_sqrt", d, z=0.0, a=a) == pytest.approx(
            ref, rel=1e-10), (d, a)


def test_exp_kernel_dispatch():
    assert lat.bz_integral("exp", 2.5, s=3.0) == lat.bz_exp_integral(3.0, 2.5)


def test_unsupported_kernel():
    with pytest.raises(lat.UnsupportedKernelError):
        lat.bz_integral("nonsense", 2.5)
    with pytest.raises(lat.UnsupportedKernelError):
        lat.bz_integral_quadrature(lambda w: w, 4)
    with pytest.raises(lat.UnsupportedKernelError):
        # divergent at z = 0 for d <= 2
        lat.bz_integral("power", 1.8, z=0.0, nu=1.0)


def test_power_kernel_small_z_continuity():
    # the incomplete-Gamma tail must join the z = 0 branch smoothly
    v0 = lat.bz_integral("power", 2.5, z=0.0, nu=0.5)
    v1 = lat.bz_integral("power", 2.5, z=1e-9, nu=0.5)
    assert v1 == pytest.approx(v0, rel=1e-4)
    vals = [lat.bz_integral("power", 2.5, z=z, nu=0.5)
            for z in (1e-6, 1e-4, 1e-2)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_continuous_dimension_against_mpmath():
    import mpmath as mp
    mp.mp.dps = 30
    d, nu = mp.mpf("1.1"), mp.mpf("0.5")
    c = 1.0 / mp.gamma(nu)
    num = mp.quad(lambda s: c * s ** (nu - 1)
                  * (mp.exp(-2 * s) * mp.besseli(0, 2 * s)) ** d, [0, 1, 10, 100])
    # analytic tail beyond s = 100 from the kernel's asymptotic series
    bser = lat.bessel_kernel_tail_series(1.1)
    tail = mp.mpf(0)
    for j, pj in enumerate(bser):
        tail += mp.mpf(pj) * mp.mpf(100) ** (nu - d / 2 - j) / (d / 2 + j - nu)
    tail *= (4 * mp.pi) ** (-d / 2) * c
    ref = float(num + tail)
    assert lat.bz_integral("power", 1.1, z=0.0, nu=0.5) == pytest.approx(
        ref, rel=1e-10)
