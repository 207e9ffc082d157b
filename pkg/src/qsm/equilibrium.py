"""Equilibrium spherical constraint: solve z(d, T, g, lam), locate critical
lines, and produce phase-diagram data.

The isotropic (lam = 1) constraint is

    sqrt(g)/2 * int_B dk/(2pi)^d (z+omega)^{-1/2} coth(sqrt(g(z+omega))/(2T)) = 1

evaluated for any real d > 1 through the factorised Brillouin-zone kernel:
the thermal coth sum is resummed with a Jacobi theta function so the
integrand stays uniformly accurate down to z = 0.  General anisotropy is
supported at T = 0 through a Bessel-product Laplace kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _optimize

from .lattice import (CorrelatorTriple, Mode, ModelParams, StabilityError,
                      UnsupportedKernelError, _ser_arg_scale, _ser_mul,
                      bessel_kernel_tail_series, bz_exp_integral,
                      bz_finite_part, bz_integral, bz_laplace_integral,
                      i1_over_i0, ive0_scaled, lambda_pm, mode_energy,
                      one_minus_i1_over_i0_series, quad_checked,
                      tail_power_exp_integral, tail_power_integral,
                      watson_a1)

__all__ = [
    "EquilibriumSolution",
    "constraint_lhs",
    "solve_z",
    "critical_coupling",
    "critical_temperature",
    "stationary_correlators",
    "effective_temperature_shift",
]


@dataclass(frozen=True)
class EquilibriumSolution:
    """Root of the equilibrium constraint.

    phase is "ferromagnetic" when the constraint at z = 0 falls short of 1
    (macroscopic condensate makes up the difference), "critical" on the
    boundary, "paramagnetic" otherwise.  condensate is the missing spectral
    weight 1 - LHS(0) in the ordered phase, else 0.
    """

    z: float
    residual: float
    phase: str
    iterations: int
    condensate: float = 0.0


def _theta3_sum(x: float) -> float:
    """sum_{n in Z} exp(-n^2 x) for x > 0, via Jacobi's transformation."""
    if x <= 0.0:
        raise ValueError("theta sum needs x > 0")
    if x > 745.0:
        return 1.0
    if x >= math.pi:
        s = 1.0
        n = 1
        while True:
            t = 2.0 * math.exp(-n * n * x)
            s += t
            if t < 1e-17 * s:
                return s
            n += 1
    return math.sqrt(math.pi / x) * _theta3_sum(math.pi ** 2 / x)


_GLAG_NODES = np.polynomial.laguerre.laggauss(64)

# moments mu_j = int_B omega^j for the large-argument Green-kernel series
def _omega_moments(d: float) -> tuple[float, float, float]:
    mu1 = 2.0 * d
    mu2 = 4.0 * d * d + 2.0 * d
    mu3 = 20.0 * d + 36.0 * d * (d - 1.0) + 8.0 * d * (d - 1.0) * (d - 2.0)
    return mu1, mu2, mu3


def _green_kernel(zeta: np.ndarray, d: float) -> np.ndarray:
    """L(zeta) = int_B dk/(2pi)^d 1/(zeta + omega) for an array of zeta > 0,
    via 64-node Gauss-Laguerre on the factorised exponential kernel."""
    u, w = _GLAG_NODES
    s = u[None, :] / zeta[:, None]
    from scipy.special import ive
    b = ive(0, 2.0 * s) ** d
    return (w[None, :] * b).sum(axis=1) / zeta


def _lhs_isotropic(z: float, p: ModelParams) -> float:
    """LHS of the lam = 1 constraint; +inf signals the d <= 2 divergence.

    Thermal case: the coth expansion coth(E/2T) = 1 + 2 sum_n e^{-nE/T}
    is resummed exactly into Green-kernel evaluations at shifted arguments,

        LHS = T L(z) + 2T sum_{m>=1} L(z + pi^2 m^2 / c),   c = g/(4T^2),

    whose leading 1/zeta part has the closed coth form; the remainders
    decay like m^{-4} and are summed directly.  This is uniformly accurate
    from the classical limit (recovering the g/(12T) shift) down to T -> 0.
    """
    d, g, T = p.d, p.g, p.T
    if g == 0.0:
        if T == 0.0:
            return 0.0
        if z == 0.0 and d <= 2.0:
            return math.inf
        return T * bz_integral("power", d, z=z, nu=1.0)
    if T == 0.0:
        return 0.5 * math.sqrt(g) * bz_integral("power", d, z=z, nu=0.5)
    if z == 0.0 and d <= 2.0:
        return math.inf
    c = g / (4.0 * T * T)
    if c > 1e8:
        # thermal occupation negligible at double precision: T = 0 limit
        return 0.5 * math.sqrt(g) * bz_integral("power", d, z=z, nu=0.5)

    base = T * bz_integral("power", d, z=z, nu=1.0)

    # closed form of sum_m 1/(m^2 + a^2), a = sqrt(z c)/pi
    a_sq = z * c / math.pi ** 2
    if a_sq > 2.5e-3:
        a = math.sqrt(a_sq)
        s2 = (math.pi / (2.0 * a)) / math.tanh(math.pi * a) \
            - 1.0 / (2.0 * a_sq)
    else:
        s2 = (math.pi ** 2 / 6.0 - a_sq * math.pi ** 4 / 90.0
              + a_sq * a_sq * math.pi ** 6 / 945.0)
    lead = 2.0 * T * (c / math.pi ** 2) * s2

    # corrections L(zeta_m) - 1/zeta_m, quadrature below zeta = 1e4 and the
    # moment series beyond
    m_quad = int(math.sqrt(max(1e4 - z, 0.0) * c) / math.pi)
    corr = 0.0
    if m_quad >= 1:
        m = np.arange(1, m_quad + 1)
        zeta = z + math.pi ** 2 * m ** 2 / c
        corr += float(np.sum(_green_kernel(zeta, d) - 1.0 / zeta))
    mu1, mu2, mu3 = _omega_moments(d)
    m = np.arange(m_quad + 1, 40_000)
    zeta = z + math.pi ** 2 * m * m / c
    corr += float(np.sum(-mu1 / zeta ** 2 + mu2 / zeta ** 3
                         - mu3 / zeta ** 4))
    return base + lead + 2.0 * T * corr


def _lambda_ratio_integral(S: float, d: float, lam: float,
                           swap: bool = False) -> float:
    """int_B dk/(2pi)^d Lambda_-/Lambda_+ at real d, |lam| < 1 (T = 0 path).

    Uses x_{+-} = c_{+-} (omega - r_{+-}) with c = (1 +- lam)/4 and the
    Laplace pair  [(omega-r_+)(omega-r_-)]^{-1/2}
                  = int_0^inf e^{-s omega} e^{s rbar} I_0(s dr) ds,
    valid for omega > max(r); the linear factor in the numerator turns into
    a -dB/ds term.  ``swap`` integrates Lambda_+/Lambda_- instead (duality).
    """
    cp = (1.0 + lam) / 4.0
    cm = (1.0 - lam) / 4.0
    if cp <= 0.0 or cm <= 0.0:
        raise UnsupportedKernelError("|lam| = 1 uses the dedicated paths")
    rp = 2.0 * d - S / cp
    rm = 2.0 * d - S / cm
    if max(rp, rm) > 1e-12:
        raise StabilityError("S below the stability bound for this lam")
    rbar = 0.5 * (rp + rm)
    dr = 0.5 * abs(rp - rm)
    # numerator x_- = cm (omega - rm); swapped: x_+ = cp (omega - rp)
    cnum, rnum = (cp, rp) if swap else (cm, rm)
    pref = cnum / math.sqrt(cp * cm)

    def F(s):
        if s == 0.0:
            return 0.0
        b = bz_exp_integral(s, d)
        if b == 0.0:
            return 0.0
        # -B'(s) = 2 d B(s) (1 - I1/I0)
        ratio = i1_over_i0(2.0 * s)
        moment = 2.0 * d * b * (1.0 - ratio) - rnum * b
        # e^{s rbar} I_0(s dr) computed in scaled form; rbar + dr <= 0
        envelope = math.exp(s * (rbar + dr)) * ive0_scaled(s * dr) \
            if dr > 0.0 else math.exp(s * rbar)
        return pref * envelope * moment

    rmax = max(rp, rm)
    if rmax < -1e-8:
        return quad_checked(F, 0.0, np.inf)

    # At criticality (rmax = 0) the envelope loses its exponential decay and
    # the tail s^{-(d+1)/2}-ish must be integrated analytically: multiply the
    # 1/s expansions of I_0(dr s), B(s) (4 pi s)^{d/2} and the moment bracket.
    s0 = 100.0
    bser = bessel_kernel_tail_series(d)
    mser = 2.0 * d * _ser_arg_scale(one_minus_i1_over_i0_series(), 2.0)
    mser[0] += -rnum
    prod = _ser_mul(bser, mser)
    if dr > 0.0:
        eser = _ser_arg_scale(np.array([1.0, 1.0 / 8.0, 9.0 / 128.0,
                                        225.0 / 3072.0, 11025.0 / 98304.0,
                                        893025.0 / 3932160.0]), dr)
        prod = _ser_mul(prod, eser)
        amp = pref / math.sqrt(2.0 * math.pi * dr) * (4.0 * math.pi) ** (-d / 2.0)
        tail = amp * tail_power_integral(prod, -0.5 - d / 2.0, s0)
    else:
        amp = pref * (4.0 * math.pi) ** (-d / 2.0)
        tail = amp * tail_power_integral(prod, -d / 2.0, s0)
    return bz_finite_part(F, 0.0, s0) + tail


def _lhs_general(z_or_S: float, p: ModelParams, *, swap: bool = False) -> float:
    """LHS of the general-lam constraint sqrt(g/8S) * ratio integral (T = 0)."""
    if p.T != 0.0:
        raise UnsupportedKernelError(
            "anisotropic constraint only registered at T = 0")
    S = p.d + z_or_S / 2.0
    if p.lam == -1.0:
        # Lambda_-/Lambda_+ = sqrt((z+omega)/(2S)): reduces to moment integrals
        i_half = bz_integral("power", p.d, z=z_or_S, nu=0.5)
        # int (z+omega)^{1/2} = z * int (z+omega)^{-1/2} + int omega (z+omega)^{-1/2}

        def fhat(s):
            if s == 0.0:
                return 0.0
            return s ** (-0.5) / math.sqrt(math.pi) * 2.0 * p.d \
                * (1.0 - i1_over_i0(2.0 * s))

        tser = 2.0 * p.d / math.sqrt(math.pi) \
            * _ser_arg_scale(one_minus_i1_over_i0_series(), 2.0)
        m_half = bz_laplace_integral(fhat, p.d, z_or_S, alpha=-0.5,
                                     fhat_tail=(-0.5, tser))
        ratio_int = (z_or_S * i_half + m_half) / math.sqrt(2.0 * S)
        if swap:
            ratio_int = math.sqrt(2.0 * S) * i_half
        return math.sqrt(p.g / (8.0 * S)) * ratio_int
    ratio_int = _lambda_ratio_integral(S, p.d, p.lam, swap=swap)
    return math.sqrt(p.g / (8.0 * S)) * ratio_int


def constraint_lhs(z: float, p: ModelParams, *, swap: bool = False) -> float:
    """Momentum integral on the left of the equilibrium constraint.

    Strictly decreasing in z; returns +inf when the d <= 2 thermal
    divergence is hit at z = 0.  ``swap`` exchanges Lambda_+ <-> Lambda_-
    (the duality companion, only meaningful for lam != 1).
    """
    if z < 0.0:
        raise ValueError("equilibrium requires z >= 0")
    if p.lam == 1.0 and not swap:
        return _lhs_isotropic(z, p)
    return _lhs_general(z, p, swap=swap)


def solve_z(p: ModelParams, tol: float = 1e-12) -> EquilibriumSolution:
    """Solve constraint_lhs(z) = 1 for z >= 0; classify the phase.

    The bracket starts from the large-z asymptote of the constraint
    (T/z classically, sqrt(g)/(2 sqrt(z)) in the quantum case) and expands
    geometrically; below the transition the solution sits at z = 0 with the
    missing weight reported as condensate fraction.
    """
    lhs0 = constraint_lhs(0.0, p) if _lhs0_finite(p) else math.inf
    if lhs0 < 1.0 - 1e-12:
        return EquilibriumSolution(z=0.0, residual=lhs0 - 1.0,
                                   phase="ferromagnetic", iterations=0,
                                   condensate=1.0 - lhs0)
    if abs(lhs0 - 1.0) <= 1e-12:
        return EquilibriumSolution(z=0.0, residual=lhs0 - 1.0,
                                   phase="critical", iterations=0)

    z_hi = 4.0 * max(p.T, p.g / 4.0, math.sqrt(p.g), 1.0)
    it = 0
    while constraint_lhs(z_hi, p) > 1.0:
        z_hi *= 4.0
        it += 1
        if z_hi > 1e18:
            raise RuntimeError("failed to bracket the constraint root")
    z_lo = 0.0
    f_lo = lhs0 - 1.0
    if not math.isfinite(f_lo):
        z_lo = 1e-14
        while not math.isfinite(constraint_lhs(z_lo, p)):
            z_lo *= 10.0

    def f(z):
        return constraint_lhs(z, p) - 1.0

    z = float(_optimize.brentq(f, z_lo, z_hi, xtol=1e-300, rtol=1e-14,
                               maxiter=200))
    res = f(z)
    if abs(res) > 1e-10:
        # brentq converged on x; polish once with a secant step
        z2 = z * (1.0 + 1e-7) + 1e-18
        res2 = f(z2)
        if res2 != res:
            z = z - res * (z2 - z) / (res2 - res)
            res = f(z)
    return EquilibriumSolution(z=z, residual=res, phase="paramagnetic",
                               iterations=it)


def _lhs0_finite(p: ModelParams) -> bool:
    return not (p.d <= 2.0 and p.T > 0.0)


def critical_coupling(d: float, lam: float = 1.0) -> float:
    """Zero-temperature critical coupling g_c(d, lam).

    The gap closes at S_c = d (1 + |lam|)/2; inserting S_c into the T = 0
    constraint and solving for g gives g_c = 8 S_c / I^2 with
    I = int_B Lambda_-/Lambda_+.  For lam = 1 this is the familiar
    g_c = 4 / (int_B omega^{-1/2})^2.
    """
    if d <= 1.0:
        raise ValueError("no quantum transition for d <= 1")
    if lam == 0.0:
        # Lambda_- = Lambda_+: ratio integral is exactly 1
        return 8.0 * (d / 2.0)
    if abs(lam) == 1.0:
        i = bz_integral("power", d, z=0.0, nu=0.5)
        if lam > 0.0:
            return 4.0 / i ** 2
        # lam = -1: ratio integral = int sqrt(omega/(2S_c)), S_c = d
        p = ModelParams(d=d, g=1.0, T=0.0, lam=-1.0)
        val = _lhs_general(0.0, p)  # sqrt(1/(8 d)) * I at g = 1
        return 1.0 / val ** 2
    s_c = d * (1.0 + abs(lam)) / 2.0
    i = _lambda_ratio_integral(s_c, d, lam)
    return 8.0 * s_c / i ** 2


def critical_temperature(d: float, g: float) -> float:
    """Critical temperature T_c(g) of the isotropic model (lam = 1).

    Root of the constraint at z = 0; T_c(0) = 1/A_1 (Watson integral) for
    d > 2, zero for d <= 2 or for g >= g_c(d).
    """
    if d <= 2.0:
        return 0.0
    if g == 0.0:
        return 1.0 / watson_a1(d)
    if g >= critical_coupling(d, 1.0):
        return 0.0

    def f(T):
        return _lhs_isotropic(0.0, ModelParams(d=d, g=g, T=T)) - 1.0

    t_hi = 1.2 / watson_a1(d)
    while f(t_hi) < 0.0:
        t_hi *= 2.0
    return float(_optimize.brentq(f, 1e-8, t_hi, rtol=1e-13, maxiter=200))


def effective_temperature_shift(d: float, g: float) -> float:
    """Critical temperature predicted by the effective-temperature map.

    Solves T/(1 - g/(12 T)) = T_c(0), the first-order-in-g critical line.
    """
    tc0 = 1.0 / watson_a1(d)
    disc = tc0 * tc0 - tc0 * g / 3.0
    if disc < 0.0:
        raise ValueError("effective-temperature line undefined at this g")
    return 0.5 * (tc0 + math.sqrt(disc))


def stationary_correlators(mode: Mode, p: ModelParams, S: float) -> CorrelatorTriple:
    """Stationary (equilibrium) values of (Q, Xi, Pi) for one mode.

        Q_inf  = (1/4) sqrt(2g/S) (L-/L+) coth(E/2T)
        Pi_inf = sqrt(S/2g) (L+/L-) coth(E/2T),   Xi_inf = 0

    with coth -> 1 at T = 0.
    """
    if p.g == 0.0:
        raise ValueError("stationary triple needs g > 0 (classical Q = T/(z+omega))")
    lp, lm = lambda_pm(mode, S, p.lam, p.d)
    if lp == 0.0 or lm == 0.0:
        raise StabilityError("gapless mode: stationary correlators diverge")
    e = mode_energy(mode, S, p.g, p.lam, p.d)
    if p.T == 0.0:
        th = 1.0
    else:
        th = 1.0 / math.tanh(e / (2.0 * p.T))
    q = 0.25 * math.sqrt(2.0 * p.g / S) * (lm / lp) * th
    pi = math.sqrt(S / (2.0 * p.g)) * (lp / lm) * th
    return CorrelatorTriple(Q=q, Xi=0.0, Pi=pi)
