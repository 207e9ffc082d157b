"""Dispersion relation, mode energies, damping rates and Brillouin-zone
integration for the hypercubic lattice, with continuous-dimension support.

The single-mode dispersion is omega_k = 2 sum_j (1 - cos k_j) on the zone
[-pi, pi]^d, so 0 <= omega <= 4d.  Non-integer d enters exclusively through
the factorised exponential kernel

    int_B dk/(2pi)^d e^{-s omega_k} = (e^{-2s} I_0(2s))^d

and Laplace-type decompositions of the integrand against it; there is no
fractal-lattice construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _integrate
from scipy import special as _sp


def quad_checked(f, a, b, *, abs_floor: float = 1e-30, rel_err: float = 1e-6,
                 **kw) -> float:
    """scipy.integrate.quad with the warning turned into a hard error check.

    QUADPACK's roundoff chatter is suppressed; instead the returned error
    estimate must be below ``rel_err`` of the result (or ``abs_floor``).
    """
    kw.setdefault("limit", 400)
    kw.setdefault("epsabs", 1e-13)
    kw.setdefault("epsrel", 1e-11)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        val, err = _integrate.quad(f, a, b, **kw)
    if abs(err) > rel_err * max(abs(val), abs_floor):
        raise UnsupportedKernelError(
            f"quadrature failed to converge (estimate {val:g}, residual {err:g})")
    return val

from .specfun import SpecFunError

__all__ = [
    "ModelParams",
    "Mode",
    "SphericalState",
    "CorrelatorTriple",
    "UnsupportedKernelError",
    "StabilityError",
    "omega_of_k",
    "lambda_pm",
    "mode_energy",
    "damping_rate",
    "bz_exp_integral",
    "bz_exp_integral_vec",
    "log_bz_exp_integral",
    "bz_laplace_integral",
    "bz_integral",
    "bz_integral_quadrature",
    "watson_a1",
]


class UnsupportedKernelError(Exception):
    """No registered Laplace decomposition for this integrand at real d."""


class StabilityError(Exception):
    """Negative radicand in Lambda_{+-}: the spherical parameter is below
    the stability bound for this mode."""


@dataclass(frozen=True)
class ModelParams:
    """Full physical configuration of a run.

    d       -- spatial dimension (> 1; real)
    g       -- quantum coupling (>= 0)
    T       -- bath temperature (>= 0)
    lam     -- spin anisotropy in [-1, 1]; the dynamics modules require 1
    gamma0  -- bath coupling scale (> 0); damping gamma_k = gamma0 Lambda_k^2
               at lam = 1, i.e. gamma0/2 * (z + omega_k)
    """

    d: float
    g: float = 0.0
    T: float = 0.0
    lam: float = 1.0
    gamma0: float = 2.0

    def __post_init__(self):
        if not self.d > 1.0:
            raise ValueError("dimension must exceed 1")
        if self.g < 0.0 or self.T < 0.0:
            raise ValueError("g and T must be non-negative")
        if not -1.0 <= self.lam <= 1.0:
            raise ValueError("anisotropy must lie in [-1, 1]")
        if not self.gamma0 > 0.0:
            raise ValueError("gamma0 must be positive")

    @property
    def gamma(self) -> float:
        """Damping scale of the correlator dynamics: gamma_k = gamma*(z+omega)."""
        return self.gamma0 / 2.0


def omega_of_k(k) -> float:
    """Dispersion omega_k = 2 sum_j (1 - cos k_j)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    return float(2.0 * np.sum(1.0 - np.cos(k)))


@dataclass(frozen=True)
class Mode:
    """A single lattice mode: wavevector components and its dispersion."""

    k: tuple[float, ...]
    omega: float

    @classmethod
    def from_k(cls, k) -> "Mode":
        kt = tuple(float(v) for v in np.atleast_1d(k))
        if any(abs(v) > math.pi + 1e-12 for v in kt):
            raise ValueError("wavevector outside the first Brillouin zone")
        return cls(k=kt, omega=omega_of_k(kt))

    @classmethod
    def from_omega(cls, omega: float) -> "Mode":
        """A stand-in mode carrying only the dispersion value (radial use)."""
        return cls(k=(), omega=float(omega))


@dataclass
class SphericalState:
    """Spherical parameter bookkeeping: z = 2(S - d) and Z(t) = int_0^t z."""

    z: float
    Z: float = 0.0

    def S(self, d: float) -> float:
        return d + self.z / 2.0


@dataclass(frozen=True)
class CorrelatorTriple:
    """Equal-time two-point functions (Q_k, Xi_k, Pi_k) at one mode."""

    Q: float
    Xi: float
    Pi: float

    def heisenberg(self) -> float:
        """Q*Pi - Xi^2; stationary value is (2 nbar + 1)^2 / 4 >= 1/4."""
        return self.Q * self.Pi - self.Xi ** 2


# ---------------------------------------------------------------------------
# single-mode quantities
# ---------------------------------------------------------------------------

def lambda_pm(mode: Mode, S: float, lam: float, d: float) -> tuple[float, float]:
    """(Lambda_+, Lambda_-) for one mode.

    Lambda_{+-} = sqrt(S + (1 +- lam)/4 (omega - 2d)); at lam = 1 this is
    (sqrt(S - d + omega/2), sqrt(S)).  A negative radicand means S violates
    the stability bound and raises :class:`StabilityError`.
    """
    shift = mode.omega - 2.0 * d
    sq_p = S + (1.0 + lam) / 4.0 * shift
    sq_m = S + (1.0 - lam) / 4.0 * shift
    if sq_p < -1e-14 or sq_m < -1e-14:
        raise StabilityError(
            f"Lambda^2 negative (S={S}, omega={mode.omega}, lam={lam})")
    return math.sqrt(max(sq_p, 0.0)), math.sqrt(max(sq_m, 0.0))


def mode_energy(mode: Mode, S: float, g: float, lam: float, d: float) -> float:
    """Single-mode energy E_k = sqrt(2 g / S) Lambda_+ Lambda_-.

    At lam = 1 this reduces to sqrt(g) sqrt(z + omega_k) with z = 2(S - d).
    """
    if g == 0.0:
        return 0.0
    lp, lm = lambda_pm(mode, S, lam, d)
    return math.sqrt(2.0 * g / S) * lp * lm


def damping_rate(mode: Mode, S: float, gamma0: float, lam: float, d: float) -> float:
    """Mode-dependent Lindblad damping rate.

    General anisotropy:
        gamma_k = gamma0 [((1+lam)/2)^2 L-^2 + ((1-lam)/2)^2 L+^2] L+^2 L-^2 / S^2
    which at lam = 1 collapses to gamma0 Lambda_k^2 = (gamma0/2)(z + omega_k);
    the classical-dynamics normalisation corresponds to gamma0 = 2.
    Invariant under the duality lam -> -lam with Lambda_+ <-> Lambda_-.
    """
    lp, lm = lambda_pm(mode, S, lam, d)
    bracket = ((1.0 + lam) / 2.0) ** 2 * lm ** 2 + ((1.0 - lam) / 2.0) ** 2 * lp ** 2
    return gamma0 * bracket * lp ** 2 * lm ** 2 / S ** 2


# ---------------------------------------------------------------------------
# Brillouin-zone integration
# ---------------------------------------------------------------------------

_IVE_ASYM_CUTOVER = 1e7  # scipy.special.ive goes NaN near 1e9


def ive0_scaled(x: float) -> float:
    """e^{-x} I_0(x) for x >= 0, valid for arbitrarily large x.

    scipy's ive fails beyond ~1e9, so the uniform asymptotic expansion
    takes over well before (relative error < 1e-20 at the cutover).
    """
    if x < _IVE_ASYM_CUTOVER:
        return float(_sp.ive(0, x))
    inv = 1.0 / x
    corr = 1.0 + inv * (0.125 + inv * (9.0 / 128.0 + inv * 75.0 / 1024.0))
    return corr / math.sqrt(2.0 * math.pi * x)


def i1_over_i0(x: float) -> float:
    """I_1(x)/I_0(x) for x >= 0, valid for arbitrarily large x."""
    if x < _IVE_ASYM_CUTOVER:
        return float(_sp.ive(1, x)) / float(_sp.ive(0, x))
    inv = 1.0 / x
    num = 1.0 - inv * (0.375 + inv * (15.0 / 128.0 + inv * 315.0 / 3072.0))
    den = 1.0 + inv * (0.125 + inv * (9.0 / 128.0 + inv * 75.0 / 1024.0))
    return num / den


def bz_exp_integral(s: float, d: float) -> float:
    """int_B dk/(2pi)^d e^{-s omega_k} = (e^{-2s} I_0(2s))^d for real d."""
    if s < 0.0:
        raise ValueError("s must be non-negative")
    if d <= 0.0:
        raise ValueError("d must be positive")
    if s == 0.0:
        return 1.0
    return ive0_scaled(2.0 * s) ** d


def bz_exp_integral_vec(s, d: float) -> np.ndarray:
    """Vectorised :func:`bz_exp_integral` (arguments below the ive cutover)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise ValueError("s must be non-negative")
    if np.any(2.0 * s >= _IVE_ASYM_CUTOVER):
        return np.array([bz_exp_integral(v, d) for v in np.ravel(s)]).reshape(s.shape)
    return _sp.ive(0, 2.0 * s) ** d


def log_bz_exp_integral(s: float, d: float) -> float:
    """log of :func:`bz_exp_integral`, stable for s up to 1e8 and beyond."""
    if s == 0.0:
        return 0.0
    return d * math.log(ive0_scaled(2.0 * s))


# --- formal power series in 1/s, used for analytic large-s tails ----------

# e^{-x} I_nu(x) sqrt(2 pi x) ~ sum_k a_k x^{-k}
_IVE0_SER = np.array([1.0, 1.0 / 8.0, 9.0 / 128.0, 225.0 / 3072.0,
                      11025.0 / 98304.0, 893025.0 / 3932160.0])
_IVE1_SER = np.array([1.0, -3.0 / 8.0, -15.0 / 128.0, -315.0 / 3072.0,
                      -14175.0 / 98304.0, -1091475.0 / 3932160.0])

_SER_K = len(_IVE0_SER) - 1


def _ser_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros(_SER_K + 1)
    for i in range(_SER_K + 1):
        for j in range(_SER_K + 1 - i):
            out[i + j] += a[i] * b[j]
    return out


def _ser_pow(a: np.ndarray, p: float) -> np.ndarray:
    """(series with a[0] = 1)**p via exp(p log(1+u)), truncated."""
    u = a.copy()
    u[0] = 0.0
    logser = np.zeros(_SER_K + 1)
    upow = np.zeros(_SER_K + 1)
    upow[0] = 1.0
    for j in range(1, _SER_K + 1):
        upow = _ser_mul(upow, u)
        logser += (-1.0) ** (j + 1) / j * upow
    logser *= p
    out = np.zeros(_SER_K + 1)
    out[0] = 1.0
    vpow = np.zeros(_SER_K + 1)
    vpow[0] = 1.0
    fact = 1.0
    for j in range(1, _SER_K + 1):
        vpow = _ser_mul(vpow, logser)
        fact *= j
        out += vpow / fact
    return out


def _ser_arg_scale(a: np.ndarray, c: float) -> np.ndarray:
    """Substitute x = c*s: coefficients of the series in 1/s."""
    return a * c ** (-np.arange(_SER_K + 1.0))


def bessel_kernel_tail_series(d: float) -> np.ndarray:
    """Coefficients p_j of B(s) (4 pi s)^{d/2} = sum_j p_j s^{-j} (s >> 1)."""
    base = _ser_arg_scale(_IVE0_SER, 2.0)  # e^{-2s} I_0(2s) sqrt(4 pi s)
    return _ser_pow(base, d)


def one_minus_i1_over_i0_series() -> np.ndarray:
    """Coefficients of (1 - I_1/I_0)(x) in powers of 1/x, leading 1/(2x)."""
    inv0 = _ser_pow(_IVE0_SER, -1.0)
    ratio = _ser_mul(_IVE1_SER, inv0)
    out = -ratio
    out[0] += 1.0
    return out


def tail_power_integral(coeffs: np.ndarray, q: float, s0: float) -> float:
    """int_{s0}^inf s^{q} sum_j c_j s^{-j} ds, term by term (all exponents < -1)."""
    out = 0.0
    for j, cj in enumerate(coeffs):
        expo = q - j
        if expo >= -1.0:
            if cj != 0.0:
                raise UnsupportedKernelError(
                    f"tail term s^{expo} is non-integrable")
            continue
        out += cj * s0 ** (expo + 1.0) / (-expo - 1.0)
    return out


def tail_power_exp_integral(coeffs: np.ndarray, q: float, s0: float,
                            z: float) -> float:
    """int_{s0}^inf s^q e^{-s z} sum_j c_j s^{-j} ds via incomplete Gammas.

    Needed for 0 < z << 1/s0, where neither the plain semi-infinite rule
    (scale 1/z too long) nor the z = 0 power tail (misses the cutoff) works.
    """
    from .specfun import gamma_upper
    out = 0.0
    for j, cj in enumerate(coeffs):
        if cj == 0.0:
            continue
        a = q - j + 1.0
        out += cj * z ** (-a) * gamma_upper(a, s0 * z)
    return out


def bz_finite_part(F, alpha: float, s0: float) -> float:
    """int_0^{s0} F(s) ds with F ~ s^alpha at the origin (alpha > -1)."""
    if alpha <= -1.0:
        raise UnsupportedKernelError(f"s^{alpha} is non-integrable at 0")
    cut = min(1.0, s0)
    if alpha != 0.0:
        part1 = quad_checked(lambda s: F(s) * s ** (-alpha) if s > 0.0 else 0.0,
                             0.0, cut, weight="alg", wvar=(alpha, 0.0))
    else:
        part1 = quad_checked(F, 0.0, cut)
    part2 = quad_checked(F, cut, s0) if s0 > cut else 0.0
    return part1 + part2


_TAIL_S0 = 100.0


def bz_laplace_integral(fhat, d: float, z: float = 0.0, *,
                        alpha: float = 0.0, fhat_tail=None) -> float:
    """int_0^infty fhat(s) e^{-s z} B(s, d) ds with B the exponential kernel.

    ``alpha`` is the power-law exponent of fhat at s -> 0.  For z > 0 the
    decay is exponential and the adaptive semi-infinite rule applies; at
    z = 0 the tail beyond s0 = 100 is integrated analytically, which needs
    the large-s expansion of fhat: ``fhat_tail = (q, coeffs)`` meaning
    fhat(s) ~ s^q sum_j coeffs_j s^{-j}.  Defaults to the constant
    fhat(inf) continuation of a plain power (q = alpha, c = [limit]).
    """
    if z < 0.0:
        raise ValueError("z must be non-negative for a convergent s-integral")

    def F(s):
        return fhat(s) * math.exp(-s * z) * bz_exp_integral(s, d)

    if z * _TAIL_S0 > 30.0:
        # exponential cutoff acts before the algebraic tail matters
        return quad_checked(F, 0.0, np.inf)
    if fhat_tail is None:
        q = alpha
        fc = np.zeros(_SER_K + 1)
        fc[0] = fhat(_TAIL_S0) * _TAIL_S0 ** (-alpha)
    else:
        q, fc = fhat_tail
        fc = np.asarray(fc, dtype=float)
        if len(fc) < _SER_K + 1:
            fc = np.concatenate([fc, np.zeros(_SER_K + 1 - len(fc))])
        fc = fc[:_SER_K + 1]
    bser = bessel_kernel_tail_series(d)
    prod = _ser_mul(fc, bser)
    if z == 0.0:
        tail = (4.0 * math.pi) ** (-d / 2.0) \
            * tail_power_integral(prod, q - d / 2.0, _TAIL_S0)
    else:
        tail = (4.0 * math.pi) ** (-d / 2.0) \
            * tail_power_exp_integral(prod, q - d / 2.0, _TAIL_S0, z)
    return bz_finite_part(F, alpha, _TAIL_S0) + tail


def bz_integral(kernel: str, d: float, *, z: float = 0.0, nu: float = 1.0,
                a: float = 0.0, s: float = 0.0) -> float:
    """Brillouin-zone integral of a registered omega-kernel at real d.

    Registered kernels (h(omega) below), selected by name:

    - ``"exp"``:        e^{-s omega}
    - ``"power"``:      (z + omega)^{-nu}            (nu > 0)
    - ``"exp_sqrt"``:   e^{-a sqrt(z+omega)} (z + omega)^{-1/2}

    Everything routes through the Laplace decomposition against the
    factorised kernel; anything else at non-integer d raises
    :class:`UnsupportedKernelError` (use :func:`bz_integral_quadrature`
    for integer d <= 3).
    """
    if kernel == "exp":
        return bz_exp_integral(s, d)
    if kernel == "power":
        if nu <= 0.0:
            raise ValueError("power kernel needs nu > 0")
        if z == 0.0 and d / 2.0 + nu - 1.0 <= 0.0:
            raise UnsupportedKernelError(
                f"(omega)^-{nu} integral diverges at d={d}")
        c = 1.0 / math.gamma(nu)
        tail = (nu - 1.0, np.array([c]))
        return bz_laplace_integral(lambda sv: c * sv ** (nu - 1.0), d, z,
                                   alpha=nu - 1.0, fhat_tail=tail)
    if kernel == "exp_sqrt":
        if a < 0.0:
            raise ValueError("exp_sqrt kernel needs a >= 0")
        c = 1.0 / math.sqrt(math.pi)

        def fhat(sv):
            if sv == 0.0:
                return 0.0
            return c * sv ** (-0.5) * math.exp(-a * a / (4.0 * sv))

        # exp(-a^2/(4s)) = sum_k (-a^2/4)^k / k! s^{-k} at large s
        ser = np.array([c * (-a * a / 4.0) ** k / math.factorial(k)
                        for k in range(6)])
        return bz_laplace_integral(fhat, d, z, alpha=0.0,
                                   fhat_tail=(-0.5, ser))
    raise UnsupportedKernelError(f"no decomposition registered for {kernel!r}")


def _gauss_legendre_axis(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    # map [-1, 1] -> [-pi, pi] with the 1/(2pi) measure per axis
    return math.pi * x, w / 2.0


def bz_integral_quadrature(h, d: int, n: int = 64) -> float:
    """Direct tensor-product Gauss-Legendre quadrature of h(omega_k).

    Integer-d oracle used to cross-validate the kernel decompositions;
    vectorised over the grid, n nodes per axis.
    """
    if d not in (1, 2, 3):
        raise UnsupportedKernelError("direct quadrature only for d in {1,2,3}")
    x, w = _gauss_legendre_axis(n)
    one_minus_cos = 1.0 - np.cos(x)
    if d == 1:
        omega = 2.0 * one_minus_cos
        weights = w
    elif d == 2:
        omega = 2.0 * (one_minus_cos[:, None] + one_minus_cos[None, :])
        weights = w[:, None] * w[None, :]
    else:
        omega = 2.0 * (one_minus_cos[:, None, None] + one_minus_cos[None, :, None]
                       + one_minus_cos[None, None, :])
        weights = w[:, None, None] * w[None, :, None] * w[None, None, :]
    return float(np.sum(weights * h(omega)))


def watson_a1(d: float) -> float:
    """A_1 = int_B dk/(2pi)^d / omega_k; finite for d > 2 (Watson integral)."""
    if d <= 2.0:
        raise UnsupportedKernelError("A_1 diverges for d <= 2")
    return bz_integral("power", d, z=0.0, nu=1.0)
