"""Scalar special functions used throughout the toolkit.

Gamma-family helpers, Bessel functions, generalized hypergeometric series
pFq, the two-variable Humbert function Phi3 (series and Laplace-convolution
representations), the real branches of the Lambert-W function, and a few
cancellation-safe identities that the constraint solvers rely on.

All series are summed with compensated (Kahan) accumulation; a cancellation
monitor escalates to double-double arithmetic when an alternating series has
lost more than ~6 digits.  Quantities that overflow double precision are
carried as (mantissa, log_scale) pairs via :class:`EvalResult`.

Everything here is pure and reentrant; there is no global state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _integrate
from scipy import special as _sp

__all__ = [
    "SeriesControl",
    "EvalResult",
    "SpecFunError",
    "ConvergenceError",
    "log_gamma",
    "gamma_bracket",
    "gamma_upper",
    "bessel_i",
    "bessel_j",
    "hyp_pfq",
    "hyp0f1",
    "hyp1f1_large_neg",
    "humbert_phi3_series",
    "humbert_phi3_conv",
    "lambert_w",
    "one_minus_0f1_half_over_x",
    "eps_limit_1f2",
    "appendixC_derivative",
    "selftest",
]


class SpecFunError(Exception):
    """Domain or evaluation failure in a special-function routine."""


class ConvergenceError(SpecFunError):
    """A series or quadrature did not converge within its budget."""


@dataclass(frozen=True)
class SeriesControl:
    """Tolerance and term-cap policy for series evaluation.

    A sum is declared converged once the last term is below
    ``rel_tol * |partial sum| + abs_tol``; running past ``max_terms``
    raises :class:`ConvergenceError` instead of silently truncating.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-300
    max_terms: int = 10_000

    def __post_init__(self):
        if not self.rel_tol > 0.0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


DEFAULT_CONTROL = SeriesControl()


@dataclass(frozen=True)
class EvalResult:
    """Value of a series/function evaluation.

    The represented quantity is ``value * exp(log_scale)``; the split exists
    because factors like exp(2*sqrt(g*t*|Z|)) overflow long before the
    constraint solver is done balancing them against each other.
    """

    value: float
    terms_used: int = 0
    converged: bool = True
    log_scale: float = 0.0

    def unscaled(self) -> float:
        """Collapse to a plain float (may overflow to inf by design)."""
        if self.log_scale == 0.0:
            return self.value
        return self.value * math.exp(self.log_scale)

    def log_abs(self) -> float:
        """log|value * exp(log_scale)|; -inf for an exact zero."""
        if self.value == 0.0:
            return -math.inf
        return math.log(abs(self.value)) + self.log_scale

    @property
    def sign(self) -> float:
        return math.copysign(1.0, self.value)


# ---------------------------------------------------------------------------
# double-double arithmetic (Dekker/Knuth), used as the extended-precision
# fallback when the cancellation monitor trips
# ---------------------------------------------------------------------------

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a: float) -> tuple[float, float]:
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a: float, b: float) -> tuple[float, float]:
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _dd_add(xh, xl, yh, yl):
    s, e = _two_sum(xh, yh)
    e += xl + yl
    return _two_sum(s, e)


def _dd_mul(xh, xl, yh, yl):
    p, e = _two_prod(xh, yh)
    e += xh * yl + xl * yh
    return _two_sum(p, e)


def _dd_mul_scalar(xh, xl, c):
    p, e = _two_prod(xh, c)
    e += xl * c
    return _two_sum(p, e)


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------

def log_gamma(x: float) -> tuple[float, float]:
    """ln|Gamma(x)| together with the sign of Gamma(x).

    Raises for the poles at non-positive integers.
    """
    if x <= 0.0 and x == math.floor(x):
        raise SpecFunError(f"Gamma pole at x={x}")
    return float(_sp.gammaln(x)), float(_sp.gammasgn(x))


def gamma_bracket(num: tuple[float, ...], den: tuple[float, ...]) -> float:
    """Ratio prod Gamma(a_i) / prod Gamma(b_j) through signed logs.

    This is the bracket notation used pervasively by the constraint sums;
    going through logs keeps ratios of huge Gammas finite.
    """
    log_total = 0.0
    sign = 1.0
    for a in num:
        la, sa = log_gamma(a)
        log_total += la
        sign *= sa
    for b in den:
        lb, sb = log_gamma(b)
        log_total -= lb
        sign *= sb
    return sign * math.exp(log_total)


def gamma_upper(a: float, x: float, *, as_log: bool = False):
    """Upper incomplete Gamma function Gamma(a, x) for real a and x >= 0.

    scipy only exposes the regularized version for a > 0, so negative ``a``
    is reached with the downward recurrence
    Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a.

    With ``as_log=True`` returns ``(log|Gamma(a,x)|, sign)`` instead, which is
    the overflow-safe channel.
    """
    if x < 0.0:
        raise SpecFunError("gamma_upper requires x >= 0")
    if x == 0.0:
        if a <= 0.0:
            raise SpecFunError("Gamma(a, 0) diverges for a <= 0")
        val = _sp.gammaln(a)
        if as_log:
            return val, 1.0
        return math.exp(val)

    if a > 0.0:
        # Gamma(a,x) = Q(a,x) * Gamma(a), computed in logs to dodge overflow.
        q = float(_sp.gammaincc(a, x))
        if q > 0.0:
            logv = math.log(q) + float(_sp.gammaln(a))
            if as_log:
                return logv, 1.0
            return math.exp(logv)
        # Deep right tail: asymptotic continued-fraction start
        # Gamma(a,x) ~ x^(a-1) e^{-x} [1 + (a-1)/x + ...]
        logv = (a - 1.0) * math.log(x) - x
        corr = 1.0
        term = 1.0
        for j in range(1, 40):
            term *= (a - j) / x
            corr += term
            if abs(term) < 1e-17 * abs(corr):
                break
        if as_log:
            return logv + math.log(abs(corr)), math.copysign(1.0, corr)
        return math.exp(logv) * corr

    # a <= 0: descend with Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x})/a,
    # anchored at Gamma(0, x) = E_1(x) when a is a non-positive integer.
    if a == math.floor(a):
        m = int(-a)
        top = float(_sp.exp1(x))
    else:
        m = int(math.ceil(-a)) + 1
        top = gamma_upper(a + m, x)
    logx = math.log(x)
    for j in range(m):
        aj = a + m - 1 - j  # current parameter after this step
        top = (top - math.exp(aj * logx - x)) / aj
    if as_log:
        if top == 0.0:
            return -math.inf, 1.0
        return math.log(abs(top)), math.copysign(1.0, top)
    return top


# ---------------------------------------------------------------------------
# Bessel functions
# ---------------------------------------------------------------------------

_BESSEL_I_SCALE_CUTOVER = 600.0


def bessel_i(nu: float, x: float) -> EvalResult:
    """Modified Bessel function I_nu(x) for x >= 0.

    Beyond the overflow cutover the result is returned in scaled form,
    value = e^{-x} I_nu(x) with log_scale = x, so kernels like
    e^{-2*gamma*t} I_0(2*gamma*t) stay computable for gamma*t up to 1e8
    and beyond.
    """
    if x < 0.0:
        raise SpecFunError("bessel_i requires x >= 0")
    if x <= _BESSEL_I_SCALE_CUTOVER:
        return EvalResult(value=float(_sp.iv(nu, x)), terms_used=0, converged=True)
    return EvalResult(value=float(_sp.ive(nu, x)), terms_used=0, converged=True,
                      log_scale=x)


def bessel_j(nu: float, x: float) -> float:
    """Bessel function of the first kind, J_nu(x), for x >= 0, nu >= -1."""
    if x < 0.0:
        raise SpecFunError("bessel_j requires x >= 0")
    if nu < -1.0:
        raise SpecFunError("bessel_j requires nu >= -1")
    return float(_sp.jv(nu, x))


# ---------------------------------------------------------------------------
# generalized hypergeometric series pFq
# ---------------------------------------------------------------------------

def _pochhammer_ratio(params: tuple[float, ...], n: int) -> float:
    r = 1.0
    for p in params:
        r *= p + n
    return r


def _pfq_series_float(a, b, x, ctl: SeriesControl):
    """Kahan-compensated direct summation; returns (sum, terms, converged, peak)."""
    s = 1.0
    c = 0.0  # Kahan carry
    term = 1.0
    peak = 1.0
    for n in range(ctl.max_terms):
        ratio = _pochhammer_ratio(a, n) / _pochhammer_ratio(b, n) * x / (n + 1.0)
        term *= ratio
        y = term - c
        t = s + y
        c = (t - s) - y
        s = t
        at = abs(term)
        if at > peak:
            peak = at
        if at <= ctl.rel_tol * abs(s) + ctl.abs_tol:
            # one extra term guards against accidental zeros of the ratio
            nxt = term * _pochhammer_ratio(a, n + 1) / _pochhammer_ratio(b, n + 1) * x / (n + 2.0)
            if abs(nxt) <= ctl.rel_tol * abs(s) + ctl.abs_tol:
                return s, n + 2, True, peak
        if not math.isfinite(s):
            return s, n + 2, False, peak
    return s, ctl.max_terms, False, peak


def _pfq_series_dd(a, b, x, ctl: SeriesControl):
    """Double-double summation for the cancellation-flagged cases."""
    sh, sl = 1.0, 0.0
    th, tl = 1.0, 0.0
    peak = 1.0
    for n in range(ctl.max_terms):
        num = _pochhammer_ratio(a, n)
        den = _pochhammer_ratio(b, n) * (n + 1.0)
        th, tl = _dd_mul_scalar(th, tl, num)
        th, tl = _dd_mul_scalar(th, tl, x)
        # scalar division in dd: multiply by high part of 1/den then correct
        inv = 1.0 / den
        h, l = _dd_mul_scalar(th, tl, inv)
        # one Newton correction for the reciprocal error
        rh, rl = _dd_mul_scalar(h, l, den)
        rh, rl = _dd_add(rh, rl, -th, -tl)
        ch, cl = _dd_mul_scalar(rh, rl, inv)
        th, tl = _dd_add(h, l, -ch, -cl)
        sh, sl = _dd_add(sh, sl, th, tl)
        at = abs(th)
        if at > peak:
            peak = at
        if at <= ctl.rel_tol * abs(sh) + ctl.abs_tol and n > 1:
            return sh + sl, n + 1, True, peak
    return sh + sl, ctl.max_terms, False, peak


_CANCEL_GUARD = 1e-6


def hyp_pfq(a, b, x: float, ctl: SeriesControl = DEFAULT_CONTROL) -> EvalResult:
    """Generalized hypergeometric pFq(a; b; x) by direct series.

    Requires p <= q+1 and no lower parameter at a non-positive integer.
    Alternating series that lose more than ~6 digits to cancellation are
    re-summed in double-double arithmetic, so converged results are good to
    much better than the cancellation guard.
    """
    a = tuple(float(v) for v in a)
    b = tuple(float(v) for v in b)
    for bj in b:
        if bj <= 0.0 and bj == math.floor(bj):
            raise SpecFunError(f"lower parameter {bj} is a non-positive integer")
    if len(a) > len(b) + 1:
        raise SpecFunError("series requires p <= q+1")
    if len(a) == len(b) + 1 and abs(x) >= 1.0:
        raise ConvergenceError("p = q+1 series diverges for |x| >= 1")
    if x == 0.0:
        return EvalResult(1.0, 1, True)

    s, n, ok, peak = _pfq_series_float(a, b, x, ctl)
    if not ok:
        raise ConvergenceError(
            f"pFq({a};{b};{x}) did not converge within {ctl.max_terms} terms")
    if abs(s) < _CANCEL_GUARD * peak:
        s, n, ok, peak = _pfq_series_dd(a, b, x, ctl)
        if not ok:
            raise ConvergenceError(
                f"pFq({a};{b};{x}) dd-summation failed within {ctl.max_terms} terms")
        if abs(s) < 1e-22 * peak:
            # even ~32 digits were not enough; report rather than lie
            return EvalResult(s, n, False)
    return EvalResult(s, n, True)


def hyp0f1(b: float, x: float) -> float:
    """0F1(b; x) through its trigonometric/Bessel closed forms when possible.

    The generic series is fine for moderate x, but the constraint work needs
    this for x of either sign and magnitude up to ~1e9, where the closed
    forms are the only stable route.  b = 1/2 and b = 3/2 are exact:

        0F1(1/2; x)  = cosh(2 sqrt(x))          (x >= 0), cos for x < 0
        0F1(3/2; x)  = sinh(2 sqrt(x))/(2 sqrt(x)),  sin for x < 0

    Other b go through Bessel functions of the first/modified kind.
    """
    if x == 0.0:
        return 1.0
    if b == 0.5:
        if x >= 0.0:
            return math.cosh(2.0 * math.sqrt(x))
        return math.cos(2.0 * math.sqrt(-x))
    if b == 1.5:
        if x >= 0.0:
            r = 2.0 * math.sqrt(x)
            return math.sinh(r) / r
        r = 2.0 * math.sqrt(-x)
        return math.sin(r) / r
    if abs(x) <= 25.0:
        return hyp_pfq((), (b,), x).value
    nu = b - 1.0
    if x > 0.0:
        r = 2.0 * math.sqrt(x)
        iv = bessel_i(nu, r)
        lg, sg = log_gamma(b)
        return sg * iv.value * math.exp(lg - nu * math.log(math.sqrt(x)) + iv.log_scale)
    r = 2.0 * math.sqrt(-x)
    lg, sg = log_gamma(b)
    return sg * math.exp(lg) * (-x) ** (-nu / 2.0) * float(_sp.jv(nu, r))


def hyp0f1_log(b: float, x: float) -> tuple[float, float]:
    """(log|0F1(b;x)|, sign) -- overflow-safe for the exploding x > 0 branch."""
    if x <= 0.0:
        v = hyp0f1(b, x)
        if v == 0.0:
            return -math.inf, 1.0
        return math.log(abs(v)), math.copysign(1.0, v)
    r = 2.0 * math.sqrt(x)
    if b == 0.5:
        # cosh(r) = e^r (1 + e^{-2r})/2
        return r + math.log1p(math.exp(-2.0 * r)) - math.log(2.0), 1.0
    if b == 1.5:
        return r + math.log1p(-math.exp(-2.0 * r)) - math.log(2.0 * r), 1.0
    nu = b - 1.0
    iv = bessel_i(nu, r)
    lg, sg = log_gamma(b)
    return (lg + math.log(abs(iv.value)) + iv.log_scale - nu * math.log(r / 2.0),
            sg * math.copysign(1.0, iv.value))


def hyp1f1_large_neg(a: float, b: float, x: float,
                     ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """1F1(a; b; x) valid also for large negative x.

    For x <= -30 the direct series cancels catastrophically, so the standard
    large-|x| expansion 1F1(a;b;-y) ~ Gamma(b)/Gamma(b-a) y^{-a} 2F0-series
    is used instead; otherwise the series (with dd fallback) is summed.
    """
    if x > -30.0:
        return hyp_pfq((a,), (b,), x, ctl).value
    y = -x
    # asymptotic 2F0-type sum, truncated at its smallest term (DLMF 13.7.2:
    # the surviving algebraic series carries plain powers of 1/y)
    s = 1.0
    term = 1.0
    prev = math.inf
    for k in range(200):
        term *= (a + k) * (a - b + 1.0 + k) / ((k + 1.0) * y)
        if abs(term) >= prev:
            break
        s += term
        prev = abs(term)
        if prev < 1e-17 * abs(s):
            break
    return gamma_bracket((b,), (b - a,)) * y ** (-a) * s


# ---------------------------------------------------------------------------
# Humbert Phi3
# ---------------------------------------------------------------------------

def humbert_phi3_series(beta: float, gam: float, x: float, y: float,
                        ctl: SeriesControl = DEFAULT_CONTROL) -> EvalResult:
    """Humbert's confluent double series Phi3(beta; gam; x, y).

        Phi3 = sum_{m,n} (beta)_m / (gam)_{m+n} * x^m/m! * y^n/n!

    Summed along anti-diagonals N = m+n, which matches the shifted-index
    rearrangement used to derive the convolution representation: 1/(gam)_N
    is common to a whole anti-diagonal, and the inner sum over m is a clean
    dot product of u_m = (beta)_m x^m/m! against w_n = y^n/n!.  Everything
    is accumulated in double-double arithmetic because for x*y < 0 the
    diagonals alternate violently; a result smaller than 1e-8 of the peak
    partial magnitude is still flagged as a cancellation failure.
    """
    if gam <= 0.0 and gam == math.floor(gam):
        raise SpecFunError("Phi3 second index at a non-positive integer")
    if x == 0.0 and y == 0.0:
        return EvalResult(1.0, 1, True)
    if abs(x) + abs(y) > 600.0:
        raise ConvergenceError(
            "Phi3 series arguments too large for double-double summation; "
            "use humbert_phi3_conv")

    u: list[tuple[float, float]] = [(1.0, 0.0)]  # (beta)_m x^m / m!
    w: list[tuple[float, float]] = [(1.0, 0.0)]  # y^n / n!
    sh, sl = 0.0, 0.0
    peak = 0.0
    # 1/(gam)_N kept in signed log form; it can dwarf the double range alone
    log_pg = 0.0
    sign_pg = 1.0
    n_terms = 0
    small_run = 0
    for N in range(ctl.max_terms):
        if N > 0:
            uh, ul = _dd_mul_scalar(*u[-1], (beta + N - 1.0) * x / N)
            u.append((uh, ul))
            wh, wl = _dd_mul_scalar(*w[-1], y / N)
            w.append((wh, wl))
            gN = gam + N - 1.0
            log_pg -= math.log(abs(gN))
            sign_pg *= math.copysign(1.0, gN)
        hh, hl = 0.0, 0.0
        for m in range(N + 1):
            ph, pl = _dd_mul(*u[m], *w[N - m])
            hh, hl = _dd_add(hh, hl, ph, pl)
        scale = sign_pg * math.exp(log_pg)
        th, tl = _dd_mul_scalar(hh, hl, scale)
        sh, sl = _dd_add(sh, sl, th, tl)
        n_terms = N + 1
        at = abs(th)
        if at > peak:
            peak = at
        if at <= ctl.rel_tol * abs(sh) + ctl.abs_tol and N > 2:
            small_run += 1
            if small_run >= 3:
                break
        else:
            small_run = 0
    else:
        raise ConvergenceError("Phi3 series did not converge within budget")

    total = sh + sl
    flagged = abs(total) < 1e-8 * peak
    return EvalResult(total, n_terms, not flagged)


def _hyp0f1_vec(b: float, z: np.ndarray) -> np.ndarray:
    """Vectorised 0F1(b; z) via the Bessel closed forms."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    nu = b - 1.0
    pos = z > 0.0
    neg = z < 0.0
    lg, sg = log_gamma(b)
    gb = sg * math.exp(lg)
    if np.any(pos):
        r = 2.0 * np.sqrt(z[pos])
        out[pos] = gb * _sp.iv(nu, r) * (r / 2.0) ** (-nu)
    if np.any(neg):
        r = 2.0 * np.sqrt(-z[neg])
        out[neg] = gb * _sp.jv(nu, r) * (r / 2.0) ** (-nu)
    out[z == 0.0] = 1.0
    return out


def _hyp1f1_vec(a: float, b: float, z: np.ndarray) -> np.ndarray:
    """Vectorised 1F1(a; b; z) for z <= 0 over a wide dynamic range
    (and moderate z > 0 through the Kummer transform).

    Three regimes: the scipy series for |z| <= 30; the Kummer transform
    e^z 1F1(b-a; b; -z) summed in extended precision for -600 <= z < -30
    (all-positive-tail series, no cancellation); and the algebraic
    asymptotic expansion truncated at its smallest term beyond.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z > 30.0):
        if np.any(z > 600.0):
            raise SpecFunError("1F1 argument out of the supported range")
        return np.exp(z) * _hyp1f1_vec(b - a, b, -z)
    out = np.empty_like(z)
    near = z > -30.0
    if np.any(near):
        out[near] = _sp.hyp1f1(a, b, z[near])
    mid = (~near) & (z >= -600.0)
    if np.any(mid):
        y = (-z[mid]).astype(np.longdouble)
        ap = np.longdouble(b - a)
        s = np.ones_like(y)
        term = np.ones_like(y)
        for k in range(3000):
            term = term * (ap + k) * y / ((b + k) * (k + 1.0))
            s += term
            if np.all(np.abs(term) < 1e-20 * np.abs(s)):
                break
        out[mid] = (np.exp(z[mid] + np.log(np.abs(s)).astype(float))
                    * np.sign(s).astype(float))
    far = (~near) & (~mid)
    if np.any(far):
        y = -z[far]
        s = np.ones_like(y)
        term = np.ones_like(y)
        dead = np.zeros_like(y, dtype=bool)
        prev = np.full_like(y, np.inf)
        for k in range(200):
            term = term * (a + k) * (a - b + 1.0 + k) / ((k + 1.0) * y)
            growing = np.abs(term) >= prev
            dead |= growing
            term[dead] = 0.0
            prev = np.abs(term)
            s += term
            if np.all(prev < 1e-17 * np.abs(s)):
                break
        out[far] = gamma_bracket((b,), (b - a,)) * y ** (-a) * s
    return out


def humbert_phi3_conv(beta: float, gam_idx: float, x: float, y: float,
                      eps: float = 0.3) -> float:
    """Phi3(beta; gam_idx; x, y) through its exact Laplace-convolution form.

    Decoupling the double series with a Beta-function identity (arbitrary
    0 < eps < gam_idx) gives

        Phi3 = Gamma(gam_idx)/(Gamma(eps)Gamma(gam_idx-eps)) *
               int_0^1 ds s^{eps-1} (1-s)^{gam_idx-eps-1}
                       0F1(eps; y*s) 1F1(beta; gam_idx-eps; x*(1-s))

    independent of eps (part of the identity suite).  Intended for x <= 0
    and y of either sign, which is the constraint's quadrant; large |x| and
    |y| produce boundary layers of width 1/|x|, 1/|y| at the endpoints,
    resolved here by Gauss-Jacobi panels after explicit layer splits, with
    phase-controlled panelling of the oscillatory/exponential middle.
    """
    if not (0.0 < eps < gam_idx):
        raise SpecFunError("need 0 < eps < gam_idx")
    if x > 30.0:
        raise SpecFunError("convolution path needs x <= 30")
    if y > 1.1e5:
        raise ConvergenceError("exploding branch exceeds float range")
    eps = _deflect_eps(beta, gam_idx, eps)
    b1 = gam_idx - eps

    def f_smooth(sig: np.ndarray) -> np.ndarray:
        """Integrand without the sigma^{eps-1} (1-sigma)^{b1-1} weight."""
        return _hyp0f1_vec(eps, y * sig) * _hyp1f1_vec(beta, b1, x * (1.0 - sig))

    # geometric panel edges resolve the power-law pile-up toward both ends
    # (scales 1/|y| at sigma = 0 and 1/|x| at sigma = 1)
    delta_l = min(0.25, 1.0 / max(abs(y), 4.0))
    delta_r = min(0.25, 1.0 / max(abs(x), 4.0))
    edges = [delta_l]
    while edges[-1] < 0.5:
        edges.append(min(2.0 * edges[-1], 0.5))
    right = [delta_r]
    while right[-1] < 0.5:
        right.append(min(2.0 * right[-1], 0.5))
    edges.extend(1.0 - r for r in reversed(right[:-1]))

    # subdivide for the 0F1 oscillation/exponential phase 2 sqrt(|y| sigma)
    if abs(y) > 9.0:
        ry = math.sqrt(abs(y))
        refined = [edges[0]]
        for a_e, b_e in zip(edges[:-1], edges[1:]):
            dphase = 2.0 * ry * (math.sqrt(b_e) - math.sqrt(a_e))
            n_sub = max(1, int(math.ceil(dphase / 3.0)))
            # equal phase increments: uniform in sqrt(sigma)
            ra, rb = math.sqrt(a_e), math.sqrt(b_e)
            for j in range(1, n_sub + 1):
                refined.append((ra + (rb - ra) * j / n_sub) ** 2)
        edges = refined

    total = 0.0
    # endpoint panels with Gauss-Jacobi rules carrying the algebraic weights
    xj, wj = _sp.roots_jacobi(32, 0.0, eps - 1.0)
    sig = edges[0] * (xj + 1.0) / 2.0
    w = wj * (edges[0] / 2.0) ** eps
    total += float(np.dot(w, f_smooth(sig) * (1.0 - sig) ** (b1 - 1.0)))

    xj2, wj2 = _sp.roots_jacobi(32, b1 - 1.0, 0.0)
    width = 1.0 - edges[-1]
    sig = edges[-1] + width * (xj2 + 1.0) / 2.0
    w = wj2 * (width / 2.0) ** b1
    total += float(np.dot(w, f_smooth(sig) * sig ** (eps - 1.0)))

    xg, wg = np.polynomial.legendre.leggauss(24)
    for a_e, b_e in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a_e + b_e), 0.5 * (b_e - a_e)
        sig = mid + half * xg
        vals = f_smooth(sig) * sig ** (eps - 1.0) * (1.0 - sig) ** (b1 - 1.0)
        total += half * float(np.dot(wg, vals))

    return gamma_bracket((gam_idx,), (eps, b1)) * total


def _deflect_eps(beta: float, gam_idx: float, eps: float) -> float:
    """Nudge eps away from values making Gamma(gam_idx - eps - beta) polar.

    The large-|x| asymptotics of 1F1(beta; gam_idx - eps; x) degenerates
    when its second parameter minus beta hits a non-positive integer; the
    representation is eps-independent, so any nearby eps works equally.
    """
    for _ in range(8):
        q = gam_idx - eps - beta
        if q > 0.5 or abs(q - round(q)) > 0.04:
            return eps
        eps = eps + 0.06 if eps + 0.06 < gam_idx else eps - 0.06
    return eps


# ---------------------------------------------------------------------------
# Lambert W
# ---------------------------------------------------------------------------

_EM1 = math.exp(-1.0)


def lambert_w(branch: int, x: float) -> float:
    """Real Lambert-W on branch 0 or -1, solving w e^w = x.

    Halley iteration from an asymptotic seed; the defining relation is
    satisfied to 1e-12 relative over both branch domains.
    """
    if branch not in (0, -1):
        raise SpecFunError("branch must be 0 or -1")
    if branch == 0:
        if x < -_EM1:
            raise SpecFunError("branch 0 needs x >= -1/e")
    else:
        if not (-_EM1 <= x < 0.0):
            raise SpecFunError("branch -1 needs -1/e <= x < 0")

    if x == 0.0:
        return 0.0 if branch == 0 else -math.inf

    # seeds
    if abs(x + _EM1) < 1e-14:
        return -1.0
    p2 = 2.0 * (math.e * x + 1.0)
    if p2 < 0.0:
        p2 = 0.0
    p = math.sqrt(p2)
    if branch == 0:
        if x < -0.25:
            w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
        elif x < 2.0:
            w = x * (1.0 - x + 1.5 * x * x) if abs(x) < 0.3 else math.log1p(x) * 0.7
        else:
            l1 = math.log(x)
            l2 = math.log(l1)
            w = l1 - l2 + l2 / l1
    else:
        if x > -0.1:
            l1 = math.log(-x)
            l2 = math.log(-l1)
            w = l1 - l2 + l2 / l1
        else:
            w = -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p ** 3

    for _ in range(80):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            break
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        dw = f / denom
        w -= dw
        if branch == -1 and w > -1.0:
            w = -1.0 - 1e-12
        if abs(dw) <= 1e-15 * max(1.0, abs(w)):
            break
    return w


# ---------------------------------------------------------------------------
# identities from the asymptotic analysis
# ---------------------------------------------------------------------------

def one_minus_0f1_half_over_x(x: float) -> float:
    """(1 - 0F1(1/2; -x)) / x, evaluated without cancellation.

    Near x = 0 the direct form destroys all digits; the identity
    (1 - 0F1(1/2;-x))/x = 2 * 1F2(1; 3/2, 2; -x) gives the stable route and
    a continuous limit of 2 at x = 0.  Away from the origin the closed
    trigonometric/hyperbolic forms are exact and cheap.
    """
    if x == 0.0:
        return 2.0
    if abs(x) <= 40.0:
        return 2.0 * hyp_pfq((1.0,), (1.5, 2.0), -x).value
    if x > 0.0:
        return (1.0 - math.cos(2.0 * math.sqrt(x))) / x
    return (1.0 - math.cosh(2.0 * math.sqrt(-x))) / x


def eps_limit_1f2(x: float) -> float:
    """The eps -> 0 limit  lim (1 - 1F2(-eps; 1, 1/2; x))/eps  = 2x 2F3(1,1;3/2,2,2;x).

    This is the d -> 2 regularisation of the constraint; evaluated via the
    right-hand side.
    """
    if x == 0.0:
        return 0.0
    if abs(x) <= 60.0:
        return 2.0 * x * hyp_pfq((1.0, 1.0), (1.5, 2.0, 2.0), x).value
    # term-by-term limit of the defining series, which for large |x| is
    # dominated by late terms where dd summation still works
    return 2.0 * x * hyp_pfq((1.0, 1.0), (1.5, 2.0, 2.0), x,
                             SeriesControl(rel_tol=1e-12, max_terms=100_000)).value


def appendixC_derivative(n: int, d: float, gamma: float, Z: float, t: float) -> float:
    """n-th gamma-derivative of f(gamma) = e^{-gamma Z} (4 pi gamma t)^{-d/2}.

    Closed form used by the constraint rearrangement:
        d^n/dgamma^n f = (-1)^n f * sum_k G[n+1, d/2+k; d/2, n-k+1, k+1]
                          gamma^{-k} Z^{n-k}
    """
    f = math.exp(-gamma * Z) * (4.0 * math.pi * gamma * t) ** (-d / 2.0)
    s = 0.0
    for k in range(n + 1):
        s += gamma_bracket((n + 1.0, d / 2.0 + k), (d / 2.0, n - k + 1.0, k + 1.0)) \
            * gamma ** (-k) * Z ** (n - k)
    return (-1.0) ** n * f * s


# ---------------------------------------------------------------------------
# identity selftest (used by the CLI)
# ---------------------------------------------------------------------------

def _central_derivative(fn, x0: float, n: int, h: float) -> float:
    """n-th central finite difference (2nd order + one Richardson step)."""
    stencils = {
        1: ((-1, -0.5), (1, 0.5)),
        2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
        3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
        4: ((-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)),
    }

    def raw(step):
        return sum(wc * fn(x0 + j * step) for j, wc in stencils[n]) / step ** n

    r1a = (4.0 * raw(h / 2.0) - raw(h)) / 3.0
    r1b = (4.0 * raw(h / 4.0) - raw(h / 2.0)) / 3.0
    return (16.0 * r1b - r1a) / 15.0


def selftest(verbose: bool = False) -> list[tuple[str, float, float, bool]]:
    """Run the identity suite; returns (name, error, tolerance, passed) rows."""
    rows: list[tuple[str, float, float, bool]] = []

    # derivative lemma vs central finite differences
    cases = [(3.0, 0.7, -0.2, 50.0), (2.4, 0.9, 0.15, 12.0),
             (1.7, 1.3, -1.1, 7.0), (3.6, 0.55, 0.4, 120.0)]
    worst = 0.0
    fd_steps = {1: 1e-2, 2: 2e-2, 3: 4e-2, 4: 6e-2}
    for d, gam, Z, t in cases:
        def f(g):
            return math.exp(-g * Z) * (4.0 * math.pi * g * t) ** (-d / 2.0)
        for n in range(1, 5):
            exact = appendixC_derivative(n, d, gam, Z, t)
            fd = _central_derivative(f, gam, n, fd_steps[n] * gam)
            worst = max(worst, abs(fd - exact) / abs(exact))
    rows.append(("derivative-lemma(n<=4)", worst, 1e-6, worst <= 1e-6))

    # (1 - 0F1)/x identity over x in [-50, 50]
    worst = 0.0
    for x in np.linspace(-50.0, 50.0, 101):
        if x == 0.0:
            continue
        lhs = one_minus_0f1_half_over_x(x)
        ref = (1.0 - hyp0f1(0.5, -x)) / x
        worst = max(worst, abs(lhs - ref) / max(1e-3, abs(ref)))
    rows.append(("one-minus-0f1-over-x", worst, 1e-10, worst <= 1e-10))

    # eps -> 0 limit vs Richardson extrapolation
    worst = 0.0
    for x in (1.5, -2.0, 0.3):
        direct = eps_limit_1f2(x)

        def lhs_eps(e):
            val = hyp_pfq((-e,), (1.0, 0.5), x).value
            return (1.0 - val) / e
        es = (1e-3, 5e-4, 2.5e-4)
        v = [lhs_eps(e) for e in es]
        r1 = 2 * v[1] - v[0]
        r2 = 2 * v[2] - v[1]
        extrap = 2 * r2 - r1
        worst = max(worst, abs(direct - extrap) / max(1.0, abs(direct)))
    rows.append(("eps-limit-2f3", worst, 1e-6, worst <= 1e-6))

    # Phi3: series vs convolution on the continuation grid
    worst = 0.0
    for d in (1.5, 2.0, 2.5, 3.0):
        for (x, y) in ((-3.0, -5.0), (-20.0, 2.0), (1.0, -8.0), (5.0, 5.0)):
            ser = humbert_phi3_series(d / 2.0, 0.5, x, y)
            if not ser.converged:
                continue
            conv = humbert_phi3_conv(d / 2.0, 0.5, x, y, eps=0.3)
            worst = max(worst, abs(ser.value - conv) / max(1e-10, abs(conv)))
    rows.append(("phi3-series-vs-conv", worst, 1e-6, worst <= 1e-6))

    # Lambert-W defining relation
    worst = 0.0
    for x in np.logspace(-8, 8, 1000):
        w = lambert_w(0, x)
        worst = max(worst, abs(w * math.exp(w) - x) / max(1.0, x))
    for x in -np.logspace(math.log10(_EM1) - 1e-12, -8, 1000):
        w = lambert_w(-1, x)
        worst = max(worst, abs(w * math.exp(w) - x) / max(1.0, abs(x)))
    rows.append(("lambert-w-defining", worst, 1e-12, worst <= 1e-12))

    if verbose:
        for name, err, tol, ok in rows:
            print(f"{name:28s} err={err:9.3e} tol={tol:g} {'PASS' if ok else 'FAIL'}")
    return rows
