"""Accurate partial sums of (i + 1/2)**(-s) * exp(-1j*w*(i + 1/2)).

The error-probability inversion series truncates at an index that can reach
1e13 when the quadratic form has only one or two eigenvalues, far beyond
direct summation.  Its tail reduces (after an asymptotic expansion of the
characteristic function) to sums of the form

    P(s, a, b, w) = sum_{i=a}^{b} (i + 1/2)**(-s) * exp(-1j * w * (i + 1/2))

with s > 1.  This module evaluates P to a requested absolute tolerance for
any 0 <= a <= b, using whichever of four methods fits the regime:

- direct summation for short ranges (vectorized, float64);
- Hurwitz zeta differences when the frequency reduces to exactly zero;
- Euler-Maclaurin with an incomplete-gamma integral when the reduced
  frequency is tiny (the summand barely oscillates, so smoothness methods
  apply but the geometric-decay method below would lose its footing);
- summation by parts otherwise: Abel summation unrolled ``depth`` times with
  iterated forward-difference tables at both boundaries, whose residual
  shrinks like (s)_d * (a+1/2)**-(s+d-1) / |q-1|**d, q = exp(-1j*w).

The half-offset indices make frequency reduction clean: adding 2*pi to w
multiplies every term by exp(-1j*pi*(2i+1)) = -1, so w is first folded into
(-pi, pi] with a sign flip per wrap.  The mpmath branches run at 60 digits
because the boundary phases w*b mod 2*pi need ~13 integer digits of the
argument cancelled before any fractional precision remains.
"""

import math

import mpmath as mp
import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .errors import NumericalError

__all__ = ["pinned_power_sum"]

_MP_DPS = 60
_SBP_MAX_DEPTH = 26
_EM_MAX_FREQ = 1e-4
_EM_MAX_ORDER = 8
_SBP_MIN_PHASE = 50.0  # require (a+1/2)*|q-1| above this before using SBP
_DIRECT_MAX = 90


def pinned_power_sum(
    exponent: float, start: int, stop: int, freq: float, tol: float
) -> complex:
    """P(exponent, start, stop, freq) with absolute error at most ``tol``.

    Raises NumericalError if no method can certify the tolerance (which only
    happens for tolerances near or below machine precision of the result).
    """
    if not exponent > 1.0:
        raise NumericalError(f"power-sum exponent must exceed 1, got {exponent}")
    if not (0 <= start <= stop):
        raise NumericalError(f"bad summation range [{start}, {stop}]")
    if not tol > 0.0:
        raise NumericalError(f"tolerance must be positive, got {tol}")

    wraps = round(freq / (2.0 * math.pi))
    f = freq - 2.0 * math.pi * wraps
    sign = -1.0 if wraps % 2 else 1.0

    if f == 0.0:
        value = complex(
            hurwitz_zeta(exponent, start + 0.5) - hurwitz_zeta(exponent, stop + 1.5)
        )
        return sign * value

    flip = f < 0.0
    value = _dispatch(exponent, start, stop, abs(f), tol)
    if flip:
        value = value.conjugate()
    return sign * value


def _dispatch(s: float, a: int, b: int, f: float, tol: float) -> complex:
    gap = 2.0 * math.sin(0.5 * f)  # |q - 1|
    if b - a <= _DIRECT_MAX:
        return _direct_sum_mp(s, a, b, f)
    if (a + 0.5) * gap >= _SBP_MIN_PHASE:
        return _sbp_sum(s, a, b, f, tol)
    if f < _EM_MAX_FREQ:
        return _euler_maclaurin_sum(s, a, b, f, tol)
    # slow phase at the low end only: push the start index up to where
    # summation by parts converges, summing the short gap directly.
    # Here a < 50/|q-1|, so every phase f*x in the gap stays below
    # 50*f/|q-1| <= 25*pi and float64 is exact enough.
    a2 = min(int(math.ceil(_SBP_MIN_PHASE / gap)), b)
    head = _direct_sum_np(s, a, a2 - 1, f) if a2 > a else 0.0
    if b - a2 <= _DIRECT_MAX:
        return head + _direct_sum_mp(s, a2, b, f)
    return head + _sbp_sum(s, a2, b, f, tol)


def _direct_sum_np(s: float, a: int, b: int, f: float) -> complex:
    if b < a:
        return 0.0 + 0.0j
    x = np.arange(a, b + 1, dtype=float) + 0.5
    return complex(np.sum(x ** (-s) * np.exp(-1j * f * x)))


def _direct_sum_mp(s: float, a: int, b: int, f: float) -> complex:
    # safe at arbitrarily large indices, where f*x overwhelms float64 phases
    if b < a:
        return 0.0 + 0.0j
    with mp.workdps(_MP_DPS):
        sig = mp.mpf(s)
        bet = mp.mpf(f)
        total = mp.mpc(0)
        for i in range(a, b + 1):
            x = mp.mpf(i) + mp.mpf("0.5")
            total += x ** (-sig) * mp.exp(-1j * bet * x)
        return complex(total)


def _sbp_sum(s: float, a: int, b: int, f: float, tol: float) -> complex:
    """Summation by parts, unrolled with difference tables at both boundaries.

    Writing G(h, a, b) = sum h(i) q**i, Abel summation gives
    G(h, a, b) = [h(b) q**(b+1) - h(a) q**a - q G(dh, a, b-1)] / (q - 1)
    where dh is the forward difference.  Each unroll multiplies the remainder
    by -q/(q-1) and replaces h by dh; the differences of (i+1/2)**(-s) decay
    factorially, so a couple dozen levels suffice whenever (a+1/2)|q-1| is
    comfortably larger than the depth.
    """
    with mp.workdps(_MP_DPS):
        bet = mp.mpf(f)
        q = mp.exp(-1j * bet)
        sig = mp.mpf(s)
        depth_cap = min(_SBP_MAX_DEPTH, b - a - 2)
        def h(i):
            return (mp.mpf(int(i)) + mp.mpf("0.5")) ** (-sig)

        lo = [h(a + t) for t in range(depth_cap + 2)]
        hi = [h(b - depth_cap - 1 + t) for t in range(depth_cap + 2)]
        lod = [lo]
        hid = [hi]
        for _ in range(depth_cap + 1):
            lod.append([x - y for y, x in zip(lod[-1], lod[-1][1:])])
            hid.append([x - y for y, x in zip(hid[-1], hid[-1][1:])])

        qm1 = q - 1
        abs_qm1 = abs(qm1)
        qa = q**a
        total = mp.mpc(0)
        fac = mp.mpc(1)  # accumulates (-q/(q-1))**d
        half = mp.mpf("0.5")
        a_half = mp.mpf(a) + half
        for d in range(depth_cap + 1):
            hb = hid[d][depth_cap + 1 - d]
            ha = lod[d][0]
            total += fac / qm1 * (hb * q ** (b - d + 1) - ha * qa)
            fac *= -q / qm1
            # remainder after unrolling d+1 levels
            resid = (
                mp.rf(sig, d + 1)
                * a_half ** (-(sig + d))
                / ((sig + d) * abs_qm1 ** (d + 1))
            )
            if resid <= tol:
                value = total * mp.exp(-1j * bet * half)
                return complex(value)
        raise NumericalError(
            f"summation by parts cannot reach tolerance {tol:g} "
            f"(s={s}, a={a}, freq={f:g}); residual bound {float(resid):g}"
        )


def _euler_maclaurin_sum(s: float, a: int, b: int, f: float, tol: float) -> complex:
    """Euler-Maclaurin for the barely-oscillating regime f << 1.

    The integral of y**(-s) exp(-1j f y) is expressed through the upper
    incomplete gamma function on the imaginary axis; derivative corrections
    come from the exact recurrence for the derivatives of the summand, built
    as polynomials in 1/y.
    """
    with mp.workdps(_MP_DPS):
        sig = mp.mpf(s)
        bet = mp.mpf(f)
        ya = mp.mpf(a) + mp.mpf("0.5")
        yb = mp.mpf(b) + mp.mpf("0.5")

        def summand(y):
            return y ** (-sig) * mp.exp(-1j * bet * y)

        total = _oscillatory_integral(sig, bet, ya, yb) + (
            summand(ya) + summand(yb)
        ) / 2

        derivs_a = _summand_derivatives(sig, bet, ya, 2 * _EM_MAX_ORDER - 1)
        derivs_b = _summand_derivatives(sig, bet, yb, 2 * _EM_MAX_ORDER - 1)
        correction_ok = False
        for r in range(1, _EM_MAX_ORDER + 1):
            term = (
                mp.bernoulli(2 * r)
                / mp.factorial(2 * r)
                * (derivs_b[2 * r - 2] - derivs_a[2 * r - 2])
            )
            total += term
            if abs(term) <= tol / 4:
                correction_ok = True
                break
        if not correction_ok:
            raise NumericalError(
                f"Euler-Maclaurin corrections not converged at order "
                f"{_EM_MAX_ORDER} (s={s}, a={a}, freq={f:g})"
            )
        return complex(total)


def _oscillatory_integral(sig, bet, ya, yb):
    """integral over [ya, yb] of y**(-sig) * exp(-1j*bet*y), bet > 0.

    Substituting x = 1j*bet*y gives (1j*bet)**(sig-1) * [Gamma(1-sig, 1j*bet*ya)
    - Gamma(1-sig, 1j*bet*yb)]; the upper incomplete gamma switches to its
    large-argument asymptotic series once |x| is big enough for it to
    converge to full working precision.
    """
    s1 = 1 - sig

    def upper_gamma(x):
        if abs(x) < 50:
            return mp.gammainc(s1, x, mp.inf)
        acc = mp.mpc(1)
        term = mp.mpc(1)
        for t in range(1, 40):
            term *= (s1 - t) / x
            acc += term
            if abs(term) < mp.mpf("1e-45"):
                break
        return x ** (s1 - 1) * mp.exp(-x) * acc

    return (1j * bet) ** (sig - 1) * (
        upper_gamma(1j * bet * ya) - upper_gamma(1j * bet * yb)
    )


def _summand_derivatives(sig, bet, y, pmax):
    """Derivatives 1..pmax of y**(-sig)*exp(-1j*bet*y) at y, exactly.

    The p-th derivative equals the summand times a polynomial Q_p(1/y):
    Q_{p+1}(v) = dQ_p/dv * (-v**2) + Q_p * (-sig*v - 1j*bet), from the
    product/chain rule with v = 1/y.
    """
    v = 1 / y
    value = y ** (-sig) * mp.exp(-1j * bet * y)
    coeffs = [mp.mpc(1)]  # Q_0 = 1, as coefficients in v
    out = []
    for _ in range(pmax):
        dcoeffs = [coeffs[t] * t for t in range(1, len(coeffs))]
        new = [mp.mpc(0)] * (len(coeffs) + 2)
        for t, c in enumerate(dcoeffs):  # dQ/dv * (-v**2): shift by 2, negate
            new[t + 2] -= c
        for t, c in enumerate(coeffs):  # Q * (-sig*v)
            new[t + 1] -= sig * c
        for t, c in enumerate(coeffs):  # Q * (-1j*bet)
            new[t] -= 1j * bet * c
        coeffs = new
        out.append(value * sum(c * v**t for t, c in enumerate(coeffs)))
    return out
