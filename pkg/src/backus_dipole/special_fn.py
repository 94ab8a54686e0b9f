"""Factorial combinatorics, associated Legendre functions and Wigner 3j symbols.

Legendre convention
-------------------
``P_l^m`` carries the Condon-Shortley phase inside the function itself,

    P_m^m(z) = (-1)^m (2m-1)!! (1 - z^2)^(m/2),

which is the convention fixed by the zero values

    P_{m+2k}^m(0) = (-1)^(m+k) (2m+2k-1)!! / (2k)!!.

Surface harmonics are ``Y_l^m = alpha_l^m P_l^|m|(sin theta) exp(i m phi)`` with
``theta`` the latitude, and ``alpha_l^m`` from :func:`alpha_norm`.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "log_double_factorial",
    "double_factorial",
    "assoc_legendre",
    "assoc_legendre_dtheta",
    "alpha_norm",
    "legendre_at_zero",
    "normalized_zero_values",
    "normalized_legendre_table",
    "normalized_dtheta_table",
    "wigner_3j",
    "wigner_3j_exact",
    "wigner_3j_logspace",
    "selection_rules_ok",
    "gaunt_w",
]

_EXACT_DEGREE_CAP = 40
_EXACT_DF_CAP = 1000


@lru_cache(maxsize=None)
def double_factorial(n: int) -> int:
    """Exact ``n!!`` as a Python integer, with ``0!! = (-1)!! = 1``."""
    if n < -1:
        raise ValueError(f"double factorial undefined for n={n}")
    out = 1
    for k in range(n, 1, -2):
        out *= k
    return out


def log_double_factorial(n: int) -> float:
    """Natural log of ``n!!``.

    Exact integer arithmetic is used up to ``n = 1000`` (``math.log`` of a big
    integer is correctly rounded to within an ulp); beyond that the gamma-function
    identity is used.
    """
    if n < -1:
        raise ValueError(f"double factorial undefined for n={n}")
    if n <= 1:
        return 0.0
    if n <= _EXACT_DF_CAP:
        return math.log(double_factorial(n))
    if n % 2 == 0:
        k = n // 2
        return k * math.log(2.0) + math.lgamma(k + 1)
    k = (n + 1) // 2
    return k * math.log(2.0) + math.lgamma(n / 2 + 1) - 0.5 * math.log(math.pi)


def _check_order(l: int, m: int) -> None:
    if l < 0:
        raise ValueError(f"degree must be non-negative, got l={l}")
    if m < 0 or m > l:
        raise ValueError(f"order must satisfy 0 <= m <= l, got l={l}, m={m}")


def _sqrt_one_minus_sq(z, given):
    if given is not None:
        return np.abs(np.asarray(given, dtype=float))
    return np.sqrt(np.clip(1.0 - z * z, 0.0, None))


def assoc_legendre(l: int, m: int, z, sqrt1mz2=None):
    """Associated Legendre function ``P_l^m(z)`` with the Condon-Shortley phase.

    Upward recurrence in ``l`` from the closed-form seed at ``l = m``.
    ``z`` may be a scalar or an array.  Callers holding ``cos(theta)`` for
    ``z = sin(theta)`` should pass it as ``sqrt1mz2``: forming ``1 - z^2``
    loses most digits next to the poles.
    """
    _check_order(l, m)
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > 1.0):
        raise ValueError("z must lie in [-1, 1]")
    pmm = (-1.0) ** m * double_factorial(2 * m - 1) * _sqrt_one_minus_sq(z, sqrt1mz2) ** m
    if l == m:
        return pmm[()] if pmm.ndim == 0 else pmm
    p_prev, p_cur = pmm, (2 * m + 1) * z * pmm
    for ll in range(m + 1, l):
        p_prev, p_cur = p_cur, ((2 * ll + 1) * z * p_cur - (ll + m) * p_prev) / (ll - m + 1)
    return p_cur[()] if p_cur.ndim == 0 else p_cur


def assoc_legendre_dtheta(l: int, m: int, theta):
    """``d/dtheta [P_l^m(sin theta)]`` for latitude ``theta``.

    For ``m = 0`` this is ``cos(theta) P_l'(sin theta)`` with ``P_l'`` from the
    exact derivative recurrence, so the poles need no special treatment.  For
    ``m >= 1`` the identity

        (1 - z^2) P_l^m'(z) = [-l(l-m+1) P_{l+1}^m + (l+1)(l+m) P_{l-1}^m] / (2l+1)

    is divided by ``cos(theta)``; at the poles the analytic limit is used.
    """
    _check_order(l, m)
    theta = np.asarray(theta, dtype=float)
    z = np.sin(theta)
    cos = np.cos(theta)
    if m == 0:
        # P'_{l+1} = P'_{l-1} + (2l+1) P_l
        dp = [np.zeros_like(z), np.ones_like(z)]
        p_prev, p_cur = np.ones_like(z), z
        for ll in range(1, l):
            dp.append(dp[ll - 1] + (2 * ll + 1) * p_cur)
            p_prev, p_cur = p_cur, ((2 * ll + 1) * z * p_cur - ll * p_prev) / (ll + 1)
        out = cos * dp[l]
    else:
        p_up = assoc_legendre(l + 1, m, z, cos)
        p_down = assoc_legendre(l - 1, m, z, cos) if l - 1 >= m else np.zeros_like(z)
        q = (-l * (l - m + 1) * p_up + (l + 1) * (l + m) * p_down) / (2 * l + 1)
        pole = np.abs(z) >= 1.0  # cos(pi/2) rounds to 6e-17, sin to exactly 1
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(pole, 0.0, q / np.where(pole, 1.0, cos))
        if m == 1 and np.any(pole):
            # P_l^1(sin t) = -cos t P_l'(sin t); limit is sin(t) P_l'(sin t) at sin t = +-1
            north = 0.5 * l * (l + 1)
            south = (-1.0) ** l * 0.5 * l * (l + 1)
            out = np.where(pole & (z > 0), north, out)
            out = np.where(pole & (z < 0), south, out)
    return out[()] if out.ndim == 0 else out


def alpha_norm(l: int, m: int) -> float:
    """Normalization ``(-1)^((m+|m|)/2) sqrt((2l+1)(l-|m|)! / (4 pi (l+|m|)!))``."""
    am = abs(m)
    if l < 0 or am > l:
        raise ValueError(f"need |m| <= l, got l={l}, m={m}")
    log_mag = 0.5 * (
        math.log(2 * l + 1) + math.lgamma(l - am + 1) - math.log(4 * math.pi) - math.lgamma(l + am + 1)
    )
    sign = -1.0 if m > 0 and m % 2 == 1 else 1.0
    return sign * math.exp(log_mag)


def legendre_at_zero(l: int, m: int) -> float:
    """``P_l^m(0)``; zero when ``l - m`` is odd."""
    _check_order(l, m)
    if (l - m) % 2:
        return 0.0
    k = (l - m) // 2
    sign = -1 if (m + k) % 2 else 1
    return sign * float(Fraction(double_factorial(2 * m + 2 * k - 1), double_factorial(2 * k)))


def normalized_zero_values(m: int, lmax: int) -> np.ndarray:
    """``alpha_l^m P_l^|m|(0)`` for ``l = 0..lmax`` (zero for ``l < |m|``).

    Evaluated in log space so large ``|m|`` neither overflows nor underflows.
    """
    am = abs(m)
    out = np.zeros(lmax + 1)
    alpha_sign = -1.0 if m > 0 and m % 2 == 1 else 1.0
    for l in range(am, lmax + 1, 2):
        k = (l - am) // 2
        log_alpha = 0.5 * (
            math.log(2 * l + 1) + math.lgamma(l - am + 1) - math.log(4 * math.pi) - math.lgamma(l + am + 1)
        )
        log_p = log_double_factorial(2 * am + 2 * k - 1) - log_double_factorial(2 * k)
        sign = alpha_sign * (-1.0 if (am + k) % 2 else 1.0)
        out[l] = sign * math.exp(log_alpha + log_p)
    return out


def _log_seed(m: int) -> float:
    # log |alpha_m^m P_m^m| without the (1 - z^2)^(m/2) factor
    return 0.5 * (math.log(2 * m + 1) - math.log(4 * math.pi) - math.lgamma(2 * m + 1)) + log_double_factorial(
        2 * m - 1
    )


def normalized_legendre_table(lmax: int, m: int, z, sqrt1mz2=None) -> np.ndarray:
    """Rows ``alpha_l^m P_l^|m|(z)`` for ``l = 0..lmax``; rows ``l < |m|`` are zero.

    Returns an array of shape ``(lmax + 1,) + z.shape``.  ``sqrt1mz2`` is as in
    :func:`assoc_legendre`.
    """
    z = np.asarray(z, dtype=float)
    am = abs(m)
    out = np.zeros((lmax + 1,) + z.shape)
    if am > lmax:
        return out
    alpha_sign = -1.0 if m > 0 and m % 2 == 1 else 1.0
    p_sign = -1.0 if am % 2 else 1.0
    sin_colat = np.broadcast_to(_sqrt_one_minus_sq(z, sqrt1mz2), z.shape)
    with np.errstate(divide="ignore"):
        log_s = np.log(sin_colat)
    seed = np.where(sin_colat > 0, np.exp(_log_seed(am) + am * log_s), 0.0) if am else np.full(z.shape, math.exp(_log_seed(0)))
    out[am] = alpha_sign * p_sign * seed
    if am + 1 <= lmax:
        out[am + 1] = math.sqrt(2 * am + 3) * z * out[am]
    for l in range(am + 2, lmax + 1):
        r1 = math.sqrt((2 * l + 1) * (l - am) / ((2 * l - 1) * (l + am)))
        r2 = r1 * math.sqrt((2 * l - 1) * (l - 1 - am) / ((2 * l - 3) * (l - 1 + am)))
        out[l] = ((2 * l - 1) * r1 * z * out[l - 1] - (l + am - 1) * r2 * out[l - 2]) / (l - am)
    return out


def normalized_dtheta_table(lmax: int, m: int, theta) -> np.ndarray:
    """Rows ``alpha_l^m d/dtheta[P_l^|m|(sin theta)]`` for ``l = 0..lmax``."""
    theta = np.asarray(theta, dtype=float)
    z = np.sin(theta)
    cos = np.cos(theta)
    am = abs(m)
    out = np.zeros((lmax + 1,) + theta.shape)
    if am > lmax:
        return out
    if am == 0:
        p = np.zeros_like(out)
        dp = np.zeros_like(out)
        p[0] = 1.0
        if lmax >= 1:
            p[1] = z
            dp[1] = 1.0
        for l in range(1, lmax):
            p[l + 1] = ((2 * l + 1) * z * p[l] - l * p[l - 1]) / (l + 1)
            dp[l + 1] = dp[l - 1] + (2 * l + 1) * p[l]
        for l in range(lmax + 1):
            out[l] = alpha_norm(l, 0) * cos * dp[l]
        return out
    p = normalized_legendre_table(lmax + 1, m, z, cos)
    pole = np.abs(z) >= 1.0
    safe_cos = np.where(pole, 1.0, cos)
    for l in range(am, lmax + 1):
        # convert neighbours back to the alpha_l normalization
        up = p[l + 1] * (alpha_norm(l, m) / alpha_norm(l + 1, m))
        down = p[l - 1] * (alpha_norm(l, m) / alpha_norm(l - 1, m)) if l - 1 >= am else 0.0
        q = (-l * (l - am + 1) * up + (l + 1) * (l + am) * down) / (2 * l + 1)
        val = np.where(pole, 0.0, q / safe_cos)
        if am == 1 and np.any(pole):
            a = alpha_norm(l, m)
            val = np.where(pole & (z > 0), a * 0.5 * l * (l + 1), val)
            val = np.where(pole & (z < 0), a * (-1.0) ** l * 0.5 * l * (l + 1), val)
        out[l] = val
    return out


def selection_rules_ok(l1: int, l2: int, l3: int, m1: int, m2: int, m3: int) -> bool:
    """True when the 3j symbol is not forced to vanish by the selection rules."""
    if min(l1, l2, l3) < 0:
        return False
    if m1 + m2 + m3 != 0:
        return False
    if not (abs(l1 - l2) <= l3 <= l1 + l2):
        return False
    if abs(m1) > l1 or abs(m2) > l2 or abs(m3) > l3:
        return False
    if m1 == m2 == m3 == 0 and (l1 + l2 + l3) % 2:
        return False
    return True


def _k_range(l1, l2, l3, m1, m2, m3):
    a = -l1 + l2 + l3
    b = l3 - m3
    c = l1 - l2 + m3
    kmin = max(0, -c)
    kmax = min(a, b, l2 + l3 + m1)
    return a, b, c, kmin, kmax


def _racah_parts(l1, l2, l3, m1, m2, m3):
    # integers (S, D, N, M) with 3j = sign(S) sqrt(N / M) |S| / D
    f = math.factorial
    a, b, c, kmin, kmax = _k_range(l1, l2, l3, m1, m2, m3)
    pref_num = f(a) * f(l1 - l2 + l3) * f(l1 + l2 - l3) * f(l3 - m3) * f(l3 + m3)
    pref_den = f(l1 + l2 + l3 + 1) * f(l1 - m1) * f(l1 + m1) * f(l2 - m2) * f(l2 + m2)
    if kmin > kmax:
        return 0, 1, pref_num, pref_den
    nums, dens = [], []
    for k in range(kmin, kmax + 1):
        sign = -1 if (k + l1 + m2 - m3) % 2 else 1
        nums.append(sign * f(l2 + l3 + m1 - k) * f(l1 - m1 + k))
        dens.append(f(k) * f(a - k) * f(b - k) * f(c + k))
    common = math.lcm(*dens)
    total = sum(n * (common // d) for n, d in zip(nums, dens))
    return total, common, pref_num, pref_den


@lru_cache(maxsize=200_000)
def wigner_3j_exact(l1: int, l2: int, l3: int, m1: int, m2: int, m3: int) -> float:
    """3j symbol from the factorial sum in exact rational arithmetic."""
    if not selection_rules_ok(l1, l2, l3, m1, m2, m3):
        return 0.0
    total, common, pref_num, pref_den = _racah_parts(l1, l2, l3, m1, m2, m3)
    if total == 0:
        return 0.0
    sq = Fraction(pref_num * total * total, pref_den * common * common)
    return math.copysign(math.sqrt(sq), total)


def wigner_3j_logspace(l1: int, l2: int, l3: int, m1: int, m2: int, m3: int) -> float:
    """3j symbol with the magnitude assembled in log space.

    The alternating k-sum is kept in exact integers (summing float terms loses
    several digits to cancellation already near degree 30); the factorial
    prefactor and the sum are then combined through logarithms, so no
    intermediate ratio is ever formed as a float.
    """
    if not selection_rules_ok(l1, l2, l3, m1, m2, m3):
        return 0.0
    total, common, pref_num, pref_den = _racah_parts(l1, l2, l3, m1, m2, m3)
    if total == 0:
        return 0.0
    log_mag = 0.5 * (math.log(pref_num) - math.log(pref_den)) + math.log(abs(total)) - math.log(common)
    return math.exp(log_mag) if total > 0 else -math.exp(log_mag)


def wigner_3j(l1: int, l2: int, l3: int, m1: int, m2: int, m3: int) -> float:
    """Wigner 3j symbol; zero whenever the selection rules fail.

    Degrees up to 40 go through exact rational arithmetic, larger ones through
    the log-space sum.
    """
    if max(l1, l2, l3) <= _EXACT_DEGREE_CAP:
        return wigner_3j_exact(l1, l2, l3, m1, m2, m3)
    return wigner_3j_logspace(l1, l2, l3, m1, m2, m3)


def gaunt_w(l1: int, l2: int, l: int, m1: int, m2: int, m: int) -> float:
    """``W = (-1)^m / sqrt(4 pi) * 3j(l1 l2 l; m1 m2 -m) * 3j(l1 l2 l; 0 0 0)``."""
    w000 = wigner_3j(l1, l2, l, 0, 0, 0)
    if w000 == 0.0:
        return 0.0
    wm = wigner_3j(l1, l2, l, m1, m2, -m)
    sign = -1.0 if m % 2 else 1.0
    return sign * wm * w000 / math.sqrt(4 * math.pi)
