"""Exterior harmonic extensions ``u(r, theta) = sum c_l r^(-l-1) Y_l^m`` and
their gradients, plus finite-difference harmonicity checks.

``theta`` is the latitude throughout, so the equator is ``theta = 0`` and the
poles are ``theta = +-pi/2``.
"""
from __future__ import annotations

import csv
import math
from typing import Callable

import numpy as np

from .special_fn import normalized_dtheta_table, normalized_legendre_table
from .spectral import AxisymCoeffs, SphCoeffs

__all__ = [
    "eval_potential",
    "eval_gradient",
    "intensity",
    "eval_potential_general",
    "eval_gradient_general",
    "harmonicity_check",
    "decay_bound",
    "write_field_csv",
]

# second differences lose ~eps*|u|/h^2 to rounding; 1e-4 balances that against
# the O(h^2) truncation for degrees up to a few dozen
FD_STEP = 1e-4


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r < 1.0):
        raise ValueError("field points must satisfy r >= 1")
    return r


def _scalar(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def _radial_powers(L: int, r: np.ndarray, shift: int = 1) -> np.ndarray:
    # rows r^-(l+shift); built by repeated multiplication, never overflows for r >= 1
    out = np.empty((L + 1,) + r.shape)
    inv = 1.0 / r
    out[0] = inv**shift
    for l in range(1, L + 1):
        out[l] = out[l - 1] * inv
    return out


def eval_potential(u: AxisymCoeffs, r, theta):
    """Value of the exterior extension of ``u`` at ``(r, theta)`` (broadcast)."""
    r = _check_radius(r)
    r, theta = np.broadcast_arrays(r, np.asarray(theta, dtype=float))
    ylm = normalized_legendre_table(u.L, 0, np.sin(theta))
    out = np.einsum("l,l...,l...->...", u.c, _radial_powers(u.L, r), ylm)
    return _scalar(out)


def eval_gradient(u: AxisymCoeffs, r, theta):
    """``(u_r, u_theta / r)`` of the exterior extension.

    The latitude derivative comes from the Legendre derivative tables, which
    handle the poles analytically.
    """
    r = _check_radius(r)
    r, theta = np.broadcast_arrays(r, np.asarray(theta, dtype=float))
    ylm = normalized_legendre_table(u.L, 0, np.sin(theta))
    dylm = normalized_dtheta_table(u.L, 0, theta)
    pw = _radial_powers(u.L, r, shift=2)
    degree = np.arange(u.L + 1, dtype=float)
    u_r = -np.einsum("l,l...,l...->...", (degree + 1) * u.c, pw, ylm)
    # r^(-l-1) / r = r^(-l-2)
    u_t = np.einsum("l,l...,l...->...", u.c, pw, dylm)
    return _scalar(u_r), _scalar(u_t)


def intensity(u: AxisymCoeffs, r, theta):
    """``|grad u|`` of the exterior extension."""
    u_r, u_t = eval_gradient(u, r, theta)
    return np.hypot(u_r, u_t)


def eval_potential_general(u: SphCoeffs, r, theta, phi):
    """Complex value of ``sum u_l^m r^(-l-1) Y_l^m`` (diagnostic use, moderate ``L``)."""
    r = _check_radius(r)
    r, theta, phi = np.broadcast_arrays(r, np.asarray(theta, float), np.asarray(phi, float))
    pw = _radial_powers(u.L, r)
    z = np.sin(theta)
    out = np.zeros(r.shape, dtype=complex)
    for m in u.orders():
        col = u.column(m)
        if not np.any(col):
            continue
        ylm = normalized_legendre_table(u.L, m, z, np.cos(theta))
        out += np.einsum("l,l...,l...->...", col, pw, ylm) * np.exp(1j * m * phi)
    return _scalar(out)


def eval_gradient_general(u: SphCoeffs, r, theta, phi):
    """Complex ``(u_r, u_theta / r)`` for a general coefficient table."""
    r = _check_radius(r)
    r, theta, phi = np.broadcast_arrays(r, np.asarray(theta, float), np.asarray(phi, float))
    pw = _radial_powers(u.L, r, shift=2)
    degree = np.arange(u.L + 1, dtype=float)
    z = np.sin(theta)
    u_r = np.zeros(r.shape, dtype=complex)
    u_t = np.zeros(r.shape, dtype=complex)
    for m in u.orders():
        col = u.column(m)
        if not np.any(col):
            continue
        phase = np.exp(1j * m * phi)
        ylm = normalized_legendre_table(u.L, m, z, np.cos(theta))
        dylm = normalized_dtheta_table(u.L, m, theta)
        u_r -= np.einsum("l,l...,l...->...", (degree + 1) * col, pw, ylm) * phase
        u_t += np.einsum("l,l...,l...->...", col, pw, dylm) * phase
    return _scalar(u_r), _scalar(u_t)


def harmonicity_check(
    u: AxisymCoeffs,
    points,
    *,
    evaluate: Callable | None = None,
    step: float = FD_STEP,
) -> float:
    """Largest ``|Laplacian u|`` over ``points`` by central differences.

    Parameters
    ----------
    u : AxisymCoeffs
        Surface coefficients of the exterior extension.
    points : array_like, shape (n, 2)
        ``(r, theta)`` pairs, away from the sphere and the poles.
    evaluate : callable, optional
        ``evaluate(u, r, theta)`` replacing :func:`eval_potential`; lets tests
        feed a deliberately wrong extension.
    step : float
        Relative step in ``r``; the same value is used as the absolute step
        in ``theta``.

    Returns
    -------
    float
        Max over the points of the axisymmetric spherical Laplacian
        ``u_rr + 2 u_r / r + (u_tt - tan(theta) u_t) / r^2``.
    """
    evaluate = evaluate or eval_potential
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    r, t = pts[:, 0], pts[:, 1]
    hr = step * r
    ht = step
    u0 = evaluate(u, r, t)
    urp, urm = evaluate(u, r + hr, t), evaluate(u, r - hr, t)
    utp, utm = evaluate(u, r, t + ht), evaluate(u, r, t - ht)
    u_rr = (urp - 2 * u0 + urm) / hr**2
    u_r = (urp - urm) / (2 * hr)
    u_tt = (utp - 2 * u0 + utm) / ht**2
    u_t = (utp - utm) / (2 * ht)
    lap = u_rr + 2 * u_r / r + (u_tt - np.tan(t) * u_t) / r**2
    return float(np.max(np.abs(lap)))


def decay_bound(u: AxisymCoeffs) -> float:
    """Constant ``C`` with ``|u(r, theta)| <= C / r`` for all ``r >= 1``.

    Uses ``|Y_l^0| <= sqrt((2l+1) / (4 pi))``.
    """
    degree = np.arange(u.L + 1)
    return float(np.sum(np.abs(u.c) * np.sqrt((2 * degree + 1) / (4 * math.pi))))


def write_field_csv(path, u: AxisymCoeffs, r, theta) -> None:
    """Write ``r,theta,u,u_r,u_theta,intensity`` rows at 17 significant digits.

    ``u_theta`` is the physical component ``(1/r) du/dtheta``.
    """
    r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    r, theta = r.ravel(), theta.ravel()
    val = np.atleast_1d(eval_potential(u, r, theta))
    u_r, u_t = (np.atleast_1d(x) for x in eval_gradient(u, r, theta))
    amp = np.hypot(u_r, u_t)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "theta", "u", "u_r", "u_theta", "intensity"])
        for row in zip(r, theta, val, u_r, u_t, amp):
            w.writerow([f"{x:.17g}" for x in row])
