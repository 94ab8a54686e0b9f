"""Coefficient containers, Gauss-Legendre analysis/synthesis, H^s norms and
spectral products of surface functions on the unit sphere.

Coefficients are taken against the orthonormal harmonics ``Y_l^m`` of
:mod:`backus_dipole.special_fn`.  Axially symmetric functions keep only the
``m = 0`` column and stay in real arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Union

import numpy as np

from .special_fn import (
    normalized_dtheta_table,
    normalized_legendre_table,
    wigner_3j,
)

__all__ = [
    "AxisymCoeffs",
    "SphCoeffs",
    "gauss_nodes",
    "general_grid",
    "quadrature_size",
    "hs_norm",
    "equator_hs_norm",
    "analyze_axisym",
    "synth_axisym",
    "synth_axisym_dtheta",
    "analyze_general",
    "synth_general",
    "w000_kernel",
    "theta_kernel",
    "spectral_product_axisym",
    "spectral_product_general",
    "radial_deriv_coeffs",
    "theta_grad_product_coeffs",
    "grad_square_axisym",
    "samples_from",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AxisymCoeffs:
    """Real coefficients ``c[l]`` of ``psi(theta) = sum_l c[l] Y_l^0``, ``l = 0..L``."""

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        if c.size == 0:
            raise ValueError("need at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "c", _frozen(c))

    @property
    def L(self) -> int:
        return self.c.size - 1

    @classmethod
    def zeros(cls, L: int) -> "AxisymCoeffs":
        return cls(np.zeros(L + 1))

    @classmethod
    def unit(cls, l: int, L: int | None = None, value: float = 1.0) -> "AxisymCoeffs":
        c = np.zeros((l if L is None else L) + 1)
        c[l] = value
        return cls(c)

    def truncate(self, L: int) -> "AxisymCoeffs":
        """Cut to degree ``L`` (zero-padding when ``L`` exceeds the current degree)."""
        out = np.zeros(L + 1)
        n = min(L, self.L) + 1
        out[:n] = self.c[:n]
        return AxisymCoeffs(out)

    def tail(self, L: int) -> np.ndarray:
        return self.c[L + 1:].copy()

    def _aligned(self, other):
        L = max(self.L, other.L)
        return self.truncate(L).c, other.truncate(L).c

    def __add__(self, other):
        a, b = self._aligned(other)
        return AxisymCoeffs(a + b)

    def __sub__(self, other):
        a, b = self._aligned(other)
        return AxisymCoeffs(a - b)

    def __mul__(self, scalar):
        return AxisymCoeffs(self.c * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return AxisymCoeffs(-self.c)

    def __repr__(self):
        return f"AxisymCoeffs(L={self.L}, c={np.array2string(self.c, threshold=8)})"


@dataclass(frozen=True, eq=False)
class SphCoeffs:
    """Complex coefficients ``u_l^m`` stored densely as ``table[l, m + L]``."""

    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=complex)
        if t.ndim != 2 or t.shape[1] != 2 * t.shape[0] - 1:
            raise ValueError("table must have shape (L+1, 2L+1)")
        if not np.all(np.isfinite(t)):
            raise ValueError("coefficients must be finite")
        L = t.shape[0] - 1
        l_idx, m_idx = np.indices(t.shape)
        if np.any(t[np.abs(m_idx - L) > l_idx] != 0):
            raise ValueError("entries with |m| > l must be zero")
        object.__setattr__(self, "table", _frozen(t))

    @property
    def L(self) -> int:
        return self.table.shape[0] - 1

    @classmethod
    def zeros(cls, L: int) -> "SphCoeffs":
        return cls(np.zeros((L + 1, 2 * L + 1), dtype=complex))

    @classmethod
    def from_dict(cls, L: int, entries: dict) -> "SphCoeffs":
        t = np.zeros((L + 1, 2 * L + 1), dtype=complex)
        for (l, m), val in entries.items():
            t[l, m + L] = val
        return cls(t)

    @classmethod
    def from_axisym(cls, u: AxisymCoeffs) -> "SphCoeffs":
        t = np.zeros((u.L + 1, 2 * u.L + 1), dtype=complex)
        t[:, u.L] = u.c
        return cls(t)

    def get(self, l: int, m: int) -> complex:
        if abs(m) > l or l > self.L:
            return 0j
        return self.table[l, m + self.L]

    def column(self, m: int) -> np.ndarray:
        """``u_l^m`` for ``l = 0..L`` (zeros where ``l < |m|``)."""
        if abs(m) > self.L:
            return np.zeros(self.L + 1, dtype=complex)
        return self.table[:, m + self.L].copy()

    def orders(self) -> range:
        return range(-self.L, self.L + 1)

    def axisym_part(self) -> AxisymCoeffs:
        return AxisymCoeffs(self.table[:, self.L].real)

    def truncate(self, L: int) -> "SphCoeffs":
        out = np.zeros((L + 1, 2 * L + 1), dtype=complex)
        n = min(L, self.L)
        for m in range(-n, n + 1):
            out[: n + 1, m + L] = self.table[: n + 1, m + self.L]
        return SphCoeffs(out)

    def is_real_function(self, atol: float = 1e-12) -> bool:
        """Check ``u_l^{-m} = (-1)^m conj(u_l^m)``."""
        for m in range(1, self.L + 1):
            lhs = self.column(-m)
            rhs = (-1) ** m * np.conj(self.column(m))
            if not np.allclose(lhs, rhs, rtol=0, atol=atol):
                return False
        return True

    def __add__(self, other):
        L = max(self.L, other.L)
        return SphCoeffs(self.truncate(L).table + other.truncate(L).table)

    def __sub__(self, other):
        L = max(self.L, other.L)
        return SphCoeffs(self.truncate(L).table - other.truncate(L).table)

    def __mul__(self, scalar):
        return SphCoeffs(self.table * scalar)

    __rmul__ = __mul__


Coeffs = Union[AxisymCoeffs, SphCoeffs]


@lru_cache(maxsize=64)
def gauss_nodes(n: int):
    """Gauss-Legendre nodes ``z`` (ascending) and weights on [-1, 1]."""
    if n < 1:
        raise ValueError("need at least one node")
    z, w = np.polynomial.legendre.leggauss(n)
    return _frozen(z), _frozen(w)


def quadrature_size(max_degree: int) -> int:
    """Nodes needed to integrate polynomials of degree ``max_degree`` exactly."""
    return max_degree // 2 + 1


def general_grid(n_z: int, n_phi: int):
    """Tensor grid: Gauss nodes in ``z = sin(theta)`` times equispaced longitudes."""
    z, w = gauss_nodes(n_z)
    phi = -math.pi + 2 * math.pi * np.arange(n_phi) / n_phi
    return np.arcsin(z), phi, w


# ---------------------------------------------------------------- norms


def hs_norm(u: Coeffs, s: float) -> float:
    """Spectral norm ``sqrt(sum (l+1)^(2s) |u_l^m|^2)``."""
    if s < 0:
        raise ValueError("Sobolev index must be non-negative")
    if isinstance(u, AxisymCoeffs):
        weights = (np.arange(u.L + 1) + 1.0) ** (2 * s)
        return float(math.sqrt(np.sum(weights * u.c**2)))
    weights = (np.arange(u.L + 1) + 1.0) ** (2 * s)
    return float(math.sqrt(np.sum(weights[:, None] * np.abs(u.table) ** 2)))


def equator_hs_norm(h, s: float) -> float:
    """Norm on the equator circle for Fourier coefficients ``h[m + M]``, ``m = -M..M``."""
    h = np.asarray(h)
    if h.size == 0:
        return 0.0
    if h.ndim != 1 or h.size % 2 == 0:
        raise ValueError("equator coefficients must have odd length 2M+1")
    M = h.size // 2
    weights = (np.abs(np.arange(-M, M + 1)) + 1.0) ** (2 * s)
    return float(math.sqrt(np.sum(weights * np.abs(h) ** 2)))


# ---------------------------------------------------------------- transforms


def analyze_axisym(samples, L: int) -> AxisymCoeffs:
    """Coefficients up to degree ``L`` from values at the ``N`` Gauss nodes in ``z``.

    ``samples[i]`` is the function at ``z_i`` of :func:`gauss_nodes` ``(N)``.
    Exact when the function times ``Y_l^0`` is a polynomial of degree ``<= 2N-1``.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < L + 1:
        raise ValueError(f"need at least L+1={L + 1} nodes, got {n}")
    z, w = gauss_nodes(n)
    ylm = normalized_legendre_table(L, 0, z)
    return AxisymCoeffs(2 * math.pi * ylm @ (w * samples))


def synth_axisym(u: AxisymCoeffs, theta):
    """Evaluate ``sum_l c[l] Y_l^0(theta)``."""
    theta = np.asarray(theta, dtype=float)
    ylm = normalized_legendre_table(u.L, 0, np.sin(theta))
    out = np.tensordot(u.c, ylm, axes=(0, 0))
    return out[()] if out.ndim == 0 else out


def synth_axisym_dtheta(u: AxisymCoeffs, theta):
    """Evaluate ``d/dtheta`` of the surface function."""
    theta = np.asarray(theta, dtype=float)
    out = np.tensordot(u.c, normalized_dtheta_table(u.L, 0, theta), axes=(0, 0))
    return out[()] if out.ndim == 0 else out


def analyze_general(values, L: int, n_z: int | None = None, n_phi: int | None = None) -> SphCoeffs:
    """Coefficients from samples on :func:`general_grid`.

    ``values`` is either an ``(n_z, n_phi)`` array on that grid or a callable
    ``f(theta, phi)`` evaluated there (sizes then default to exact for degree ``2L``
    integrands).
    """
    if callable(values):
        n_z = n_z or L + 1
        n_phi = n_phi or 2 * L + 1
        theta, phi, _ = general_grid(n_z, n_phi)
        values = values(theta[:, None], phi[None, :])
    values = np.asarray(values, dtype=complex)
    n_z, n_phi = values.shape
    if n_z < L + 1 or n_phi < 2 * L + 1:
        raise ValueError("grid too coarse for the requested degree")
    theta, phi, w = general_grid(n_z, n_phi)
    z = np.sin(theta)
    # Fourier in longitude: mean over phi of f e^{-i m phi}
    table = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    for m in range(-L, L + 1):
        fm = (values * np.exp(-1j * m * phi)[None, :]).sum(axis=1) * (2 * math.pi / n_phi)
        ylm = normalized_legendre_table(L, m, z, np.cos(theta))
        table[:, m + L] = ylm @ (w * fm)
    return SphCoeffs(table)


def synth_general(u: SphCoeffs, theta, phi):
    """Evaluate ``sum u_l^m Y_l^m(theta, phi)`` (complex) on broadcast ``theta, phi``."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    z = np.sin(theta)
    out = np.zeros(theta.shape, dtype=complex)
    for m in u.orders():
        col = u.column(m)
        if not np.any(col):
            continue
        ylm = normalized_legendre_table(u.L, m, z, np.cos(theta))
        out += np.tensordot(col, ylm, axes=(0, 0)) * np.exp(1j * m * phi)
    return out


# ---------------------------------------------------------------- products


def _threej000_squared(Lu: int, Lv: int) -> np.ndarray:
    # T[i, j, l] = (i j l; 0 0 0)^2.  Exact start at l = |i-j|, then the
    # rational ratio between l and l+2, so every value stays O(1).
    out = np.zeros((Lu + 1, Lv + 1, Lu + Lv + 1))
    f = math.factorial
    for i in range(Lu + 1):
        for j in range(Lv + 1):
            hi, lo = max(i, j), min(i, j)
            t = float(Fraction(f(2 * hi - 2 * lo) * f(2 * lo) * math.comb(hi, lo) ** 2, f(2 * hi + 1)))
            l = hi - lo
            g = hi
            out[i, j, l] = t
            for _ in range(lo):
                a, b, c = 2 * g - 2 * i, 2 * g - 2 * j, 2 * g - 2 * l
                r1 = (a + 1) * (a + 2) * (b + 1) * (b + 2) / (c * (c - 1) * (2 * g + 2) * (2 * g + 3))
                r2 = (g + 1) * (g - l) / ((g + 1 - i) * (g + 1 - j))
                t *= r1 * r2 * r2
                l += 2
                g += 1
                out[i, j, l] = t
    return out


@lru_cache(maxsize=16)
def w000_kernel(Lu: int, Lv: int) -> np.ndarray:
    """``K[i, j, l] = sqrt((2i+1)(2j+1)(2l+1)) W^{i,j,l}_{0,0,0}`` for ``l <= Lu+Lv``.

    ``W^{i,j,l}_{0,0,0}`` is the square of the ``(i j l; 0 0 0)`` symbol over
    ``sqrt(4 pi)``.  The squared symbols come from a ratio recurrence in ``l``;
    the factorial-sum route in :func:`wigner_3j` is the independent check.
    Read-only, shared between callers.
    """
    i = np.arange(Lu + 1)[:, None, None]
    j = np.arange(Lv + 1)[None, :, None]
    l = np.arange(Lu + Lv + 1)[None, None, :]
    scale = np.sqrt((2 * i + 1.0) * (2 * j + 1.0) * (2 * l + 1.0) / (4 * math.pi))
    return _frozen(scale * _threej000_squared(Lu, Lv))


@lru_cache(maxsize=16)
def theta_kernel(Lu: int, Lv: int) -> np.ndarray:
    """``w000_kernel`` weighted by ``[i(i+1) + j(j+1) - l(l+1)] / 2``."""
    i = np.arange(Lu + 1)[:, None, None]
    j = np.arange(Lv + 1)[None, :, None]
    l = np.arange(Lu + Lv + 1)[None, None, :]
    weight = 0.5 * (i * (i + 1) + j * (j + 1) - l * (l + 1))
    return _frozen(w000_kernel(Lu, Lv) * weight)


def _contract(kernel: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # fixed order: sum over j first, then i
    return np.tensordot(u, np.tensordot(kernel, v, axes=(1, 0)), axes=(0, 0))


def spectral_product_axisym(u: AxisymCoeffs, v: AxisymCoeffs) -> AxisymCoeffs:
    """Coefficients of the pointwise product; output degree ``L_u + L_v``."""
    return AxisymCoeffs(_contract(w000_kernel(u.L, v.L), u.c, v.c))


@lru_cache(maxsize=None)
def _general_block(l1: int, l2: int, l: int) -> np.ndarray:
    # B[m1 + l1, m2 + l2] = sqrt((2l1+1)(2l2+1)(2l+1)) W^{l1,l2,l}_{m1,m2,m1+m2}
    block = np.zeros((2 * l1 + 1, 2 * l2 + 1))
    w000 = wigner_3j(l1, l2, l, 0, 0, 0)
    if w000 == 0.0:
        return _frozen(block)
    scale = math.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * l + 1) / (4 * math.pi)) * w000
    for m1 in range(-l1, l1 + 1):
        for m2 in range(-l2, l2 + 1):
            m = m1 + m2
            if abs(m) > l:
                continue
            sign = -1.0 if m % 2 else 1.0
            block[m1 + l1, m2 + l2] = sign * scale * wigner_3j(l1, l2, l, m1, m2, -m)
    return _frozen(block)


def spectral_product_general(u: SphCoeffs, v: SphCoeffs) -> SphCoeffs:
    """Pointwise product of general surface functions via the 3j product formula.

    Only ``m = m1 + m2`` receives a contribution.  Output degree ``L_u + L_v``.
    """
    Lo = u.L + v.L
    out = np.zeros((Lo + 1, 2 * Lo + 1), dtype=complex)
    for l1 in range(u.L + 1):
        a = u.table[l1, u.L - l1: u.L + l1 + 1]
        if not np.any(a):
            continue
        for l2 in range(v.L + 1):
            b = v.table[l2, v.L - l2: v.L + l2 + 1]
            if not np.any(b):
                continue
            outer = a[:, None] * b[None, :]
            m_sum = (np.arange(-l1, l1 + 1)[:, None] + np.arange(-l2, l2 + 1)[None, :]).ravel()
            for l in range(abs(l1 - l2), l1 + l2 + 1, 2):
                contrib = (_general_block(l1, l2, l) * outer).ravel()
                np.add.at(out[l], m_sum + Lo, contrib)
    return SphCoeffs(out)


# ---------------------------------------------------------------- gradients


def radial_deriv_coeffs(u: AxisymCoeffs) -> AxisymCoeffs:
    """Trace of ``u_r`` on the sphere for the exterior extension ``sum c_l r^(-l-1) Y_l^0``."""
    return AxisymCoeffs(-(np.arange(u.L + 1) + 1.0) * u.c)


def theta_grad_product_coeffs(u: AxisymCoeffs, v: AxisymCoeffs) -> AxisymCoeffs:
    """Coefficients of ``u_theta v_theta`` on the sphere from the closed-form double sum."""
    return AxisymCoeffs(_contract(theta_kernel(u.L, v.L), u.c, v.c))


def grad_square_axisym(u: AxisymCoeffs, v: AxisymCoeffs) -> AxisymCoeffs:
    """``grad u . grad v`` on the sphere for exterior harmonic extensions of ``u``, ``v``."""
    radial = spectral_product_axisym(radial_deriv_coeffs(u), radial_deriv_coeffs(v))
    return radial + theta_grad_product_coeffs(u, v)


def samples_from(func: Callable, n: int) -> np.ndarray:
    """Values of ``func(theta)`` at the ``n`` Gauss nodes."""
    z, _ = gauss_nodes(n)
    return np.asarray(func(np.arcsin(z)), dtype=float)
