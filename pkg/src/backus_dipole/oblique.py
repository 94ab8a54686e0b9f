"""Series solution of the linear oblique-derivative problem around the dipole.

Find ``v`` harmonic outside the unit sphere, decaying at infinity, with

    -2 sin(theta) v_r + cos(theta) v_theta = f / 2     on the sphere,
    v = h                                              on the equator.

The boundary operator couples degree ``l`` only to ``l +- 1`` inside one
order ``m``, so each order is solved independently by a two-term recurrence
plus one scalar closure fixing the equator values.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import eval_gradient, eval_gradient_general
from .special_fn import normalized_zero_values
from .spectral import AxisymCoeffs, SphCoeffs, synth_axisym, synth_general

__all__ = [
    "ClosureConvergenceError",
    "ModeTables",
    "ObliqueSolution",
    "BoundaryResidual",
    "mode_tables",
    "closure_denominator",
    "solve_oblique_axisym",
    "solve_oblique_general",
    "boundary_residual",
    "recurrence_defect",
]

CLOSURE_REL_TOL = 1e-16
CLOSURE_MAX_TERMS = 200


class ClosureConvergenceError(RuntimeError):
    """The equator closure series did not settle, or its sum vanished."""


def _beta(l: int, am: int) -> float:
    if l <= am:
        return 0.0
    return math.sqrt((l - am) * (l + am) / ((2 * l - 1) * (2 * l + 1)))


def _gamma(l: int, am: int) -> float:
    # ratio form -(l+1) beta_l / (3 (l+2) beta_{l+1}) rewritten as one radical,
    # finite (and zero) at l = |m|
    if l <= am:
        return 0.0
    rad = (2 * l + 3) * (l - am) * (l + am) / ((2 * l - 1) * (l + 1 - am) * (l + 1 + am))
    return -(l + 1) / (3 * (l + 2)) * math.sqrt(rad)


@dataclass(frozen=True, eq=False)
class ModeTables:
    """Recurrence constants of one order ``m`` up to degree ``L``.

    ``beta[l]`` and ``gamma[l]`` are indexed by degree, ``l = 0..L+1``, and are
    zero below ``|m|``.  ``Gamma[k]`` is the running product of ``gamma`` over
    ``|m|+1, |m|+3, ..., |m|+2k-1``.
    """

    m: int
    L: int
    beta: np.ndarray
    gamma: np.ndarray
    Gamma: np.ndarray


def mode_tables(m: int, L: int) -> ModeTables:
    am = abs(m)
    if L < am:
        raise ValueError(f"need L >= |m|, got L={L}, m={m}")
    beta = np.array([_beta(l, am) for l in range(L + 3)])
    gamma = np.array([_gamma(l, am) for l in range(L + 2)])
    n_gamma = (L + 1 - am) // 2 + 1
    Gamma = np.ones(n_gamma)
    for k in range(1, n_gamma):
        Gamma[k] = Gamma[k - 1] * gamma[am + 2 * k - 1]
    for a in (beta, gamma, Gamma):
        a.setflags(write=False)
    return ModeTables(m, L, beta, gamma, Gamma)


def _closure_series(m: int, K: int | None):
    """``Gamma_k`` and the normalized zero values at ``|m| + 2k`` for the closure sum.

    With ``K`` given, exactly ``K`` terms are used.  Otherwise terms are added
    until the partial sum stops moving at relative level ``CLOSURE_REL_TOL``.
    Returns ``(Gamma, zeros, partial_sum)``.
    """
    am = abs(m)
    cap = CLOSURE_MAX_TERMS if K is None else K
    if cap < 1:
        raise ValueError("closure series needs at least one term")
    zeros = normalized_zero_values(m, am + 2 * (cap - 1))[am::2]
    Gamma = np.empty(cap)
    Gamma[0] = 1.0
    total = zeros[0]
    for k in range(1, cap):
        Gamma[k] = Gamma[k - 1] * _gamma(am + 2 * k - 1, am)
        term = Gamma[k] * zeros[k]
        new = total + term
        if K is None and abs(new - total) <= CLOSURE_REL_TOL * abs(new):
            return Gamma[: k + 1], zeros[: k + 1], new
        total = new
    if K is None:
        raise ClosureConvergenceError(
            f"closure series for m={m} did not converge in {CLOSURE_MAX_TERMS} terms"
        )
    return Gamma, zeros, total


def closure_denominator(m: int, tables: ModeTables | None = None, K: int | None = None) -> float:
    """Sum over ``k`` of ``Gamma_k alpha P(0)`` at degree ``|m| + 2k``.

    Parameters
    ----------
    m : int
        Order.
    tables : ModeTables, optional
        Accepted for symmetry with the solver; the series is extended past the
        tables' degree as far as convergence requires.
    K : int, optional
        Fixed number of terms.  By default the series runs until two partial
        sums agree to ``1e-16`` relative, and raises
        :class:`ClosureConvergenceError` if that takes more than 200 terms.
    """
    if tables is not None and abs(tables.m) != abs(m):
        raise ValueError("tables belong to a different order")
    _, _, total = _closure_series(m, K)
    if total == 0.0 or not math.isfinite(total):
        raise ClosureConvergenceError(f"degenerate closure denominator for m={m}")
    return float(total)


@dataclass
class _ModeResult:
    a: np.ndarray
    b: np.ndarray
    v: np.ndarray
    a_tilde: complex
    denom: float
    terms: int
    tail_sq: float


def _solve_mode(m: int, fcol: np.ndarray, hm: complex, L: int) -> _ModeResult:
    am = abs(m)
    tab = mode_tables(m, L)
    Gamma_ext, zeros_ext, denom = _closure_series(m, None)
    if denom == 0.0:
        raise ClosureConvergenceError(f"degenerate closure denominator for m={m}")
    dtype = np.result_type(fcol.dtype, type(hm))
    a = np.zeros(L + 1, dtype=dtype)
    ls = np.arange(am, L + 1)
    a[am:] = fcol[am:] / (6.0 * (ls + 2) * tab.beta[am + 1: L + 2])

    # inhomogeneous part, continued with the homogeneous recurrence beyond L+1
    # until the equator sum has converged
    n_ext = len(Gamma_ext)
    top = max(L + 1, am + 2 * (n_ext - 1) + (L + 1 - am) // 2 * 2 + 1)
    b = np.zeros(top + 2, dtype=dtype)
    for l in range(am, top + 1):
        g = _gamma(l, am)
        prev = b[l - 1] if l - 1 >= am else 0.0
        b[l + 1] = g * prev + (a[l] if l <= L else 0.0)

    n_even = (top - am) // 2 + 1
    zeros_b = normalized_zero_values(m, am + 2 * (n_even - 1))[am::2]
    numer = hm - np.dot(b[am: am + 2 * n_even: 2], zeros_b)
    a_tilde = numer / denom

    # homogeneous part on the even-offset lattice
    c = np.zeros(top + 2, dtype=dtype)
    G = 1.0
    for k in range(n_even):
        l = am + 2 * k
        if k:
            G *= _gamma(l - 1, am)
        c[l] = G * a_tilde
    full = b + c
    v = np.zeros(L + 1, dtype=dtype)
    v[am:] = full[am: L + 1]
    tail_sq = float(np.sum(np.abs(full[L + 1:]) ** 2))
    return _ModeResult(a, b[: L + 2].copy(), v, a_tilde, denom, len(Gamma_ext), tail_sq)


@dataclass(frozen=True, eq=False)
class ObliqueSolution:
    """Coefficients of ``v`` and the intermediate tables that built them.

    Attributes
    ----------
    v : AxisymCoeffs or SphCoeffs
        Surface coefficients of the solution, degree ``L``.
    a, b : ndarray
        Source terms ``a[l]`` and particular solution ``b[l]`` (``b`` carries one
        extra degree, ``L + 1``).  For general solves the second axis is
        ``m + L``.
    a_tilde, denom : float or ndarray
        Equator closure value and closure denominator (per order for general solves).
    closure_terms_used : int
        Largest number of closure-series terms needed over the orders.
    tail_norm : float
        l2 norm of the coefficients above degree ``L`` that were discarded.
    """

    v: AxisymCoeffs | SphCoeffs
    a: np.ndarray
    b: np.ndarray
    a_tilde: float | np.ndarray
    denom: float | np.ndarray
    closure_terms_used: int
    tail_norm: float
    L: int = dc_field(default=0)

    @property
    def is_axisym(self) -> bool:
        return isinstance(self.v, AxisymCoeffs)


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} must be finite")


def solve_oblique_axisym(f: AxisymCoeffs, h0: float, L: int) -> ObliqueSolution:
    """Axisymmetric solve: data ``f`` up to degree ``L`` and equator value ``h0``.

    Coefficients of ``f`` above ``L`` are ignored; missing ones count as zero.
    """
    if L < 2:
        raise ValueError("need L >= 2")
    h0 = float(h0)
    if not math.isfinite(h0):
        raise ValueError("h0 must be finite")
    fc = f.truncate(L).c
    _check_finite(fc, "f")
    res = _solve_mode(0, fc, h0, L)
    return ObliqueSolution(
        v=AxisymCoeffs(res.v),
        a=res.a,
        b=res.b,
        a_tilde=float(res.a_tilde),
        denom=float(res.denom),
        closure_terms_used=res.terms,
        tail_norm=math.sqrt(res.tail_sq),
        L=L,
    )


def _thread_count() -> int:
    raw = os.environ.get("BACKUS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def solve_oblique_general(
    f: SphCoeffs,
    h,
    L: int,
    *,
    max_workers: int | None = None,
) -> ObliqueSolution:
    """Solve order by order for general data.

    Parameters
    ----------
    f : SphCoeffs
        Boundary data; degrees above ``L`` are dropped.
    h : array_like
        Equator Fourier coefficients ``h[m + M]``, ``m = -M..M`` (odd length),
        or a scalar for a constant equator value.
    L : int
        Output degree.
    max_workers : int, optional
        Threads for the independent per-order solves; defaults to the
        ``BACKUS_THREADS`` environment variable (1 when unset).  Results do
        not depend on the thread count.
    """
    if L < 2:
        raise ValueError("need L >= 2")
    table = f.truncate(L).table
    _check_finite(table, "f")
    h = np.atleast_1d(np.asarray(h, dtype=complex))
    if h.ndim != 1 or h.size % 2 == 0:
        raise ValueError("equator coefficients must have odd length 2M+1")
    _check_finite(h, "h")
    M = h.size // 2
    if M > L and np.any(h[: M - L]) or M > L and np.any(h[M + L + 1:]):
        raise ValueError("equator data has orders above L")

    def h_of(m):
        return h[m + M] if abs(m) <= M else 0j

    orders = list(range(-L, L + 1))
    workers = max_workers or _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda m: _solve_mode(m, table[:, m + L], h_of(m), L), orders))
    else:
        results = [_solve_mode(m, table[:, m + L], h_of(m), L) for m in orders]

    v = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    a = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    b = np.zeros((L + 2, 2 * L + 1), dtype=complex)
    a_tilde = np.zeros(2 * L + 1, dtype=complex)
    denom = np.zeros(2 * L + 1)
    tail_sq = 0.0
    for m, res in zip(orders, results):
        v[:, m + L] = res.v
        a[:, m + L] = res.a
        b[:, m + L] = res.b
        a_tilde[m + L] = res.a_tilde
        denom[m + L] = res.denom
        tail_sq += res.tail_sq
    return ObliqueSolution(
        v=SphCoeffs(v),
        a=a,
        b=b,
        a_tilde=a_tilde,
        denom=denom,
        closure_terms_used=max(r.terms for r in results),
        tail_norm=math.sqrt(tail_sq),
        L=L,
    )


def recurrence_defect(sol: ObliqueSolution) -> float:
    """Largest relative defect of ``v[l+1] = gamma_l v[l-1] + a_l`` over ``|m| <= l < L``.

    Relative to ``max(|v[l+1]|, |gamma_l v[l-1]|, |a_l|)``; pairs where all three
    vanish are skipped.
    """
    L = sol.L
    if sol.is_axisym:
        cols = {0: (sol.v.c, sol.a)}
    else:
        cols = {m: (sol.v.column(m), sol.a[:, m + L]) for m in range(-L, L + 1)}
    worst = 0.0
    for m, (v, a) in cols.items():
        am = abs(m)
        for l in range(am, L):
            g = _gamma(l, am)
            prev = v[l - 1] if l - 1 >= am else 0.0
            lhs, rhs = v[l + 1], g * prev + a[l]
            scale = max(abs(v[l + 1]), abs(g * prev), abs(a[l]))
            if scale == 0.0:
                continue
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


@dataclass(frozen=True)
class BoundaryResidual:
    """Samples of ``-2 sin(theta) v_r + cos(theta) v_theta - f/2`` and their norms.

    ``l2`` is the surface L2 norm from the trapezoid rule on the sample grid.
    """

    samples: np.ndarray
    sup: float
    l2: float


def default_residual_grid(n: int = 512) -> np.ndarray:
    """Equispaced latitudes covering both poles and the equator."""
    return np.linspace(-math.pi / 2, math.pi / 2, n + (1 - n % 2))


def boundary_residual(sol_or_v, f, grid=None) -> BoundaryResidual:
    """Boundary-condition defect of a solution on a latitude grid.

    Parameters
    ----------
    sol_or_v : ObliqueSolution, AxisymCoeffs or SphCoeffs
        The solution, or its coefficients directly.
    f : AxisymCoeffs or SphCoeffs
        Boundary data the solution was built for.
    grid : array_like or tuple, optional
        Latitudes for axisymmetric input (default :func:`default_residual_grid`),
        or ``(theta, phi)`` 1-D arrays for general input (default 64 x 33).
    """
    v = sol_or_v.v if isinstance(sol_or_v, ObliqueSolution) else sol_or_v
    if isinstance(v, AxisymCoeffs):
        if isinstance(f, SphCoeffs):
            f = f.axisym_part()
        theta = default_residual_grid() if grid is None else np.asarray(grid, float)
        v_r, v_t = eval_gradient(v, 1.0, theta)
        res = -2 * np.sin(theta) * v_r + np.cos(theta) * v_t - 0.5 * synth_axisym(f, theta)
        res = np.atleast_1d(res)
        l2 = math.sqrt(2 * math.pi * np.trapezoid(res**2 * np.cos(theta), theta)) if theta.size > 1 else 0.0
        return BoundaryResidual(res, float(np.max(np.abs(res))), l2)

    if isinstance(f, AxisymCoeffs):
        f = SphCoeffs.from_axisym(f)
    if grid is None:
        theta = default_residual_grid(64)
        phi = 2 * math.pi * np.arange(33) / 33
    else:
        theta, phi = (np.asarray(x, float) for x in grid)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    v_r, v_t = eval_gradient_general(v, 1.0, T, P)
    res = -2 * np.sin(T) * v_r + np.cos(T) * v_t - 0.5 * synth_general(f, T, P)
    weight = np.abs(res) ** 2 * np.cos(T)
    inner = np.mean(weight, axis=1) * 2 * math.pi if phi.size else np.zeros(theta.size)
    l2 = math.sqrt(np.trapezoid(inner, theta)) if theta.size > 1 else 0.0
    return BoundaryResidual(res, float(np.max(np.abs(res))), l2)
