"""Fixed-point solver for ``|grad u| = g`` on the unit sphere, for data close to the dipole.

Write ``u = d + v`` with ``d = sin(theta) / r^2``.  On the sphere

    |grad u|^2 = |grad d|^2 + 2 grad d . grad v + |grad v|^2,

so with ``grad d . grad v = f`` the nonlinear condition reads
``2 f = g^2 - |grad d|^2 - |grad v|^2``.  The map

    psi[f] = (g^2 - |grad d|^2 - T[f]) / 2,    T[f] = |grad v[f]|^2,

is iterated from ``f = 0``; ``v[f]`` solves the linear oblique problem with
``grad d . grad v = f`` and ``v = h0`` on the equator.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .field import intensity
from .oblique import default_residual_grid, solve_oblique_axisym
from .spectral import (
    AxisymCoeffs,
    analyze_axisym,
    gauss_nodes,
    grad_square_axisym,
    hs_norm,
    synth_axisym,
)

__all__ = [
    "InputError",
    "NonPositiveIntensityError",
    "BackusConvergenceError",
    "BackusConfig",
    "BackusResult",
    "dipole_trace",
    "grad_dipole_sq_coeffs",
    "dipole_intensity",
    "apply_T",
    "psi_step",
    "solve_backus",
    "intensity_on_surface",
]

log = logging.getLogger(__name__)

_Y10 = math.sqrt(4 * math.pi / 3)


class InputError(ValueError):
    """Intensity data unusable (non-finite, non-positive, or too few samples)."""


class NonPositiveIntensityError(InputError):
    """Some intensity sample is zero or negative."""


class BackusConvergenceError(RuntimeError):
    """Iteration failed to reach the tolerance; ``trace`` holds the iterate distances."""

    def __init__(self, message: str, trace: Sequence[float]):
        super().__init__(message)
        self.trace = list(trace)


def dipole_trace(L: int = 1) -> AxisymCoeffs:
    """Surface coefficients of ``d``: ``sin(theta) = sqrt(4 pi / 3) Y_1^0``."""
    return AxisymCoeffs.unit(1, max(L, 1), _Y10)


def grad_dipole_sq_coeffs(L: int = 2) -> AxisymCoeffs:
    """Coefficients of ``|grad d|^2 = 1 + 3 sin^2(theta) = 2 + 2 P_2(sin theta)``."""
    c = np.zeros(max(L, 2) + 1)
    c[0] = 2 * math.sqrt(4 * math.pi)
    c[2] = 2 * math.sqrt(4 * math.pi / 5)
    return AxisymCoeffs(c)


def dipole_intensity(theta):
    """``sqrt(1 + 3 sin^2(theta))``."""
    return np.sqrt(1.0 + 3.0 * np.sin(theta) ** 2)


def _linear_solution(f: AxisymCoeffs, h0: float, L: int):
    # the oblique solver normalizes its data as grad d . grad v = f/2
    return solve_oblique_axisym(2.0 * f, h0, L)


def apply_T(f: AxisymCoeffs, h0: float, L: int, *, with_tail: bool = False):
    """``|grad v|^2`` on the sphere, truncated to degree ``L``.

    ``v`` has ``grad d . grad v = f`` on the sphere and ``v = h0`` on the
    equator.  With ``with_tail=True`` the l2 norm of the discarded degrees
    ``L+1..2L`` is returned as well.
    """
    v = _linear_solution(f, h0, L).v
    full = grad_square_axisym(v, v)
    out = full.truncate(L)
    if with_tail:
        return out, float(np.linalg.norm(full.tail(L)))
    return out


def psi_step(f: AxisymCoeffs, g_sq: AxisymCoeffs, h0: float, L: int) -> AxisymCoeffs:
    """One application of the fixed-point map, given coefficients of ``g^2``."""
    source = g_sq.truncate(L) - grad_dipole_sq_coeffs(L).truncate(L)
    return _psi_from_source(f, source, h0, L)[0]


def _psi_from_source(f, source, h0, L):
    t, tail = apply_T(f, h0, L, with_tail=True)
    return 0.5 * (source.truncate(L) - t), tail


@dataclass(frozen=True)
class BackusConfig:
    """Solver settings.

    Attributes
    ----------
    s : float
        Sobolev index of the stopping norm; must exceed 1.
    L : int
        Working degree.
    tol : float
        Stop once consecutive iterates are closer than this in ``H^s``.
    max_iter : int
    h0 : float
        Value of ``u`` on the equator.
    """

    s: float = 1.5
    L: int = 64
    tol: float = 1e-12
    max_iter: int = 200
    h0: float = 0.0

    def __post_init__(self):
        if not self.s > 1:
            raise ValueError("s must exceed 1")
        if self.L < 2:
            raise ValueError("L must be at least 2")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not math.isfinite(self.h0):
            raise ValueError("h0 must be finite")


@dataclass(frozen=True, eq=False)
class BackusResult:
    """Fixed point, the potential it determines, and run diagnostics."""

    f_star: AxisymCoeffs
    v_star: AxisymCoeffs
    u_surface: AxisymCoeffs
    iterations: int
    trace: list
    delta: float
    residual_intensity_sup: float
    fixed_point_residual: float
    tail_norm: float
    config: BackusConfig = dc_field(default_factory=BackusConfig)

    def to_json(self) -> dict:
        c = self.config
        return {
            "config": {"s": c.s, "L": c.L, "tol": c.tol, "max_iter": c.max_iter, "h0": c.h0},
            "iterations": self.iterations,
            "trace": [float(x) for x in self.trace],
            "delta": self.delta,
            "residual_intensity_sup": self.residual_intensity_sup,
            "fixed_point_residual": self.fixed_point_residual,
            "tail_norm": self.tail_norm,
            "f_star": self.f_star.c.tolist(),
            "v_star": self.v_star.c.tolist(),
            "u_surface": self.u_surface.c.tolist(),
        }


@dataclass(frozen=True)
class _Intensity:
    # g - g_d and g + g_d at Gauss nodes, plus an evaluator for residual grids
    minus: np.ndarray
    plus: np.ndarray
    evaluate: Callable


def _prepare_intensity(g, L: int) -> _Intensity:
    if isinstance(g, AxisymCoeffs):
        coeffs = g
        n = max(2 * L + 2, 2 * g.L + 2)
        z, _ = gauss_nodes(n)
        values = synth_axisym(coeffs, np.arcsin(z))
        evaluate = lambda th: synth_axisym(coeffs, th)  # noqa: E731
    elif callable(g):
        n = 2 * L + 2
        z, _ = gauss_nodes(n)
        values = np.asarray(g(np.arcsin(z)), dtype=float)
        evaluate = g
    else:
        values = np.asarray(g, dtype=float).reshape(-1)
        n = values.size
        if n < L + 1:
            raise InputError(f"need at least L+1={L + 1} samples, got {n}")
        z, _ = gauss_nodes(n)
        # fixed seed: the interpolator shuffles its nodes otherwise
        interp = BarycentricInterpolator(z, values, random_state=0)
        evaluate = lambda th: interp(np.sin(th))  # noqa: E731
    if values.shape != z.shape or not np.all(np.isfinite(values)):
        raise InputError("intensity samples must be finite")
    if np.any(values <= 0):
        raise NonPositiveIntensityError("intensity must be positive at every sample")
    gd = dipole_intensity(np.arcsin(z))
    return _Intensity(values - gd, values + gd, evaluate)


def intensity_on_surface(u: AxisymCoeffs, grid) -> np.ndarray:
    """``|grad u|`` at ``r = 1`` on the latitudes ``grid``."""
    return np.atleast_1d(intensity(u, 1.0, np.asarray(grid, dtype=float)))


def solve_backus(g, config: BackusConfig | None = None) -> BackusResult:
    """Solve ``|grad u| = g`` on the sphere with ``u = h0`` on the equator.

    Parameters
    ----------
    g : AxisymCoeffs, callable or array_like
        Surface intensity as coefficients of ``g``, as a function of the
        latitude, or as samples at the Gauss nodes in ``z = sin(theta)``
        (ascending, at least ``L + 1`` of them).
    config : BackusConfig, optional

    Returns
    -------
    BackusResult

    Raises
    ------
    InputError
        Non-finite or non-positive intensity, or too few samples.
    BackusConvergenceError
        No convergence within ``max_iter``, or the iterates blew up.

    Notes
    -----
    ``g^2 - |grad d|^2`` is formed as ``(g - g_d)(g + g_d)`` before analysis,
    so ``g = |grad d|`` yields an exactly zero source.
    """
    cfg = config or BackusConfig()
    L, s, h0 = cfg.L, cfg.s, cfg.h0
    data = _prepare_intensity(g, L)
    source = analyze_axisym(data.minus * data.plus, L)
    delta = hs_norm(analyze_axisym(data.minus, L), s) + abs(h0)
    log.info("delta = %.3e", delta)

    f = AxisymCoeffs.zeros(L)
    trace: list[float] = []
    tail = 0.0
    for it in range(1, cfg.max_iter + 1):
        f_new, tail = _psi_from_source(f, source, h0, L)
        dist = hs_norm(f_new - f, s)
        trace.append(dist)
        log.debug("iteration %d: |f_new - f| = %.3e", it, dist)
        if not math.isfinite(dist) or (it > 3 and dist > 1e6 * max(trace[0], 1e-300)):
            raise BackusConvergenceError(f"iteration diverged at step {it}", trace)
        f = f_new
        if dist <= cfg.tol:
            break
    else:
        raise BackusConvergenceError(f"no convergence in {cfg.max_iter} iterations", trace)

    v = _linear_solution(f, h0, L).v
    u = dipole_trace(L) + v
    grid = default_residual_grid(4 * L)
    residual = float(np.max(np.abs(intensity_on_surface(u, grid) - data.evaluate(grid))))
    fp_res = hs_norm(_psi_from_source(f, source, h0, L)[0] - f, s)
    return BackusResult(
        f_star=f,
        v_star=v,
        u_surface=u,
        iterations=len(trace),
        trace=trace,
        delta=float(delta),
        residual_intensity_sup=residual,
        fixed_point_residual=float(fp_res),
        tail_norm=tail,
        config=cfg,
    )
