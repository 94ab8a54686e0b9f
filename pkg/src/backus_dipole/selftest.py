"""Invariant suite behind ``backus-dipole selftest``.

Each group returns ``(passed, detail)``.  The groups are seeded, so a run is
reproducible; ``quick`` halves the degree caps and trims the sample counts.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .oblique import _gamma
from .special_fn import log_double_factorial, normalized_zero_values, wigner_3j
from .spectral import AxisymCoeffs, analyze_axisym, gauss_nodes, spectral_product_axisym, synth_axisym

__all__ = [
    "GroupResult",
    "GAMMA_RATIO_BASELINE",
    "ZERO_RATIO_BASELINE",
    "FACTORIAL_BRACKET",
    "random_3j_tuples",
    "lsum_defects",
    "closure_ratios",
    "factorial_ratios",
    "run_selftest",
]

# observed ranges for orders |m| <= 20 and k <= 30, widened slightly; the
# constants in the corresponding two-sided estimates are not explicit
GAMMA_RATIO_BASELINE = (0.90, 1.45)
ZERO_RATIO_BASELINE = (0.27, 0.33)
FACTORIAL_BRACKET = (0.5, 1.5)


@dataclass(frozen=True)
class GroupResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_3j_tuples(count: int, lmax: int, rng: np.random.Generator):
    """``(l1, l2, m1, m2)`` with ``|m1 + m2| <= l1 + l2`` so the l-sum is non-empty."""
    out = []
    while len(out) < count:
        l1, l2 = (int(x) for x in rng.integers(0, lmax + 1, size=2))
        m1 = int(rng.integers(-l1, l1 + 1))
        m2 = int(rng.integers(-l2, l2 + 1))
        out.append((l1, l2, m1, m2))
    return out


def lsum_defects(tuples, wigner: Callable = wigner_3j) -> np.ndarray:
    """``|sum_l (2l+1) (l1 l2 l; m1 m2 -m1-m2)^2 - 1|`` per tuple."""
    out = np.empty(len(tuples))
    for n, (l1, l2, m1, m2) in enumerate(tuples):
        m3 = -m1 - m2
        total = math.fsum(
            (2 * l + 1) * wigner(l1, l2, l, m1, m2, m3) ** 2
            for l in range(max(abs(l1 - l2), abs(m3)), l1 + l2 + 1)
        )
        out[n] = abs(total - 1.0)
    return out


def closure_ratios(m_max: int = 20, k_max: int = 30):
    """Sign checks and scaled ratios for the closure-series ingredients.

    Returns ``(signs_ok, gamma_ratios, zero_ratios)`` where, for
    ``|m| <= m_max`` and ``k <= k_max``,

    * ``gamma_ratios = (-3)^k Gamma_k / ((|m|+1) / ((2k+1)(|m|+2k+1)))^(1/4)``
    * ``zero_ratios = (-1)^((|m|-m)/2 + k) alpha P(0) / ((|m|+2k+1) / (2k+1))^(1/4)``

    and ``signs_ok`` says every ratio came out positive.
    """
    g_ratios, z_ratios = [], []
    for m in range(-m_max, m_max + 1):
        am = abs(m)
        zeros = normalized_zero_values(m, am + 2 * k_max)
        G = 1.0
        for k in range(k_max + 1):
            if k:
                G *= _gamma(am + 2 * k - 1, am)
            g_ratios.append((-3.0) ** k * G / ((am + 1) / ((2 * k + 1) * (am + 2 * k + 1))) ** 0.25)
            sign = -1.0 if ((am - m) // 2 + k) % 2 else 1.0
            z_ratios.append(sign * zeros[am + 2 * k] / ((am + 2 * k + 1) / (2 * k + 1)) ** 0.25)
    g_ratios, z_ratios = np.array(g_ratios), np.array(z_ratios)
    return bool(np.all(g_ratios > 0) and np.all(z_ratios > 0)), g_ratios, z_ratios


def factorial_ratios(n_max: int = 500):
    """``n!! / sqrt(n!) / (n+1)^(1/4)`` and ``(n+1)!! / n!! / (n+1)^(1/2)`` for ``n = 1..n_max``."""
    n = np.arange(1, n_max + 1)
    first = np.array([math.exp(log_double_factorial(k) - 0.5 * math.lgamma(k + 1) - 0.25 * math.log(k + 1)) for k in n])
    second = np.array([math.exp(log_double_factorial(k + 1) - log_double_factorial(k) - 0.5 * math.log(k + 1)) for k in n])
    return first, second


def _within(x, bracket):
    return bool(np.all(x >= bracket[0]) and np.all(x <= bracket[1]))


def _group_lsum(quick, wigner):
    rng = np.random.default_rng(20240611)
    tuples = random_3j_tuples(250 if quick else 1000, 15 if quick else 30, rng)
    worst = float(np.max(lsum_defects(tuples, wigner)))
    return worst <= 1e-12, f"{len(tuples)} tuples, worst |sum - 1| = {worst:.2e}"


def _group_product(quick, wigner):
    rng = np.random.default_rng(7)
    lmax = 12 if quick else 24
    pairs = 20 if quick else 50
    worst = 0.0
    for _ in range(pairs):
        Lu, Lv = (int(x) for x in rng.integers(1, lmax + 1, size=2))
        u = AxisymCoeffs(rng.standard_normal(Lu + 1))
        v = AxisymCoeffs(rng.standard_normal(Lv + 1))
        got = spectral_product_axisym(u, v).c
        n = math.ceil((3 * (Lu + Lv) + 2) / 2)
        theta = np.arcsin(gauss_nodes(n)[0])
        want = analyze_axisym(synth_axisym(u, theta) * synth_axisym(v, theta), Lu + Lv).c
        worst = max(worst, float(np.max(np.abs(got - want)) / np.max(np.abs(want))))
    return worst <= 1e-10, f"{pairs} pairs up to degree {lmax}, worst relative error {worst:.2e}"


def _group_closure(quick, wigner):
    m_max, k_max = (10, 15) if quick else (20, 30)
    signs_ok, g, z = closure_ratios(m_max, k_max)
    ok = signs_ok and _within(g, GAMMA_RATIO_BASELINE) and _within(z, ZERO_RATIO_BASELINE)
    return ok, (
        f"signs {'ok' if signs_ok else 'WRONG'}; Gamma ratios in [{g.min():.4f}, {g.max():.4f}], "
        f"zero-value ratios in [{z.min():.4f}, {z.max():.4f}]"
    )


def _group_factorial(quick, wigner):
    first, second = factorial_ratios(250 if quick else 500)
    ok = _within(first, FACTORIAL_BRACKET) and _within(second, FACTORIAL_BRACKET)
    return ok, f"ratios in [{min(first.min(), second.min()):.4f}, {max(first.max(), second.max()):.4f}]"


GROUPS = {
    "l-sum": _group_lsum,
    "product": _group_product,
    "closure-brackets": _group_closure,
    "factorial-brackets": _group_factorial,
}


def run_selftest(quick: bool = False, *, wigner: Callable | None = None) -> list[GroupResult]:
    """Run every group.  ``wigner`` replaces the 3j evaluator (fault injection)."""
    wigner = wigner or wigner_3j
    results = []
    for name, fn in GROUPS.items():
        t0 = time.perf_counter()
        try:
            ok, detail = fn(quick, wigner)
        except Exception as exc:  # a crashing group is a failing group
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(GroupResult(name, ok, detail, time.perf_counter() - t0))
    return results
