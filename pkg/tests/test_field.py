import csv
import math

import numpy as np
import pytest

from backus_dipole.field import (
    decay_bound,
    eval_gradient,
    eval_gradient_general,
    eval_potential,
    eval_potential_general,
    harmonicity_check,
    intensity,
    write_field_csv,
)
from backus_dipole.oblique import solve_oblique_axisym
from backus_dipole.spectral import AxisymCoeffs, SphCoeffs, grad_square_axisym, hs_norm, synth_axisym

from conftest import dipole_coeffs, random_axisym, random_general


def _grid(n_r=6, n_t=7):
    r = np.linspace(1.2, 3.0, n_r)
    t = np.linspace(-1.3, 1.3, n_t)
    R, T = np.meshgrid(r, t)
    return np.column_stack([R.ravel(), T.ravel()])


def test_dipole_potential_examples():
    d = dipole_coeffs()
    assert eval_potential(d, 2.0, math.pi / 2) == pytest.approx(0.25, abs=1e-15)
    theta = np.linspace(-1.5, 1.5, 11)
    np.testing.assert_allclose(eval_potential(d, 1.7, theta), np.sin(theta) / 1.7**2, atol=1e-15)


def test_monopole_potential():
    u = AxisymCoeffs([math.sqrt(4 * math.pi)])
    assert eval_potential(u, 10.0, 0.4) == pytest.approx(0.1, rel=1e-14)


def test_dipole_intensity_examples():
    d = dipole_coeffs()
    assert intensity(d, 1.0, math.pi / 2) == pytest.approx(2.0, abs=1e-14)
    assert intensity(d, 1.0, -math.pi / 2) == pytest.approx(2.0, abs=1e-14)
    assert intensity(d, 1.0, 0.0) == pytest.approx(1.0, abs=1e-14)
    theta = np.linspace(-1.5, 1.5, 31)
    np.testing.assert_allclose(intensity(d, 1.0, theta), np.sqrt(1 + 3 * np.sin(theta) ** 2), atol=1e-14)


def test_gradient_matches_central_differences(rng):
    u = random_axisym(rng, 12, decay=1.0)
    r, t, h = 1.5, 0.3, 1e-5
    u_r, u_t = eval_gradient(u, r, t)
    fd_r = (eval_potential(u, r + h, t) - eval_potential(u, r - h, t)) / (2 * h)
    fd_t = (eval_potential(u, r, t + h) - eval_potential(u, r, t - h)) / (2 * h) / r
    assert abs(u_r - fd_r) <= 1e-8
    assert abs(u_t - fd_t) <= 1e-8


def test_gradient_finite_at_poles(rng):
    u = random_axisym(rng, 20)
    for t in (-math.pi / 2, math.pi / 2):
        u_r, u_t = eval_gradient(u, 1.0, t)
        assert math.isfinite(u_r) and math.isfinite(u_t)
        # axisymmetric fields have no latitude derivative at the poles
        assert abs(u_t) <= 1e-10 * np.sum(np.abs(u.c)) * 20


def test_gradient_consistent_with_spectral_square(rng):
    u = random_axisym(rng, 16)
    theta = np.linspace(-math.pi / 2, math.pi / 2, 65)
    spectral = synth_axisym(grad_square_axisym(u, u), theta)
    np.testing.assert_allclose(intensity(u, 1.0, theta) ** 2, spectral, atol=1e-10 * np.max(np.abs(spectral)))


def test_radius_below_one_rejected():
    with pytest.raises(ValueError):
        eval_potential(dipole_coeffs(), 0.9, 0.0)
    with pytest.raises(ValueError):
        eval_gradient(dipole_coeffs(), np.array([1.0, 0.5]), 0.0)


def test_harmonicity_of_dipole():
    assert harmonicity_check(dipole_coeffs(), _grid()) <= 1e-6


def test_harmonicity_of_random_solutions(rng):
    for _ in range(3):
        v = solve_oblique_axisym(random_axisym(rng, 16), float(rng.standard_normal()), 16).v
        assert harmonicity_check(v, _grid()) <= 1e-5


def test_harmonicity_detects_wrong_radial_exponent(rng):
    v = solve_oblique_axisym(random_axisym(rng, 16), 1.0, 16).v

    def wrong(u, r, t):
        return eval_potential(u, r, t) * np.asarray(r)

    assert harmonicity_check(v, _grid(), evaluate=wrong) >= 1e-2


def test_decay_bound(rng):
    u = random_axisym(rng, 16)
    C = decay_bound(u)
    theta = np.linspace(-math.pi / 2, math.pi / 2, 41)
    for r in (1.0, 10.0, 100.0, 1000.0, 1e6):
        assert np.max(np.abs(eval_potential(u, r, theta))) <= C / r
    assert C <= hs_norm(u, 1.0) * math.sqrt(u.L + 1)


def test_general_evaluation_reduces_to_axisym(rng):
    u = random_axisym(rng, 10)
    g = SphCoeffs.from_axisym(u)
    r, t = np.array([1.0, 1.4, 2.5]), np.array([0.2, -1.1, 1.5])
    np.testing.assert_allclose(eval_potential_general(g, r, t, 0.7).real, eval_potential(u, r, t), atol=1e-14)
    gr, gt = eval_gradient_general(g, r, t, 0.7)
    ar, at = eval_gradient(u, r, t)
    np.testing.assert_allclose(gr.real, ar, atol=1e-13)
    np.testing.assert_allclose(gt.real, at, atol=1e-13)


def test_general_gradient_matches_differences(rng):
    u = random_general(rng, 6)
    r, t, p, h = 1.3, 0.4, 1.1, 1e-5
    gr, gt = eval_gradient_general(u, r, t, p)
    fr = (eval_potential_general(u, r + h, t, p) - eval_potential_general(u, r - h, t, p)) / (2 * h)
    ft = (eval_potential_general(u, r, t + h, p) - eval_potential_general(u, r, t - h, p)) / (2 * h * r)
    assert abs(gr - fr) <= 1e-8
    assert abs(gt - ft) <= 1e-8


def test_field_csv(tmp_path):
    path = tmp_path / "field.csv"
    write_field_csv(path, dipole_coeffs(), [1.0, 2.0], [math.pi / 2, 0.0])
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "theta", "u", "u_r", "u_theta", "intensity"]
    first = [float(x) for x in rows[1]]
    assert first[2] == pytest.approx(1.0, abs=1e-15)
    assert first[5] == pytest.approx(2.0, abs=1e-14)
    assert len(rows) == 3
