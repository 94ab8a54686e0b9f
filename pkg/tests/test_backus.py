import math

import numpy as np
import pytest

from backus_dipole.backus import (
    BackusConfig,
    BackusConvergenceError,
    InputError,
    NonPositiveIntensityError,
    apply_T,
    dipole_intensity,
    dipole_trace,
    grad_dipole_sq_coeffs,
    intensity_on_surface,
    psi_step,
    solve_backus,
)
from backus_dipole.oblique import solve_oblique_axisym
from backus_dipole.spectral import (
    AxisymCoeffs,
    analyze_axisym,
    gauss_nodes,
    grad_square_axisym,
    hs_norm,
    synth_axisym,
)
from backus_dipole.field import intensity

from conftest import random_axisym


def perturbed_intensity(eps):
    return lambda th: np.sqrt(1 + 3 * np.sin(th) ** 2 + eps * np.cos(th) ** 2)


def test_dipole_trace_examples():
    d = dipole_trace()
    assert d.c[1] == pytest.approx(2.0466534, abs=1e-7)
    assert synth_axisym(d, math.pi / 2) == pytest.approx(1.0, abs=1e-15)
    assert synth_axisym(d, 0.0) == pytest.approx(0.0, abs=1e-16)


def test_grad_dipole_sq_examples():
    g = grad_dipole_sq_coeffs()
    assert g.c[0] == pytest.approx(7.0898154, abs=1e-7)
    assert g.c[2] == pytest.approx(3.1706618, abs=1e-7)
    assert synth_axisym(g, math.pi / 2) == pytest.approx(4.0, abs=1e-14)
    assert synth_axisym(g, -math.pi / 2) == pytest.approx(4.0, abs=1e-14)
    assert synth_axisym(g, 0.0) == pytest.approx(1.0, abs=1e-14)
    d = dipole_trace()
    np.testing.assert_allclose(grad_square_axisym(d, d).truncate(2).c, g.c, atol=1e-12)


def test_apply_T_zero():
    assert not np.any(apply_T(AxisymCoeffs.zeros(16), 0.0, 16).c)


def test_apply_T_matches_quadrature():
    L = 32
    t = apply_T(AxisymCoeffs.zeros(L), 1.0, L)
    v = solve_oblique_axisym(AxisymCoeffs.zeros(L), 1.0, L).v
    theta = np.arcsin(gauss_nodes(256)[0])
    want = analyze_axisym(intensity(v, 1.0, theta) ** 2, L)
    np.testing.assert_allclose(t.c, want.c, atol=1e-9)


def test_apply_T_quadratic_homogeneity(rng):
    f = random_axisym(rng, 20, decay=1.0)
    one = apply_T(f, 0.3, 24)
    two = apply_T(2 * f, 0.6, 24)
    np.testing.assert_allclose(two.c, 4 * one.c, atol=1e-12 * np.max(np.abs(two.c)))
    third = apply_T(-0.5 * f, -0.15, 24)
    np.testing.assert_allclose(third.c, 0.25 * one.c, atol=1e-12 * np.max(np.abs(one.c)))


def test_apply_T_reports_tail():
    _, tail = apply_T(AxisymCoeffs.zeros(16), 1.0, 16, with_tail=True)
    assert tail > 0


def test_psi_step_examples():
    L = 16
    g_sq = grad_dipole_sq_coeffs(L).truncate(L)
    assert not np.any(psi_step(AxisymCoeffs.zeros(L), g_sq, 0.0, L).c)
    bumped = AxisymCoeffs(g_sq.c + np.eye(L + 1)[0] * 0.02)
    out = psi_step(AxisymCoeffs.zeros(L), bumped, 0.0, L)
    assert out.c[0] == pytest.approx(0.01, abs=1e-15)
    assert not np.any(out.c[1:])


def test_config_validation():
    for kwargs in ({"s": 1.0}, {"L": 1}, {"tol": 0}, {"max_iter": 0}, {"h0": math.inf}):
        with pytest.raises(ValueError):
            BackusConfig(**kwargs)


def test_trivial_fixed_point():
    res = solve_backus(dipole_intensity, BackusConfig(L=32))
    assert res.iterations == 1
    assert not np.any(res.f_star.c)
    assert hs_norm(res.u_surface - dipole_trace(32), 2.5) <= 1e-14


def test_trivial_fixed_point_from_samples():
    z, _ = gauss_nodes(65)
    res = solve_backus(dipole_intensity(np.arcsin(z)), BackusConfig(L=32))
    assert res.iterations == 1
    assert hs_norm(res.u_surface - dipole_trace(32), 2.5) <= 1e-14


@pytest.fixture(scope="module")
def perturbed_run():
    return solve_backus(perturbed_intensity(0.01), BackusConfig(L=64, h0=0.0))


def test_perturbed_run_converges(perturbed_run):
    res = perturbed_run
    assert res.iterations <= 50
    assert res.trace[-1] < 1e-12
    assert res.residual_intensity_sup <= 1e-6
    assert res.fixed_point_residual <= 1e-12
    np.testing.assert_array_equal(res.u_surface.c, (dipole_trace(64) + res.v_star).c)


def test_trace_contracts_geometrically(perturbed_run):
    tr = np.array(perturbed_run.trace)
    tail = tr[2:]
    tail = tail[tail > 1e-15]
    assert np.all(tail[1:] / tail[:-1] <= 0.9)


def test_intensity_matches_input(perturbed_run):
    theta = np.linspace(-math.pi / 2, math.pi / 2, 513)
    got = intensity_on_surface(perturbed_run.u_surface, theta)
    assert np.max(np.abs(got - perturbed_intensity(0.01)(theta))) <= 1e-6


def test_equator_value():
    res = solve_backus(perturbed_intensity(0.01), BackusConfig(L=48, h0=0.02))
    assert synth_axisym(res.u_surface, 0.0) == pytest.approx(0.02, abs=1e-10)


def test_residual_drops_when_degree_doubles():
    g = lambda th: 1.3 + 0.1 * np.sin(th) + 3 * np.sin(th) ** 2 / (2 + np.sin(th) ** 2)  # noqa: E731
    sups = [solve_backus(lambda th: np.sqrt(dipole_intensity(th) ** 2 + 0.01 * g(th)), BackusConfig(L=L)).residual_intensity_sup for L in (8, 16)]
    assert sups[1] < sups[0]


def test_linear_response():
    big = solve_backus(perturbed_intensity(0.01), BackusConfig(L=48, h0=0.01))
    small = solve_backus(perturbed_intensity(0.005), BackusConfig(L=48, h0=0.005))
    d = dipole_trace(48)
    ratio = hs_norm(small.u_surface - d, 2.5) / hs_norm(big.u_surface - d, 2.5)
    assert 0.4 <= ratio <= 0.6


def test_delta_recorded(perturbed_run):
    theta = np.arcsin(gauss_nodes(400)[0])
    diff = perturbed_intensity(0.01)(theta) - dipole_intensity(theta)
    assert perturbed_run.delta == pytest.approx(hs_norm(analyze_axisym(diff, 64), 1.5), rel=1e-10)


def test_nonconvergence_carries_trace():
    with pytest.raises(BackusConvergenceError) as info:
        solve_backus(perturbed_intensity(0.01), BackusConfig(L=32, max_iter=2))
    assert len(info.value.trace) == 2


def test_large_data_fails_to_converge():
    with pytest.raises(BackusConvergenceError) as info:
        solve_backus(lambda th: 3 + 2 * np.sin(th) ** 3 + np.cos(th) ** 8, BackusConfig(L=32, max_iter=100))
    assert info.value.trace


def test_nonpositive_intensity_rejected():
    with pytest.raises(NonPositiveIntensityError):
        solve_backus(lambda th: np.cos(th) - 0.5, BackusConfig(L=16))
    z, _ = gauss_nodes(17)
    samples = dipole_intensity(np.arcsin(z))
    samples[3] = -1.0
    with pytest.raises(NonPositiveIntensityError):
        solve_backus(samples, BackusConfig(L=16))


def test_bad_sample_inputs():
    with pytest.raises(InputError):
        solve_backus(np.ones(5), BackusConfig(L=16))
    z, _ = gauss_nodes(17)
    samples = dipole_intensity(np.arcsin(z))
    samples[0] = math.nan
    with pytest.raises(InputError):
        solve_backus(samples, BackusConfig(L=16))


def test_intensity_on_surface_examples():
    theta = np.linspace(-math.pi / 2, math.pi / 2, 33)
    np.testing.assert_allclose(intensity_on_surface(dipole_trace(), theta), dipole_intensity(theta), atol=1e-13)
    assert not np.any(intensity_on_surface(AxisymCoeffs.zeros(4), theta))


def test_result_json_roundtrip(perturbed_run):
    import json

    obj = json.loads(json.dumps(perturbed_run.to_json()))
    assert obj["iterations"] == perturbed_run.iterations
    assert obj["config"]["L"] == 64
    assert np.array_equal(obj["u_surface"], perturbed_run.u_surface.c)
