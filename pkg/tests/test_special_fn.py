import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import lpmv
from sympy.physics.wigner import wigner_3j as sympy_3j

from backus_dipole.special_fn import (
    alpha_norm,
    assoc_legendre,
    assoc_legendre_dtheta,
    double_factorial,
    gaunt_w,
    legendre_at_zero,
    log_double_factorial,
    normalized_dtheta_table,
    normalized_legendre_table,
    normalized_zero_values,
    selection_rules_ok,
    wigner_3j,
    wigner_3j_exact,
    wigner_3j_logspace,
)


def test_double_factorial_small_values():
    assert double_factorial(-1) == 1
    assert double_factorial(0) == 1
    assert double_factorial(5) == 15
    assert double_factorial(6) == 48
    with pytest.raises(ValueError):
        double_factorial(-2)


@pytest.mark.parametrize("n", [0, 1, 7, 40, 333, 1000, 1001, 2500])
def test_log_double_factorial_matches_exact(n):
    exact = math.log(double_factorial(n)) if n > 1 else 0.0
    assert log_double_factorial(n) == pytest.approx(exact, rel=1e-14, abs=1e-14)


def test_legendre_seed_and_values():
    assert assoc_legendre(0, 0, 0.3) == 1.0
    assert assoc_legendre(1, 1, 0.6) == pytest.approx(-0.8, rel=1e-15)
    assert assoc_legendre(2, 0, 0.5) == pytest.approx(-0.125, rel=1e-15)


def test_legendre_matches_scipy_with_phase():
    # scipy's lpmv also carries the Condon-Shortley phase
    z = np.linspace(-1, 1, 41)
    for l in range(12):
        for m in range(l + 1):
            np.testing.assert_allclose(assoc_legendre(l, m, z), lpmv(m, l, z), rtol=1e-12, atol=1e-12)


def test_legendre_bounded_for_m0():
    z = np.linspace(-1, 1, 201)
    for l in range(60):
        assert np.max(np.abs(assoc_legendre(l, 0, z))) <= 1 + 1e-13


def test_legendre_rejects_bad_arguments():
    with pytest.raises(ValueError):
        assoc_legendre(2, 3, 0.1)
    with pytest.raises(ValueError):
        assoc_legendre(2, 1, 1.5)


@pytest.mark.parametrize("l,m", [(0, 0), (2, 0), (3, 1), (4, 2), (9, 3), (20, 0), (21, 1)])
def test_legendre_at_zero_closed_form(l, m):
    assert legendre_at_zero(l, m) == pytest.approx(float(assoc_legendre(l, m, 0.0)), rel=1e-13, abs=1e-15)


def test_legendre_at_zero_examples():
    assert legendre_at_zero(2, 0) == -0.5
    assert legendre_at_zero(3, 0) == 0.0
    assert legendre_at_zero(1, 1) == -1.0


def test_alpha_norm_examples_and_sign():
    assert alpha_norm(0, 0) == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-15)
    assert alpha_norm(1, 0) == pytest.approx(math.sqrt(3 / (4 * math.pi)), rel=1e-15)
    assert alpha_norm(1, 1) < 0
    assert alpha_norm(1, -1) > 0
    assert alpha_norm(2, 2) > 0
    assert abs(alpha_norm(5, 3)) == pytest.approx(abs(alpha_norm(5, -3)), rel=1e-15)


def test_normalized_table_matches_direct_product():
    z = np.linspace(-0.99, 0.99, 17)
    for m in (-3, 0, 2, 5):
        table = normalized_legendre_table(12, m, z)
        for l in range(abs(m), 13):
            np.testing.assert_allclose(table[l], alpha_norm(l, m) * assoc_legendre(l, abs(m), z), rtol=1e-12, atol=1e-14)
        assert not np.any(table[: abs(m)])


def test_normalized_table_high_order_is_finite():
    z = np.linspace(-1, 1, 11)
    table = normalized_legendre_table(300, 250, z)
    assert np.all(np.isfinite(table))


def test_normalized_zero_values_match_table():
    for m in (0, 1, -4, 7):
        np.testing.assert_allclose(
            normalized_zero_values(m, 30), normalized_legendre_table(30, m, np.array(0.0)), rtol=1e-12, atol=1e-15
        )


def test_dtheta_against_finite_differences():
    theta = np.linspace(-1.4, 1.4, 9)
    h = 1e-6
    for l, m in [(1, 0), (4, 0), (3, 1), (6, 2), (9, 4)]:
        fd = (assoc_legendre(l, m, np.sin(theta + h)) - assoc_legendre(l, m, np.sin(theta - h))) / (2 * h)
        np.testing.assert_allclose(assoc_legendre_dtheta(l, m, theta), fd, rtol=1e-7, atol=1e-7)


def test_dtheta_pole_limits():
    poles = np.array([-math.pi / 2, math.pi / 2])
    for l in range(1, 8):
        d0 = assoc_legendre_dtheta(l, 0, poles)
        np.testing.assert_allclose(d0, 0.0, atol=1e-12)
        near = np.array([-math.pi / 2 + 1e-7, math.pi / 2 - 1e-7])
        np.testing.assert_allclose(assoc_legendre_dtheta(l, 1, poles), assoc_legendre_dtheta(l, 1, near), rtol=1e-5)


def test_dtheta_table_matches_scalar_routine():
    theta = np.linspace(-math.pi / 2, math.pi / 2, 13)
    for m in (0, 1, -2, 3):
        table = normalized_dtheta_table(10, m, theta)
        for l in range(abs(m), 11):
            np.testing.assert_allclose(
                table[l], alpha_norm(l, m) * assoc_legendre_dtheta(l, abs(m), theta), rtol=1e-11, atol=1e-12
            )


def test_selection_rules():
    assert selection_rules_ok(1, 1, 2, 0, 0, 0)
    assert not selection_rules_ok(1, 1, 1, 0, 0, 0)  # odd sum with all m zero
    assert not selection_rules_ok(1, 1, 3, 0, 0, 0)
    assert not selection_rules_ok(1, 1, 1, 1, 1, -1)
    assert not selection_rules_ok(1, 1, 1, 2, -1, -1)


def test_wigner_examples():
    assert wigner_3j(1, 1, 0, 0, 0, 0) == pytest.approx(-1 / math.sqrt(3), rel=1e-15)
    assert wigner_3j(1, 1, 2, 0, 0, 0) == pytest.approx(math.sqrt(2 / 15), rel=1e-15)
    assert wigner_3j(2, 2, 2, 0, 0, 0) == pytest.approx(-math.sqrt(2 / 35), rel=1e-15)
    assert wigner_3j(1, 1, 1, 0, 0, 0) == 0.0


@settings(max_examples=150, deadline=None)
@given(
    l1=st.integers(0, 12),
    l2=st.integers(0, 12),
    data=st.data(),
)
def test_wigner_matches_sympy(l1, l2, data):
    l3 = data.draw(st.integers(abs(l1 - l2), l1 + l2))
    m1 = data.draw(st.integers(-l1, l1))
    m2 = data.draw(st.integers(-l2, l2))
    m3 = -m1 - m2
    if abs(m3) > l3:
        return
    ref = float(sympy_3j(l1, l2, l3, m1, m2, m3))
    assert wigner_3j(l1, l2, l3, m1, m2, m3) == pytest.approx(ref, rel=1e-13, abs=1e-15)


def test_exact_and_logspace_paths_agree_up_to_degree_40():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(400):
        l1, l2 = (int(x) for x in rng.integers(0, 41, size=2))
        l3 = int(rng.integers(abs(l1 - l2), min(l1 + l2, 40) + 1))
        m1 = int(rng.integers(-l1, l1 + 1))
        m2 = int(rng.integers(-l2, l2 + 1))
        if abs(m1 + m2) > l3:
            continue
        a = wigner_3j_exact(l1, l2, l3, m1, m2, -m1 - m2)
        b = wigner_3j_logspace(l1, l2, l3, m1, m2, -m1 - m2)
        if a != 0.0:
            worst = max(worst, abs(a - b) / abs(a))
        else:
            assert b == 0.0
    assert worst <= 1e-12


def test_exact_path_is_rational_exact():
    # (2 2 2; 0 0 0)^2 = 2/35 exactly
    assert Fraction(wigner_3j_exact(2, 2, 2, 0, 0, 0) ** 2).limit_denominator(1000) == Fraction(2, 35)


def test_wigner_large_degree_finite_and_normalized():
    l1, l2, m1, m2 = 60, 55, 7, -20
    total = math.fsum(
        (2 * l + 1) * wigner_3j(l1, l2, l, m1, m2, -m1 - m2) ** 2 for l in range(max(5, 13), l1 + l2 + 1)
    )
    assert total == pytest.approx(1.0, abs=1e-11)


def test_wigner_symmetries():
    args = (5, 4, 3, 2, -1, -1)
    w = wigner_3j(*args)
    # odd column permutation picks up (-1)^(l1+l2+l3)
    assert wigner_3j(4, 5, 3, -1, 2, -1) == pytest.approx(-w * (-1) ** 12 * -1, rel=1e-14)
    assert wigner_3j(5, 4, 3, -2, 1, 1) == pytest.approx(w * (-1) ** 12, rel=1e-14)


def test_gaunt_against_quadrature():
    # integral of Y_l1^m1 Y_l2^m2 conj(Y_l^m) over the sphere
    from backus_dipole.spectral import gauss_nodes

    z, w = gauss_nodes(20)
    for l1, l2, l, m1, m2 in [(1, 1, 2, 1, 0), (2, 3, 3, -1, 2), (2, 2, 0, 1, -1), (3, 1, 4, 2, 1)]:
        m = m1 + m2
        y1 = normalized_legendre_table(l1, m1, z)[l1]
        y2 = normalized_legendre_table(l2, m2, z)[l2]
        y = normalized_legendre_table(l, m, z)[l]
        quad = 2 * math.pi * np.sum(w * y1 * y2 * y)
        want = math.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * l + 1)) * gaunt_w(l1, l2, l, m1, m2, m)
        assert want == pytest.approx(quad, abs=1e-13)
