"""
Tests for exact polynomial algebra, Legendre functions, decompositions and quadratures.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from basis import (
    AstigmatismCoefficients,
    BasisError,
    CosPolynomial,
    DomainError,
    IllConditionedFitError,
    astigmatism_operator,
    codazzi_mainardi_residual,
    cos_mode_dpsi_closed_form,
    decompose_samples,
    gauss_theta_nodes,
    legendre_assoc,
    legendre_mode,
    legendre_mode_quadrature,
    legendre_to_trig,
    psi_from_r,
    quadrature_r_from_s,
    s_from_r,
    sin_mode_psi_closed_form,
    trig_mode,
    trig_mode_quadrature,
    trig_to_legendre,
    verify_lemma_identities,
)
from flow import mode_rates


# --- CosPolynomial ---

def test_sin_squared_is_canonicalised():
    assert CosPolynomial((1,), 2) == CosPolynomial((1, 0, -1))
    assert CosPolynomial((1,), 3).sin_prefactor_power == 1


def test_zero_polynomial_has_no_sin_prefactor():
    zero = CosPolynomial((0, 0), 1)
    assert zero.is_zero
    assert zero.sin_prefactor_power == 0


def test_d_theta_of_cos_is_minus_sin():
    assert CosPolynomial.cos().d_theta() == CosPolynomial((-1,), 1)


def test_adding_mixed_parity_raises():
    with pytest.raises(BasisError):
        CosPolynomial.cos() + CosPolynomial((1,), 1)


def test_divide_by_sin_requires_vanishing_at_poles():
    with pytest.raises(BasisError):
        CosPolynomial.constant(1).divide_by_sin()
    assert trig_mode(0).divide_by_sin_squared() == CosPolynomial.constant(1)


def test_evaluate_matches_numpy():
    theta = np.linspace(0.0, np.pi, 7)
    poly = CosPolynomial((1, 2), 1)
    assert np.allclose(poly.evaluate(theta), np.sin(theta) * (1 + 2 * np.cos(theta)))


# --- Legendre functions ---

@pytest.mark.parametrize("l,m,expected", [
    (2, 0, lambda x: (3 * x * x - 1) / 2),
    (1, 1, lambda x: -np.sqrt(1 - x * x)),
    (2, 1, lambda x: -3 * x * np.sqrt(1 - x * x)),
    (2, 2, lambda x: 3 * (1 - x * x)),
])
def test_legendre_assoc_condon_shortley(l, m, expected):
    x = np.linspace(-1.0, 1.0, 11)
    assert np.allclose(legendre_assoc(l, m, x), expected(x))


@pytest.mark.parametrize("l,m,x", [(1, 2, 0.0), (2, -1, 0.0), (2, 1, 1.5)])
def test_legendre_assoc_domain(l, m, x):
    with pytest.raises(DomainError):
        legendre_assoc(l, m, x)


# --- decompositions ---

def test_sin_fourth_has_stationary_component_for_n0():
    coeffs = AstigmatismCoefficients.from_trig([0, 1], [], 0)
    assert coeffs.legendre_c == (Fraction(2, 3), Fraction(0), Fraction(-2, 3))


def test_two_mode_legendre_coefficients_n0():
    coeffs = AstigmatismCoefficients.from_trig([1, 2], [1, 3], 0)
    assert coeffs.legendre_c == (Fraction(7, 3), Fraction(11, 5), Fraction(-4, 3), Fraction(-6, 5))


def test_two_mode_split_n1():
    coeffs = AstigmatismCoefficients.from_trig([1, 2], [1, 3], 1)
    assert coeffs.trig_a == (Fraction(1),)
    assert coeffs.trig_b == (Fraction(1),)
    assert coeffs.legendre_c == (Fraction(-2), Fraction(-1))


def test_basis_change_roundtrip():
    tail_a = [Fraction(3), Fraction(-1, 2), Fraction(4)]
    tail_b = [Fraction(1), Fraction(0), Fraction(2, 7)]
    c = trig_to_legendre(tail_a, tail_b, 2)
    a, b = legendre_to_trig(c, 2)
    assert a == tail_a
    assert b == tail_b


def test_rebased_preserves_astigmatism():
    coeffs = AstigmatismCoefficients.from_trig([1, 2, 5], [1, 3, -1], 0)
    assert coeffs.rebased(2).to_cos_polynomial() == coeffs.to_cos_polynomial()


def test_too_many_trig_entries_rejected():
    with pytest.raises(BasisError):
        AstigmatismCoefficients(1, trig_a=(1, 2))


# --- quadratures ---

def test_sin_squared_quadrature():
    assert trig_mode_quadrature(0) == CosPolynomial((0, 0, -1))
    assert psi_from_r(trig_mode_quadrature(0)) == CosPolynomial((-1, 0, 2))


def test_cos_sin_squared_quadrature():
    assert trig_mode_quadrature(0, cosine=True) == CosPolynomial((0, 0, 0, Fraction(-1, 3)))


@pytest.mark.parametrize("l", range(6))
@pytest.mark.parametrize("cosine", [False, True])
def test_trig_quadrature_recovers_s(l, cosine):
    r = trig_mode_quadrature(l, cosine)
    assert s_from_r(r) == trig_mode(l, cosine)
    assert codazzi_mainardi_residual(psi_from_r(r), s_from_r(r)).is_zero


@pytest.mark.parametrize("n,l", [(0, 2), (0, 5), (1, 3), (2, 6), (3, 7)])
def test_legendre_quadrature_recovers_s(n, l):
    assert s_from_r(legendre_mode_quadrature(n, l)) == legendre_mode(n, l)


def test_quadrature_of_mixed_coefficients():
    coeffs = AstigmatismCoefficients.from_trig([1, 2, 4], [1, 3, 0], 1)
    r = quadrature_r_from_s(coeffs, C1=2, C2=5)
    assert s_from_r(r) == coeffs.to_cos_polynomial()
    assert r.affine_part()[1] == 2


def test_quadrature_needs_vanishing_at_poles():
    with pytest.raises(BasisError):
        quadrature_r_from_s(CosPolynomial.constant(1))


@pytest.mark.parametrize("l", [1, 2, 3, 6])
def test_sin_mode_psi_closed_form(l):
    assert psi_from_r(trig_mode_quadrature(l)) == sin_mode_psi_closed_form(l)


@pytest.mark.parametrize("l", [0, 1, 4])
def test_cos_mode_dpsi_closed_form(l):
    assert psi_from_r(trig_mode_quadrature(l, cosine=True)).d_theta() == cos_mode_dpsi_closed_form(l)


@pytest.mark.parametrize("n,l", [(0, 0), (0, 1), (0, 3), (1, 1), (1, 2), (2, 4)])
def test_legendre_modes_are_eigenfunctions(n, l):
    lam = Fraction(n + 2, n + 1)
    s = legendre_mode(n, l)
    assert astigmatism_operator(s, lam) == s.scale(-mode_rates(n).omega(l))


# --- combinatorial identities ---

@pytest.mark.parametrize("l,m", [(0, 0), (0, 1), (3, 2), (5, 5), (7, 3), (12, 12)])
def test_lemma_identities_hold(l, m):
    first, second = verify_lemma_identities(l, m)
    assert first in (True, None)
    assert second in (True, None)


def test_lemma_identities_outside_domain():
    with pytest.raises(DomainError):
        verify_lemma_identities(0, 2)


# --- sampled input ---

def test_decompose_gauss_samples_exactly():
    theta = gauss_theta_nodes(16)
    values = np.sin(theta) ** 2 * (1 + np.cos(theta))
    coeffs, residual = decompose_samples(list(zip(theta, values)), 0)
    assert coeffs.legendre_c == (Fraction(1), Fraction(1))
    assert not coeffs.exact
    assert residual < 1e-12


def test_decompose_uniform_samples_least_squares():
    theta = np.linspace(0.0, np.pi, 101)
    values = 3 * np.sin(theta) ** 4
    coeffs, residual = decompose_samples(list(zip(theta, values)), 1)
    assert residual < 1e-9
    assert float(coeffs.legendre_c[0]) == pytest.approx(-3.0)


def test_decompose_rejects_rough_samples():
    theta = np.linspace(0.0, np.pi, 101)
    values = np.sin(theta) ** 2 * np.abs(np.cos(theta))
    with pytest.raises(IllConditionedFitError):
        decompose_samples(list(zip(theta, values)), 0, L_max=8)


def test_decompose_rejects_bad_angles():
    with pytest.raises(BasisError):
        decompose_samples([(-1.0, 0.0), (1.0, 0.5)], 0)
    with pytest.raises(BasisError):
        decompose_samples([(0.5, math.nan)], 0)
