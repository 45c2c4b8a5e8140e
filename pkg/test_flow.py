"""
Tests for the closed-form flow: rates, decoupling, evolution and special solutions.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from numpy.polynomial import legendre as npleg
from scipy.integrate import solve_ivp

from basis import (
    AstigmatismCoefficients,
    CosPolynomial,
    astigmatism_operator,
    psi_from_r,
    s_from_r,
    trig_mode,
)
from flow import (
    FlowError,
    FlowParams,
    evolve_s,
    evolve_support,
    hopf_sphere,
    initial_from_tilde,
    mode_rates,
    soliton_state,
    solve_flow,
    tilde_from_initial,
    translation_soliton_state,
)
from verification import verify_solitons

THETA = np.linspace(0.0, np.pi, 101)


def two_mode(n):
    return solve_flow(FlowParams(n, 10), AstigmatismCoefficients.from_trig([1, 2], [1, 3], n), pole_offset=1)


# --- parameters and rates ---

def test_flow_params_validation():
    with pytest.raises(FlowError):
        FlowParams(-1, 10)
    with pytest.raises(FlowError):
        FlowParams(0, 0)
    assert FlowParams(2, "5/2").lam == Fraction(4, 3)


def test_mode_rates_n1():
    rates = mode_rates(1)
    assert rates.mu == (Fraction(1, 2),)
    assert rates.mu_half == (Fraction(1, 2),)
    assert rates.omega(1) == 0
    assert rates.omega(2) == 1


def test_omega_formula():
    assert mode_rates(0).omega(1) == 1
    assert mode_rates(0).omega(3) == 6
    assert mode_rates(2).omega(4) == Fraction(20 - 6, 6)
    with pytest.raises(FlowError):
        mode_rates(2).omega(1)


def test_decoupling_roundtrip():
    coeffs = AstigmatismCoefficients(3, trig_a=(1, -2, 5), trig_b=(Fraction(1, 3), 4, -1))
    a, b = initial_from_tilde(tilde_from_initial(coeffs))
    assert a == coeffs.trig_a
    assert b == coeffs.trig_b


# --- closed forms ---

@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_two_mode_closed_form_n0(t):
    sol = two_mode(0)
    x = np.cos(THETA)
    series = [Fraction(7, 3), Fraction(11, 5) * math.exp(-t), Fraction(-4, 3) * math.exp(-3 * t),
              Fraction(-6, 5) * math.exp(-6 * t)]
    expected = np.sin(THETA) ** 2 * npleg.legval(x, [float(c) for c in series])
    assert np.allclose(evolve_s(sol, t).evaluate(THETA), expected, rtol=0.0, atol=1e-12)


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_two_mode_closed_form_n1(t):
    sol = two_mode(1)
    x = np.cos(THETA)
    sin2 = np.sin(THETA) ** 2
    expected = (math.exp(t / 2) * (1 + x) * sin2 + 2 * sin2 ** 2 + 3 * math.exp(-t) * x * sin2 ** 2)
    assert np.allclose(evolve_s(sol, t).evaluate(THETA), expected, rtol=0.0, atol=1e-12)


def test_evolve_at_zero_is_exact():
    sol = two_mode(2)
    assert evolve_s(sol, 0) is sol.initial
    assert evolve_support(sol, 0) == sol.initial_support
    with pytest.raises(FlowError):
        evolve_s(sol, -1.0)


def test_initial_support_reproduces_data():
    sol = solve_flow(FlowParams(1, 10), AstigmatismCoefficients.from_trig([1, 2, 1], [1, 3, -2], 1),
                     pole_offset=Fraction(3, 2), axial_offset=2)
    r = sol.initial_support
    assert s_from_r(r) == sol.initial.to_cos_polynomial()
    assert psi_from_r(r).value_at_x(1) == 10 + Fraction(3, 2)
    assert sol.D1 == 2


def test_supplied_support_is_used():
    coeffs = AstigmatismCoefficients.from_trig([3], [], 0)
    reference = solve_flow(FlowParams(0, 10), coeffs, pole_offset=2)
    again = solve_flow(FlowParams(0, 10), coeffs, support=reference.initial_support)
    assert again.support_constants == reference.support_constants


def test_inconsistent_support_rejected():
    coeffs = AstigmatismCoefficients.from_trig([3], [], 0)
    with pytest.raises(FlowError):
        solve_flow(FlowParams(0, 10), coeffs, support=CosPolynomial.constant(10))


@pytest.mark.parametrize("n", [0, 1, 2])
def test_support_satisfies_flow_equation(n):
    sol = solve_flow(FlowParams(n, 10), AstigmatismCoefficients.from_trig([1, 2, -1, 3], [1, 3, 2], n),
                     pole_offset=1, axial_offset=1)
    evaluate = sol.grid_evaluator(THETA[1:-1])
    t, h = 0.7, 1e-3
    r_at = lambda time: evaluate(time)[0]
    dr_dt = (8 * (r_at(t + h) - r_at(t - h)) - (r_at(t + 2 * h) - r_at(t - 2 * h))) / (12 * h)
    _, psi, s = evaluate(t)
    speed = -(psi + float(sol.params.lam) * s - 10.0)
    assert np.allclose(dr_dt, speed, rtol=0.0, atol=1e-7)


def test_grid_evaluator_matches_state():
    sol = two_mode(0)
    r, psi, s = sol.grid_evaluator(THETA)(0.5)
    state = sol.state_at(0.5)
    assert np.allclose(r, state.r(THETA))
    assert np.allclose(psi, state.psi(THETA))
    assert np.allclose(s, state.s(THETA))


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_two_mode_matches_printed_n0_formula(t):
    a0, b0, a1, b1 = 1, 1, 2, 3
    x = np.cos(THETA)
    sin2 = np.sin(THETA) ** 2
    e1, e3, e6 = math.exp(-t), math.exp(-3 * t), math.exp(-6 * t)
    expected = ((a0 + 2 / 3 * a1 * (1 - e3) + (b0 * e1 + 2 / 5 * b1 * (e1 - e6)) * x) * sin2
                + (a1 * e3 + b1 * e6 * x) * sin2 ** 2)
    assert np.allclose(evolve_s(two_mode(0), t).evaluate(THETA), expected, rtol=0.0, atol=1e-12)


def _trig_block_matrix(n, cosine):
    """Action of the astigmatism operator on the trig modes, read back in the trig basis."""
    matrix = np.zeros((n, n))
    for l in range(n):
        image = AstigmatismCoefficients.from_cos_polynomial(
            astigmatism_operator(trig_mode(l, cosine), FlowParams(n, 10).lam), n)
        assert not image.legendre_c
        matrix[:, l] = [float(v) for v in (image.trig_b if cosine else image.trig_a)]
    return matrix


@pytest.mark.parametrize("n", [2, 3])
def test_trig_block_is_bidiagonal(n):
    rates = mode_rates(n)
    for cosine, diagonal in ((False, rates.mu), (True, rates.mu_half)):
        matrix = _trig_block_matrix(n, cosine)
        expected = np.diag([float(v) for v in diagonal])
        expected += np.diag([-float(rates.nu[l + 1]) for l in range(n - 1)], k=1)
        assert np.allclose(matrix, expected, rtol=0.0, atol=1e-14)


@pytest.mark.parametrize("n", [2, 3])
def test_closed_form_matches_ode_integration(n):
    a = [1, -2, Fraction(1, 2)][:n]
    b = [3, 1, -1][:n]
    sol = solve_flow(FlowParams(n, 10), AstigmatismCoefficients(n, trig_a=a, trig_b=b))
    times = np.linspace(0.0, 5.0, 26)
    for cosine, initial in ((False, a), (True, b)):
        matrix = _trig_block_matrix(n, cosine)
        result = solve_ivp(lambda _, y: matrix @ y, (0.0, 5.0), [float(v) for v in initial],
                           method="DOP853", t_eval=times, rtol=1e-13, atol=1e-14)
        assert result.success
        for t, numeric in zip(times, result.y.T):
            state = evolve_s(sol, float(t))
            closed = np.array([float(v) for v in (state.trig_b if cosine else state.trig_a)])
            assert np.allclose(closed, numeric, rtol=1e-10, atol=1e-10)


SINGLE_MODES = [
    {"trig_a": (1, 0)}, {"trig_a": (0, 1)}, {"trig_b": (1, 0)}, {"trig_b": (0, 1)},
    {"legendre_c": (1,)}, {"legendre_c": (0, 1)}, {"legendre_c": (0, 0, 1)},
]


@pytest.mark.parametrize("mode", SINGLE_MODES)
def test_single_mode_satisfies_astigmatism_equation(mode):
    n = 2
    sol = solve_flow(FlowParams(n, 10), AstigmatismCoefficients(n, **mode))
    rng = np.random.default_rng(7)
    theta = rng.uniform(0.05, np.pi - 0.05, 200)
    times = rng.uniform(0.0, 2.0, 200)
    residuals = []
    for th, t in zip(theta, times):
        rhs = astigmatism_operator(evolve_s(sol, t).to_cos_polynomial(), sol.params.lam)
        residuals.append(sol.s_time_derivative(t).evaluate(th) - rhs.evaluate(th))
    assert np.max(np.abs(residuals)) < 1e-9


# --- Hopf spheres and solitons ---

def test_polynomial_hopf_sphere():
    state = hopf_sphere(2, 10, 1)
    assert state.flags["real_analytic"]
    assert state.flags["convex"]
    assert state.psi_poly + state.s_poly.scale(2) == CosPolynomial.constant(10)
    assert state.s_poly == CosPolynomial((1,), 2)


def test_hopf_sphere_mu_three_halves_is_sin_fourth():
    state = hopf_sphere(Fraction(3, 2), 10, 2)
    assert state.s_poly == CosPolynomial((2,), 4)


def test_non_analytic_hopf_sphere():
    state = hopf_sphere(Fraction(5, 2), 10, 1)
    assert not state.flags["real_analytic"]
    assert state.flags["exponent"] == Fraction(4, 3)
    theta = np.linspace(0.1, 3.0, 9)
    assert np.allclose(state.psi(theta) + 2.5 * state.s(theta), 10.0)
    assert np.allclose(state.s(theta), np.sin(theta) ** (4 / 3), atol=1e-6)


def test_hopf_sphere_needs_mu_above_one():
    with pytest.raises(FlowError):
        hopf_sphere(1, 10, 1)


def test_translation_soliton_relaxes_pole():
    state = translation_soliton_state(2, 10, 12, 1, 1.0)
    assert float(state.psi(0.0)) == pytest.approx(10 + 2 * math.exp(-1.0))


@pytest.mark.parametrize("lam", [Fraction(3, 2), Fraction(3), Fraction(4)])
def test_soliton_astigmatism_scales(lam):
    t = 0.8
    state = soliton_state(lam, 10, 11, 1, t)
    theta = np.linspace(0.2, 2.9, 7)
    decay = math.exp(-t) if lam == 3 else math.exp(float(2 - lam) * t)
    assert np.allclose(state.s(theta), decay * np.sin(theta) ** 2, atol=1e-12)


def test_soliton_needs_lambda_above_one():
    with pytest.raises(FlowError):
        soliton_state(1, 10, 10, 1, 0.0)


def test_soliton_suite_checks_each_equation():
    cases = verify_solitons(lambdas=(Fraction(5, 2), Fraction(3)), points=50)
    names = [case.name for case in cases]
    for key in ("r", "psi", "s"):
        assert f"{key} equation residual (lambda=3)" in names
    assert all(case.passed for case in cases), [c.name for c in cases if not c.passed]
