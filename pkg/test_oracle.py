"""
Tests for the Crank-Nicolson oracle against the closed forms.
"""

import numpy as np
import pytest

from basis import AstigmatismCoefficients
from config import ORACLE_CONFIG
from flow import FlowParams, evolve_s, solve_flow
from oracle import (
    Grid,
    OracleError,
    OracleInstabilityError,
    fd_convergence_order,
    fd_evolve_s,
    legpoly_operator_check,
)


def two_mode(n):
    coeffs = AstigmatismCoefficients.from_trig([1, 2], [1, 3], n)
    return coeffs, solve_flow(FlowParams(n, 10), coeffs)


def test_grid_validation():
    with pytest.raises(OracleError):
        Grid(8)
    with pytest.raises(OracleError):
        Grid(64, 0.0)
    grid = Grid(64, 1e-2)
    assert grid.theta.size == 65
    assert grid.interior.size == 63


def test_parabolic_range_enforced():
    with pytest.raises(OracleError):
        fd_evolve_s(np.sin, 1.0, 1.0, Grid(32))


def test_zero_time_returns_initial_samples():
    grid = Grid(32)
    values = fd_evolve_s(lambda theta: np.sin(theta) ** 2, 2.0, 0.0, grid)
    assert np.allclose(values, np.sin(grid.theta) ** 2, atol=1e-15)


def test_wrong_sample_count_rejected():
    with pytest.raises(OracleError):
        fd_evolve_s(np.zeros(10), 2.0, 1.0, Grid(32))


@pytest.mark.parametrize("n,l", [(0, 2), (1, 3), (2, 4)])
def test_legendre_mode_eigenvalue(n, l):
    omega = (l * (l + 1) - n * (n + 1)) / (2 * (n + 1))
    assert legpoly_operator_check(n, l, Grid(512)) == pytest.approx(-omega, rel=1e-3)


def test_legendre_check_needs_l_at_least_n():
    with pytest.raises(OracleError):
        legpoly_operator_check(3, 2)


@pytest.mark.parametrize("n", [0, 1])
def test_oracle_agrees_with_closed_form(n):
    coeffs, sol = two_mode(n)
    grid = Grid(ORACLE_CONFIG["grid_nodes"], ORACLE_CONFIG["dt"])
    numeric = fd_evolve_s(coeffs.evaluate, sol.params.lam, 1.0, grid)
    exact = evolve_s(sol, 1.0).evaluate(grid.theta)
    assert np.max(np.abs(numeric - exact)) < ORACLE_CONFIG["oracle_tolerance"]


def test_convergence_order_is_second():
    coeffs, sol = two_mode(0)
    report = fd_convergence_order(coeffs.evaluate, evolve_s(sol, 1.0).evaluate, sol.params.lam, 1.0)
    low, high = ORACLE_CONFIG["order_window"]
    assert report.grid_sizes == ORACLE_CONFIG["convergence_grids"]
    assert low <= report.order <= high
    assert report.errors[0] > report.errors[-1]


def test_stability_guard_trips_on_growth():
    coeffs = AstigmatismCoefficients.from_trig([2, 1], [5, -1], 1)
    with pytest.raises(OracleInstabilityError):
        fd_evolve_s(coeffs.evaluate, 1.5, 10.0, Grid(64, 1e-2), stability_rate=0.0)


def test_stability_guard_quiet_for_decay():
    coeffs = AstigmatismCoefficients.from_trig([1, 2], [1, 3], 0)
    values = fd_evolve_s(coeffs.evaluate, 2.0, 2.0, Grid(64, 1e-2), stability_rate=1.0)
    assert np.all(np.isfinite(values))


def test_oracle_is_linear_in_initial_data():
    grid = Grid(64, 1e-2)
    first = AstigmatismCoefficients.from_trig([1, 2], [1, 3], 0).evaluate
    second = AstigmatismCoefficients.from_trig([0, -1], [2, 0], 0).evaluate
    combined = fd_evolve_s(lambda theta: first(theta) + 2.0 * second(theta), 2.0, 0.5, grid)
    separate = fd_evolve_s(first, 2.0, 0.5, grid) + 2.0 * fd_evolve_s(second, 2.0, 0.5, grid)
    assert np.max(np.abs(combined - separate)) < 1e-12 * np.max(np.abs(separate))


@pytest.mark.parametrize("n", [0, 1])
def test_poles_stay_umbilic(n):
    coeffs, sol = two_mode(n)
    grid = Grid(128, 1e-2)
    values = fd_evolve_s(coeffs.evaluate, sol.params.lam, 1.0, grid)
    assert values[0] == 0.0
    assert values[-1] == 0.0
    # s / sin^2 near each pole tends to the closed-form pole value
    inner = grid.interior
    ratio = values[1:-1] / np.sin(inner) ** 2
    exact = evolve_s(sol, 1.0).evaluate(inner) / np.sin(inner) ** 2
    assert ratio[0] == pytest.approx(exact[0], abs=2e-2)
    assert ratio[-1] == pytest.approx(exact[-1], abs=2e-2)
