"""
Finite-difference oracle for the astigmatism equation.

ds/dt = ((lam-1)/2)(s'' + cot s') - lam cot s' + (1 + cos^2)/sin^2 s,  s(0) = s(pi) = 0.

The solver marches F = s / sin^2 on theta_i = i pi / N with Crank-Nicolson,

    dF/dt = D sin^-c (sin^c F')' + (2 - lam) F,   D = (lam-1)/2,   c = (3 lam - 5)/(lam - 1),

written in flux form so the off-diagonals stay positive and s keeps its sin^2 factor at the poles.
Independent of the closed forms; used to validate them.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_banded

from basis import legendre_assoc
from config import ORACLE_CONFIG

logger = logging.getLogger(__name__)

InitialData = Union[np.ndarray, Sequence[float], Callable[[np.ndarray], np.ndarray]]


class OracleError(ValueError):
    """Invalid grid or equation parameters."""


class OracleInstabilityError(OracleError):
    """The discrete solution grew faster than the stability guard allows."""


@dataclass(frozen=True)
class Grid:
    N: int = ORACLE_CONFIG["grid_nodes"]
    dt: float = ORACLE_CONFIG["dt"]

    def __post_init__(self):
        if self.N < ORACLE_CONFIG["min_nodes"]:
            raise OracleError(f"grid needs N >= {ORACLE_CONFIG['min_nodes']}, got {self.N}")
        if not self.dt > 0:
            raise OracleError(f"time step must be positive, got {self.dt}")

    @property
    def h(self) -> float:
        return math.pi / self.N

    @property
    def theta(self) -> np.ndarray:
        """All nodes including both poles."""
        return np.linspace(0.0, math.pi, self.N + 1)

    @property
    def interior(self) -> np.ndarray:
        return self.theta[1:-1]


@dataclass(frozen=True)
class ConvergenceReport:
    grid_sizes: List[int]
    errors: List[float]
    order: Optional[float]


def sample_initial(fn: Callable[[np.ndarray], np.ndarray], grid: Grid) -> np.ndarray:
    values = np.asarray(fn(grid.theta), dtype=float).copy()
    values[0] = 0.0
    values[-1] = 0.0
    return values


def _full_samples(initial: InitialData, grid: Grid) -> np.ndarray:
    if callable(initial):
        return sample_initial(initial, grid)
    values = np.asarray(initial, dtype=float)
    if values.size == grid.N - 1:
        values = np.concatenate([[0.0], values, [0.0]])
    elif values.size != grid.N + 1:
        raise OracleError(f"initial data has {values.size} samples; expected {grid.N + 1} or {grid.N - 1}")
    else:
        values = values.copy()
        values[0] = 0.0
        values[-1] = 0.0
    return values


def _operator_bands(lam: float, grid: Grid):
    """Lower, diagonal and upper coefficients of the F operator on all N+1 nodes.

    Interior rows use the flux form with weight sin^c evaluated at half nodes. A pole row
    carries diffusion 2 D (1+c) (F_1 - F_0) / h^2 when c > -1, and the reaction alone otherwise.
    """
    N, h = grid.N, grid.h
    diffusion = (lam - 1.0) / 2.0
    c = (3.0 * lam - 5.0) / (lam - 1.0)
    reaction = 2.0 - lam

    log_sin = np.log(np.sin(grid.interior))
    log_sin_half = np.log(np.sin((np.arange(N) + 0.5) * h))
    lower = np.zeros(N + 1)
    upper = np.zeros(N + 1)
    lower[1:-1] = diffusion / h ** 2 * np.exp(c * (log_sin_half[:-1] - log_sin))
    upper[1:-1] = diffusion / h ** 2 * np.exp(c * (log_sin_half[1:] - log_sin))

    if c > -1.0:
        pole = 2.0 * diffusion * (1.0 + c) / h ** 2
        upper[0] = pole
        lower[-1] = pole
    diag = reaction - lower - upper
    return lower, diag, upper


def _to_pole_regular(s: np.ndarray, sin2: np.ndarray) -> np.ndarray:
    F = np.empty_like(s)
    F[1:-1] = s[1:-1] / sin2[1:-1]
    F[0] = (4.0 * F[1] - F[2]) / 3.0
    F[-1] = (4.0 * F[-2] - F[-3]) / 3.0
    return F


def _from_pole_regular(F: np.ndarray, sin2: np.ndarray) -> np.ndarray:
    s = sin2 * F
    s[0] = 0.0
    s[-1] = 0.0
    return s


def fd_evolve_s(initial: InitialData, lam: float, T: float, grid: Optional[Grid] = None,
                stability_rate: Optional[float] = None) -> np.ndarray:
    """Crank-Nicolson integration to time T; returns samples of s on all N+1 nodes."""
    grid = grid or Grid()
    lam = float(lam)
    if lam <= 1.0:
        raise OracleError(f"the astigmatism equation is parabolic only for lambda > 1, got {lam}")
    if T < 0:
        raise OracleError(f"final time must be non-negative, got {T}")

    s = _full_samples(initial, grid)
    if T == 0:
        return s

    steps = max(1, int(round(T / grid.dt)))
    dt = T / steps
    sin2 = np.sin(grid.theta) ** 2
    F = _to_pole_regular(s, sin2)
    lower, diag, upper = _operator_bands(lam, grid)
    if lam < 1.5 and (F[0] != 0.0 or F[-1] != 0.0):
        logger.warning("lambda=%.4f: pole rows keep only the reaction term, "
                       "so nonzero pole values are not resolved to second order", lam)

    ab = np.zeros((3, grid.N + 1))
    ab[0, 1:] = -0.5 * dt * upper[:-1]
    ab[1, :] = 1.0 - 0.5 * dt * diag
    ab[2, :-1] = -0.5 * dt * lower[1:]

    initial_norm = max(float(np.max(np.abs(s))), np.finfo(float).tiny)
    safety = ORACLE_CONFIG["stability_safety_factor"]
    for step in range(1, steps + 1):
        applied = diag * F
        applied[1:] += lower[1:] * F[:-1]
        applied[:-1] += upper[:-1] * F[1:]
        F = solve_banded((1, 1), ab, F + 0.5 * dt * applied)
        s = _from_pole_regular(F, sin2)
        norm = float(np.max(np.abs(s)))
        if not np.isfinite(norm):
            raise OracleInstabilityError(f"non-finite values at step {step}")
        if stability_rate is not None and norm > safety * initial_norm * math.exp(stability_rate * step * dt):
            raise OracleInstabilityError(
                f"sup-norm {norm:.3e} at t={step * dt:.4f} exceeds the growth guard "
                f"{safety} x e^({stability_rate} t)")
    logger.debug("fd_evolve_s: N=%d, %d steps of %.2e", grid.N, steps, dt)
    return s


def fd_convergence_order(initial: Callable[[np.ndarray], np.ndarray], exact: Callable[[np.ndarray], np.ndarray],
                         lam: float, T: float, grid_sizes: Optional[Sequence[int]] = None,
                         dt_scale: Optional[float] = None) -> ConvergenceReport:
    """Observed order of the sup-norm error against the closed form, with dt proportional to 1/N."""
    sizes = list(grid_sizes or ORACLE_CONFIG["convergence_grids"])
    if len(sizes) < 3:
        raise OracleError("convergence study needs at least three grids")
    scale = dt_scale if dt_scale is not None else ORACLE_CONFIG["dt"] * ORACLE_CONFIG["grid_nodes"]

    errors = []
    for N in sizes:
        grid = Grid(N, scale / N)
        numeric = fd_evolve_s(initial, lam, T, grid)
        errors.append(float(np.max(np.abs(numeric - np.asarray(exact(grid.theta), dtype=float)))))

    if max(errors) < ORACLE_CONFIG["roundoff_floor"]:
        return ConvergenceReport(sizes, errors, None)
    slope, _ = np.polyfit(np.log(sizes), np.log(errors), 1)
    return ConvergenceReport(sizes, errors, float(-slope))


def legpoly_operator_check(n: int, l: int, grid: Optional[Grid] = None) -> float:
    """Least-squares eigenvalue of the discrete Legendre mode operator on P^n_l(cos theta).

    The operator is (1/(2(n+1))) [d^2 + cot d + n(n+1) - n^2 / sin^2].
    """
    if l < n:
        raise OracleError(f"need l >= n, got n={n}, l={l}")
    grid = grid or Grid()
    theta = grid.theta
    h = grid.h
    u = legendre_assoc(l, n, np.cos(theta))
    inner = theta[1:-1]
    d1 = (u[2:] - u[:-2]) / (2.0 * h)
    d2 = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h ** 2
    cot = np.cos(inner) / np.sin(inner)
    applied = (d2 + cot * d1 + (n * (n + 1) - n * n / np.sin(inner) ** 2) * u[1:-1]) / (2.0 * (n + 1))
    values = u[1:-1]
    return float(values @ applied / (values @ values))
