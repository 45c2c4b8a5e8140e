"""
Surface-level queries on rotationally symmetric spheres.

RoC diagrams, umbilic slopes, order and degeneracy, fate classification,
profile curves, the Codazzi-Mainardi check and flow events (focal-set
crossings, umbilic circles and their pops at the poles).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as nppoly
from scipy.optimize import bisect

from basis import (
    AstigmatismCoefficients,
    BasisError,
    CosPolynomial,
    associated_legendre_factor,
    codazzi_mainardi_residual,
    psi_from_r,
    s_from_r,
)
from config import GEOMETRY_CONFIG
from flow import FlowParams, FlowSolution, solve_flow

logger = logging.getLogger(__name__)

ROUND_SLOPE = "round"
FLAT_CONTACT = "undefined (flat-order contact)"

Slope = Union[Fraction, float, str]


@dataclass(frozen=True, eq=False)
class SphereState:
    """(r, psi, s) of one sphere at time `time_tag`, polynomial- or sample-backed."""
    time_tag: float
    r_poly: Optional[CosPolynomial] = None
    psi_poly: Optional[CosPolynomial] = None
    s_poly: Optional[CosPolynomial] = None
    theta: Optional[np.ndarray] = None
    samples: Optional[Dict[str, np.ndarray]] = None
    flags: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_support(cls, r: CosPolynomial, t: float, flags: Optional[Dict[str, Any]] = None) -> "SphereState":
        return cls(float(t), r, psi_from_r(r), s_from_r(r), flags=dict(flags or {}))

    @classmethod
    def from_polynomials(cls, r: CosPolynomial, psi: CosPolynomial, s: CosPolynomial, t: float) -> "SphereState":
        return cls(float(t), r, psi, s)

    @classmethod
    def from_samples(cls, theta, r, psi, s, t: float, dr=None, dpsi=None, ds=None,
                     flags: Optional[Dict[str, Any]] = None) -> "SphereState":
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1 or theta.size < 3 or np.any(np.diff(theta) <= 0):
            raise ValueError("theta samples must be a strictly increasing 1-D grid of at least 3 points")
        samples = {"r": r, "psi": psi, "s": s}
        derivatives = {"dr": dr, "dpsi": dpsi, "ds": ds}
        for key, values in list(samples.items()):
            values = np.asarray(values, dtype=float)
            if values.shape != theta.shape:
                raise ValueError(f"{key} samples do not match the theta grid")
            samples[key] = values
            derivative = derivatives["d" + key]
            samples["d" + key] = (np.gradient(values, theta, edge_order=2) if derivative is None
                                  else np.asarray(derivative, dtype=float))
        return cls(float(t), theta=theta, samples=samples, flags=dict(flags or {}))

    @property
    def provenance(self) -> str:
        return "closed_form" if self.r_poly is not None else "samples"

    @property
    def is_polynomial(self) -> bool:
        return self.r_poly is not None

    def _sampled(self, key: str, theta):
        values = np.interp(np.asarray(theta, dtype=float), self.theta, self.samples[key])
        return float(values) if np.ndim(theta) == 0 else values

    def r(self, theta):
        return self.r_poly.evaluate(theta) if self.is_polynomial else self._sampled("r", theta)

    def psi(self, theta):
        return self.psi_poly.evaluate(theta) if self.is_polynomial else self._sampled("psi", theta)

    def s(self, theta):
        return self.s_poly.evaluate(theta) if self.is_polynomial else self._sampled("s", theta)

    @cached_property
    def _derivatives(self) -> Tuple[CosPolynomial, CosPolynomial, CosPolynomial]:
        return self.r_poly.d_theta(), self.psi_poly.d_theta(), self.s_poly.d_theta()

    def dr(self, theta):
        return self._derivatives[0].evaluate(theta) if self.is_polynomial else self._sampled("dr", theta)

    def dpsi(self, theta):
        return self._derivatives[1].evaluate(theta) if self.is_polynomial else self._sampled("dpsi", theta)

    def ds(self, theta):
        return self._derivatives[2].evaluate(theta) if self.is_polynomial else self._sampled("ds", theta)


@dataclass(frozen=True)
class RoCDiagram:
    """Ordered (psi, s) samples from the north pole to the south pole."""
    points: np.ndarray
    theta: np.ndarray

    @property
    def psi(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def s(self) -> np.ndarray:
        return self.points[:, 1]


@dataclass(frozen=True)
class UmbilicData:
    order: Optional[int]
    nondegenerate: bool
    slope_N: Slope
    slope_S: Slope


class Fate(Enum):
    CONVERGES_ROUND = "ConvergesRound"
    CONVERGES_HOPF = "ConvergesHopf"
    DIVERGES = "Diverges"


@dataclass(frozen=True)
class FateReport:
    verdict: Fate
    witness_mode: Optional[str]
    witness_rate: Optional[Fraction]
    limit: Optional[SphereState]
    lam: Fraction
    psi_inf: Fraction
    limit_amplitude: Fraction = Fraction(0)

    def describe(self) -> str:
        if self.verdict is Fate.DIVERGES:
            return f"Diverges, rate {self.witness_rate} (mode {self.witness_mode})"
        if self.verdict is Fate.CONVERGES_HOPF:
            return (f"ConvergesHopf, limit psi + {self.lam}s = {self.psi_inf} "
                    f"(s -> {self.limit_amplitude} sin^{2 * (self.lam.denominator - 1) + 2})")
        return f"ConvergesRound, radius {self.psi_inf}"


@dataclass(frozen=True)
class FlowEvent:
    kind: str
    time: float
    theta: Optional[float] = None
    detail: Dict[str, Any] = field(default_factory=dict)


def _theta_grid(samples: int, interior: bool = False) -> np.ndarray:
    theta = np.linspace(0.0, np.pi, samples)
    return theta[1:-1] if interior else theta


def _zero_threshold(values, exact: bool, tol: Optional[float] = None) -> float:
    if exact:
        return 0.0
    tol = GEOMETRY_CONFIG["zero_threshold"] if tol is None else tol
    scale = max((abs(float(v)) for v in values), default=0.0)
    return tol * scale


# --- RoC space ---

def roc_diagram(state: SphereState, samples: Optional[int] = None) -> RoCDiagram:
    theta = _theta_grid(samples or GEOMETRY_CONFIG["roc_samples"])
    psi = np.asarray(state.psi(theta), dtype=float)
    s = np.asarray(state.s(theta), dtype=float)
    s[0] = 0.0
    s[-1] = 0.0
    return RoCDiagram(np.column_stack([psi, s]), theta)


def roc_translate(diagram: RoCDiagram, shift: float) -> RoCDiagram:
    points = diagram.points.copy()
    points[:, 0] += shift
    return RoCDiagram(points, diagram.theta)


def roc_dilate(diagram: RoCDiagram, center: float, factor: float) -> RoCDiagram:
    points = diagram.points.copy()
    points[:, 0] = center + factor * (points[:, 0] - center)
    points[:, 1] *= factor
    return RoCDiagram(points, diagram.theta)


def parallel_shift(state: SphereState, distance: float) -> SphereState:
    """Parallel surface at `distance`: r, psi move by the distance and s is unchanged."""
    if state.is_polynomial:
        d = Fraction(distance)
        return SphereState(state.time_tag, state.r_poly + d, state.psi_poly + d, state.s_poly, flags=dict(state.flags))
    samples = dict(state.samples)
    samples["r"] = samples["r"] + distance
    samples["psi"] = samples["psi"] + distance
    return SphereState(state.time_tag, theta=state.theta, samples=samples, flags=dict(state.flags))


# --- umbilic slopes ---

def slope_at_poles(coeffs: AstigmatismCoefficients) -> Tuple[Slope, Slope]:
    """Exact slopes (mu_N, mu_S) at the poles.

    F = s / sin^2 is expanded about each pole in u = 1 -+ cos; a first nonzero
    coefficient at u^j gives the slope (j+2)/(j+1).
    """
    if coeffs.is_zero():
        return ROUND_SLOPE, ROUND_SLOPE
    reduced = CosPolynomial(coeffs.reduced_polynomial())
    slopes = []
    for pole in (1, -1):
        expansion = reduced.compose_shift(pole)
        threshold = _zero_threshold(expansion, coeffs.exact)
        order = next((j for j, c in enumerate(expansion) if abs(c) > threshold), None)
        slopes.append(FLAT_CONTACT if order is None else Fraction(order + 2, order + 1))
    return slopes[0], slopes[1]


def slope_from_samples(state: SphereState, step: Optional[float] = None) -> Tuple[float, float]:
    """-psi'/s' at each pole, Richardson-extrapolated from steps h and h/2."""
    h = GEOMETRY_CONFIG["richardson_step"] if step is None else step

    def ratio(theta: float) -> float:
        return -float(state.dpsi(theta)) / float(state.ds(theta))

    north = (4.0 * ratio(h / 2) - ratio(h)) / 3.0
    south = (4.0 * ratio(np.pi - h / 2) - ratio(np.pi - h)) / 3.0
    return north, south


def order_and_degeneracy(coeffs: AstigmatismCoefficients, tol: Optional[float] = None) -> UmbilicData:
    a, b = coeffs.full_trig()
    threshold = _zero_threshold(a + b, coeffs.exact, tol)
    order = next((l for l in range(len(a)) if abs(a[l]) > threshold or abs(b[l]) > threshold), None)
    if order is None:
        return UmbilicData(None, False, ROUND_SLOPE, ROUND_SLOPE)
    gap = a[order] ** 2 - b[order] ** 2
    nondegenerate = gap != 0 if coeffs.exact else abs(gap) > threshold * max(abs(a[order]), abs(b[order]))
    slope_n, slope_s = slope_at_poles(coeffs)
    return UmbilicData(order, nondegenerate, slope_n, slope_s)


def classify_by_slope(mu: Fraction, lam: Fraction) -> Fate:
    """Fate of a nondegenerate sphere from its umbilic slope mu."""
    if lam > mu:
        return Fate.CONVERGES_ROUND
    if lam == mu:
        return Fate.CONVERGES_HOPF
    return Fate.DIVERGES


# --- fate ---

def classify_fate(coeffs: AstigmatismCoefficients, params: FlowParams) -> FateReport:
    """Verdict from the modes actually present.

    Any trig mode l < n grows; otherwise the stationary Legendre mode l = n
    decides between a non-round Hopf limit and the round sphere.
    """
    coeffs = coeffs.rebased(params.n)
    sol = solve_flow(params, coeffs)
    threshold = _zero_threshold(coeffs.trig_a + coeffs.trig_b + coeffs.legendre_c, coeffs.exact)
    active = [c for c in sol.components if c.shape.max_abs() > threshold]
    witness = max(active, key=lambda c: c.rate, default=None)
    witness_mode = witness.label if witness else None
    witness_rate = witness.rate if witness else None

    diverging = any(abs(v) > threshold for v in coeffs.trig_a + coeffs.trig_b)
    stationary = next((c for c in active if c.rate == 0 and c.label == f"c{params.n}"), None)
    if diverging:
        return FateReport(Fate.DIVERGES, witness_mode, witness_rate, None, params.lam, params.psi_inf)

    if stationary is not None:
        r_limit = stationary.support + params.psi_inf
        amplitude = coeffs.legendre_c[0] * associated_legendre_factor(params.n, params.n)[0]
        limit = SphereState.from_support(r_limit, float("inf"))
        return FateReport(Fate.CONVERGES_HOPF, witness_mode, witness_rate, limit, params.lam, params.psi_inf,
                          amplitude)

    limit = SphereState.from_support(CosPolynomial.constant(params.psi_inf), float("inf"))
    return FateReport(Fate.CONVERGES_ROUND, witness_mode, witness_rate, limit, params.lam, params.psi_inf)


# --- Euclidean picture ---

def profile_curve(state: SphereState, samples: Optional[int] = None) -> np.ndarray:
    """Profile points x1 = r cos - sin r', x2 = r sin + cos r', north pole first."""
    theta = _theta_grid(samples or GEOMETRY_CONFIG["profile_samples"])
    r = np.asarray(state.r(theta), dtype=float)
    dr = np.asarray(state.dr(theta), dtype=float)
    x1 = r * np.cos(theta) - np.sin(theta) * dr
    x2 = r * np.sin(theta) + np.cos(theta) * dr
    return np.column_stack([x1, x2])


def cm_residual(state: SphereState, samples: Optional[int] = None) -> float:
    """sup over interior nodes of |d(psi + s)/dtheta + 2 cot(theta) s|."""
    theta = _theta_grid(samples or GEOMETRY_CONFIG["event_theta_samples"], interior=True)
    if state.is_polynomial:
        try:
            residual = codazzi_mainardi_residual(state.psi_poly, state.s_poly)
        except BasisError:
            residual = None
        if residual is not None:
            return 0.0 if residual.is_zero else float(np.max(np.abs(residual.evaluate(theta))))
    else:
        # sample nodes, no interpolation
        theta = state.theta[1:-1]
    values = state.dpsi(theta) + state.ds(theta) + 2.0 * np.cos(theta) / np.sin(theta) * state.s(theta)
    return float(np.max(np.abs(values)))


def is_convex(state: SphereState, samples: Optional[int] = None) -> bool:
    theta = _theta_grid(samples or GEOMETRY_CONFIG["event_theta_samples"])
    psi = np.asarray(state.psi(theta))
    s = np.asarray(state.s(theta))
    return bool(np.min(psi + s) > 0 and np.min(psi - s) > 0)


def interior_umbilics(coeffs: AstigmatismCoefficients) -> List[float]:
    """Angles of the umbilic circles: interior zeros of s / sin^2."""
    reduced = np.array([float(c) for c in coeffs.reduced_polynomial()])
    return _interior_roots(reduced)


def _interior_roots(reduced: np.ndarray) -> List[float]:
    reduced = np.trim_zeros(reduced, "b")
    if reduced.size < 2:
        return []
    roots = nppoly.polyroots(reduced)
    scale = np.max(np.abs(reduced))
    real = [float(z.real) for z in roots if abs(z.imag) <= 1e-9 * max(1.0, scale)]
    inside = sorted(x for x in real if -1.0 < x < 1.0)
    return sorted(float(np.arccos(x)) for x in inside)


def convexity_and_umbilic_events(sol: FlowSolution, t_range: Tuple[float, float],
                                 theta_samples: Optional[int] = None,
                                 time_steps: Optional[int] = None,
                                 tol: Optional[float] = None) -> List[FlowEvent]:
    """Focal-set crossings, umbilic-circle trajectories and umbilic pops over t_range."""
    t_start, t_end = float(t_range[0]), float(t_range[1])
    if t_end < t_start:
        raise ValueError("t_range must be increasing")
    theta = _theta_grid(theta_samples or GEOMETRY_CONFIG["event_theta_samples"])
    steps = time_steps or GEOMETRY_CONFIG["event_time_steps"]
    xtol = GEOMETRY_CONFIG["event_time_tolerance"] if tol is None else tol
    evaluate = sol.grid_evaluator(theta)
    events: List[FlowEvent] = []
    if t_end == t_start:
        return events

    def margin(t: float) -> float:
        _, psi, s = evaluate(t)
        return float(min(np.min(psi + s), np.min(psi - s)))

    times = np.linspace(t_start, t_end, steps + 1)
    margins = np.array([margin(t) for t in times])
    for i in range(steps):
        if (margins[i] > 0) != (margins[i + 1] > 0):
            t_cross = bisect(margin, times[i], times[i + 1], xtol=xtol)
            _, psi, s = evaluate(t_cross)
            lowest = np.minimum(psi + s, psi - s)
            events.append(FlowEvent("focal_crossing", float(t_cross), float(theta[int(np.argmin(lowest))]),
                                    {"convex_after": bool(margins[i + 1] > 0)}))

    # s / sin^2 at the poles, mode by mode
    rates = np.array([float(c.rate) for c in sol.components])
    reduced = [c.s_poly.divide_by_sin_squared() for c in sol.components]
    pole_values = {pole: np.array([float(q.value_at_x(pole)) for q in reduced]) for pole in (1, -1)}

    for pole, pole_theta in ((1, 0.0), (-1, float(np.pi))):
        values = pole_values[pole]
        if values.size == 0:
            continue

        def leading(t: float, values=values) -> float:
            return float(np.exp(rates * t) @ values)

        signs = np.array([leading(t) for t in times])
        for i in range(steps):
            if signs[i] != 0 and signs[i] * signs[i + 1] < 0:
                t_pop = bisect(leading, times[i], times[i + 1], xtol=xtol)
                events.append(FlowEvent("umbilic_pop", float(t_pop), pole_theta,
                                        {"pole": "north" if pole == 1 else "south"}))

    width = max((len(q.coeffs) for q in reduced), default=0)
    if width:
        reduced_matrix = np.zeros((len(reduced), width))
        for k, q in enumerate(reduced):
            reduced_matrix[k, : len(q.coeffs)] = [float(c) for c in q.coeffs]
        for t in np.linspace(t_start, t_end, GEOMETRY_CONFIG["umbilic_trajectory_samples"]):
            circles = _interior_roots(np.exp(rates * t) @ reduced_matrix)
            if circles:
                events.append(FlowEvent("umbilic_circle", float(t), circles[0], {"thetas": circles}))

    events.sort(key=lambda event: (event.time, event.kind))
    logger.debug("convexity_and_umbilic_events: %d events on [%s, %s]", len(events), t_start, t_end)
    return events
