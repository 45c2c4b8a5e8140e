"""
Closed-form evolution under integer linear Hopf flow.

The astigmatism splits into trig modes l < n, which couple in a finite
upper-triangular system, and Legendre modes l >= n, each an eigenfunction
of the flow operator.  The solution is therefore a finite sum of
exponentials e^(kappa t) S(theta), and the support function follows mode
by mode from the quadratures in `basis`.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from basis import (
    AstigmatismCoefficients,
    CosPolynomial,
    Number,
    TildeCoefficients,
    as_fraction,
    psi_from_r,
    quadrature_r_from_s,
    trig_mode,
    trig_mode_quadrature,
)
from config import GEOMETRY_CONFIG

logger = logging.getLogger(__name__)


class FlowError(ValueError):
    """Invalid flow parameters or initial data incompatible with the flow."""


@dataclass(frozen=True)
class FlowParams:
    """Flow integer n, slope lambda = 1 + 1/(n+1) and target radius psi_inf."""
    n: int
    psi_inf: Fraction

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 0:
            raise FlowError(f"flow integer n must be a non-negative integer, got {self.n!r}")
        psi_inf = as_fraction(self.psi_inf)
        if psi_inf <= 0:
            raise FlowError(f"psi_inf must be positive, got {psi_inf}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "psi_inf", psi_inf)

    @property
    def lam(self) -> Fraction:
        return Fraction(self.n + 2, self.n + 1)

    def curvature_function(self, psi, s):
        """K = psi + lambda s - psi_inf; the support function moves by -K."""
        return psi + float(self.lam) * s - float(self.psi_inf)


@dataclass(frozen=True)
class ModeRates:
    """Growth rates of the trig modes and couplings; omega(l) for Legendre modes."""
    n: int
    mu: Tuple[Fraction, ...]
    mu_half: Tuple[Fraction, ...]
    nu: Tuple[Fraction, ...]

    def omega(self, l: int) -> Fraction:
        if l < self.n:
            raise FlowError(f"omega is defined for Legendre modes l >= n={self.n}, got {l}")
        return Fraction(l * (l + 1) - self.n * (self.n + 1), 2 * (self.n + 1))


@lru_cache(maxsize=None)
def mode_rates(n: int) -> ModeRates:
    if n < 0:
        raise FlowError(f"flow integer n must be >= 0, got {n}")
    mu = tuple(Fraction((2 * l + 1) * (n - l), n + 1) for l in range(n))
    mu_half = tuple(Fraction((l + 1) * (2 * n - 2 * l - 1), n + 1) for l in range(n))
    nu = tuple(Fraction(2 * l * (n - l), n + 1) for l in range(n + 1))
    return ModeRates(n, mu, mu_half, nu)


def _gain(rates: Sequence[Fraction], nu: Sequence[Fraction], l: int, j: int) -> Fraction:
    """Share of the rate-j exponential in mode l: prod_{i=l}^{j-1} -nu_{i+1} / (rate_j - rate_i)."""
    out = Fraction(1)
    for i in range(l, j):
        out *= -nu[i + 1] / (rates[j] - rates[i])
    return out


def _decouple(values: Sequence[Fraction], rates: Sequence[Fraction], nu: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    n = len(values)
    tilde = [Fraction(0)] * n
    for l in range(n - 1, -1, -1):
        tilde[l] = values[l] - sum((_gain(rates, nu, l, j) * tilde[j] for j in range(l + 1, n)), Fraction(0))
    return tuple(tilde)


def _couple(tilde: Sequence[Fraction], rates: Sequence[Fraction], nu: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    n = len(tilde)
    return tuple(sum((_gain(rates, nu, l, j) * tilde[j] for j in range(l, n)), Fraction(0)) for l in range(n))


def tilde_from_initial(coeffs: AstigmatismCoefficients) -> TildeCoefficients:
    """Solve the unitriangular relations a_l = sum_{j>=l} gain(l, j) tilde_a_j."""
    rates = mode_rates(coeffs.n)
    return TildeCoefficients(
        coeffs.n,
        _decouple(coeffs.trig_a, rates.mu, rates.nu),
        _decouple(coeffs.trig_b, rates.mu_half, rates.nu),
    )


def initial_from_tilde(tilde: TildeCoefficients) -> Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...]]:
    rates = mode_rates(tilde.n)
    return _couple(tilde.tilde_a, rates.mu, rates.nu), _couple(tilde.tilde_b, rates.mu_half, rates.nu)


@dataclass(frozen=True)
class ModeComponent:
    """One exponential e^(rate t) of the solution: astigmatism shape and normalised support shape."""
    label: str
    rate: Fraction
    shape: AstigmatismCoefficients
    support: CosPolynomial

    @cached_property
    def s_poly(self) -> CosPolynomial:
        return self.shape.to_cos_polynomial()

    @cached_property
    def psi_poly(self) -> CosPolynomial:
        return psi_from_r(self.support)


def _normalised_support(shape: AstigmatismCoefficients, rate: Fraction, lam: Fraction, label: str) -> CosPolynomial:
    """Quadrature of the shape shifted so that rate*Q + psi[Q] + lam*S = 0 exactly."""
    q = quadrature_r_from_s(shape)
    excess = q.scale(rate) + psi_from_r(q) + shape.to_cos_polynomial().scale(lam)
    if excess.sin_prefactor_power != 0 or excess.degree > 1:
        raise FlowError(f"mode {label}: support excess is not affine; quadrature is inconsistent")
    alpha, beta = excess.affine_part()
    if rate == -1 and alpha != 0:
        raise FlowError(f"mode {label}: resonance with the constant relaxation at rate -1")
    if rate == 0 and beta != 0:
        raise FlowError(f"mode {label}: resonance with the axial translation at rate 0")
    c0 = -alpha / (rate + 1) if rate != -1 else Fraction(0)
    c1 = -beta / rate if rate != 0 else Fraction(0)
    return q + CosPolynomial.affine(c0, c1)


def _build_components(coeffs: AstigmatismCoefficients, tilde: TildeCoefficients,
                      lam: Fraction) -> Tuple["ModeComponent", ...]:
    n = coeffs.n
    rates = mode_rates(n)
    components: List[ModeComponent] = []
    for family, amplitudes, family_rates in (("A", tilde.tilde_a, rates.mu), ("B", tilde.tilde_b, rates.mu_half)):
        for j, amplitude in enumerate(amplitudes):
            if amplitude == 0:
                continue
            column = tuple(amplitude * _gain(family_rates, rates.nu, l, j) for l in range(j + 1))
            if family == "A":
                shape = AstigmatismCoefficients(n, trig_a=column, exact=coeffs.exact)
            else:
                shape = AstigmatismCoefficients(n, trig_b=column, exact=coeffs.exact)
            label = f"{family}{j}"
            support = _normalised_support(shape, family_rates[j], lam, label)
            components.append(ModeComponent(label, family_rates[j], shape, support))
    for i, c in enumerate(coeffs.legendre_c):
        if c == 0:
            continue
        l = n + i
        shape = AstigmatismCoefficients(n, legendre_c=(Fraction(0),) * i + (c,), exact=coeffs.exact)
        rate = -rates.omega(l)
        label = f"c{l}"
        components.append(ModeComponent(label, rate, shape, _normalised_support(shape, rate, lam, label)))
    return tuple(components)


@dataclass(frozen=True)
class FlowSolution:
    """Closed-form solution: r = psi_inf + D2 e^(-t) + D1 cos + sum e^(kappa t) Q_kappa."""
    params: FlowParams
    initial: AstigmatismCoefficients
    tilde: TildeCoefficients
    legendre_c: Tuple[Fraction, ...]
    support_constants: Tuple[Fraction, Fraction]
    components: Tuple[ModeComponent, ...]

    @property
    def D1(self) -> Fraction:
        return self.support_constants[0]

    @property
    def D2(self) -> Fraction:
        return self.support_constants[1]

    @cached_property
    def initial_support(self) -> CosPolynomial:
        r = CosPolynomial.affine(self.params.psi_inf + self.D2, self.D1)
        for component in self.components:
            r = r + component.support
        return r

    def state_at(self, t: float):
        from geometry import SphereState
        return SphereState.from_support(evolve_support(self, t), t)

    def s_time_derivative(self, t: float) -> CosPolynomial:
        """ds/dt as a CosPolynomial (float exponentials, exact conversion)."""
        total = CosPolynomial()
        for component in self.components:
            total = total + component.s_poly.scale(float(component.rate) * math.exp(float(component.rate) * t))
        return total

    def grid_evaluator(self, theta: np.ndarray) -> Callable[[float], Tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Precompute every mode on a theta grid; returns t -> (r, psi, s) arrays."""
        theta = np.asarray(theta, dtype=float)
        rates = np.array([float(c.rate) for c in self.components])
        r_modes = np.array([c.support.evaluate(theta) for c in self.components]).reshape(len(rates), theta.size)
        psi_modes = np.array([c.psi_poly.evaluate(theta) for c in self.components]).reshape(len(rates), theta.size)
        s_modes = np.array([c.s_poly.evaluate(theta) for c in self.components]).reshape(len(rates), theta.size)
        psi_inf, d1, d2 = float(self.params.psi_inf), float(self.D1), float(self.D2)
        axial = d1 * np.cos(theta)

        def evaluate(t: float):
            weights = np.exp(rates * t)
            relax = psi_inf + d2 * math.exp(-t)
            r = relax + axial + weights @ r_modes
            psi = relax + weights @ psi_modes
            s = weights @ s_modes
            return r, psi, s

        return evaluate


def solve_flow(params: FlowParams, coeffs: AstigmatismCoefficients, support: Optional[CosPolynomial] = None,
               pole_offset: Number = 0, axial_offset: Number = 0) -> FlowSolution:
    """Build the closed-form solution for initial astigmatism `coeffs`.

    Without `support`, the initial support function is fixed by
    psi(north pole, 0) = psi_inf + pole_offset and the cos(theta) coefficient axial_offset.
    """
    coeffs = coeffs.rebased(params.n)
    tilde = tilde_from_initial(coeffs)
    components = _build_components(coeffs, tilde, params.lam)

    modes = CosPolynomial()
    for component in components:
        modes = modes + component.support

    if support is None:
        pole_psi = psi_from_r(modes).value_at_x(1)
        d2 = as_fraction(pole_offset) - pole_psi
        d1 = as_fraction(axial_offset)
    else:
        remainder = support - modes
        if remainder.sin_prefactor_power != 0:
            raise FlowError("support function must be a polynomial in cos(theta)")
        higher = max((abs(c) for c in remainder.coeffs[2:]), default=Fraction(0))
        if higher:
            scale = max(support.max_abs_coefficient(), Fraction(1))
            if coeffs.exact or higher > GEOMETRY_CONFIG["support_tolerance"] * scale:
                raise FlowError(f"support function is inconsistent with the astigmatism "
                                f"(non-affine remainder of size {float(higher):.3e})")
        c0, c1 = remainder.affine_part()
        d2 = c0 - params.psi_inf
        d1 = c1

    logger.debug("solve_flow: n=%d, %d modes, D1=%s, D2=%s", params.n, len(components), d1, d2)
    return FlowSolution(params, coeffs, tilde, coeffs.legendre_c, (d1, d2), components)


def evolve_s(sol: FlowSolution, t: float) -> AstigmatismCoefficients:
    """Astigmatism coefficients at time t; t = 0 returns the initial data exactly."""
    if t < 0:
        raise FlowError(f"time must be non-negative, got {t}")
    if t == 0:
        return sol.initial
    n = sol.params.n
    trig_a = [0.0] * n
    trig_b = [0.0] * n
    legendre = [0.0] * len(sol.legendre_c)
    for component in sol.components:
        weight = math.exp(float(component.rate) * t)
        shape = component.shape
        for l in range(n):
            trig_a[l] += float(shape.trig_a[l]) * weight
            trig_b[l] += float(shape.trig_b[l]) * weight
        for i, c in enumerate(shape.legendre_c):
            legendre[i] += float(c) * weight
    return AstigmatismCoefficients(n, tuple(Fraction(v) for v in trig_a), tuple(Fraction(v) for v in trig_b),
                                   tuple(Fraction(v) for v in legendre), exact=False)


def evolve_support(sol: FlowSolution, t: float) -> CosPolynomial:
    """Support function at time t; t = 0 returns the initial support exactly."""
    if t < 0:
        raise FlowError(f"time must be non-negative, got {t}")
    if t == 0:
        return sol.initial_support
    size = max([2] + [len(c.support.coeffs) for c in sol.components])
    total = np.zeros(size)
    total[0] = float(sol.params.psi_inf) + float(sol.D2) * math.exp(-t)
    total[1] = float(sol.D1)
    for component in sol.components:
        weight = math.exp(float(component.rate) * t)
        values = component.support.float_coeffs()
        total[: values.size] += values * weight
    return CosPolynomial(tuple(Fraction(float(v)) for v in total))


# --- linear Hopf spheres and solitons ---

def hopf_sphere(mu: Number, psi_inf: Number, C0: Number, t: float = 0.0):
    """Sphere with psi + mu s = psi_inf and s = C0 sin^(2/(mu-1)).

    Polynomial-backed when 2/(mu-1) is an even integer, sample-backed otherwise.
    """
    from geometry import SphereState

    mu = as_fraction(mu)
    psi_inf = as_fraction(psi_inf)
    C0 = as_fraction(C0)
    if mu <= 1:
        raise FlowError(f"linear Hopf spheres need mu > 1, got {mu}")
    exponent = 2 / (mu - 1)
    flags = {
        "convex": psi_inf > C0 * mu,
        "real_analytic": exponent.denominator == 1 and exponent.numerator % 2 == 0,
        "mu": mu,
        "exponent": exponent,
    }

    if flags["real_analytic"]:
        l = exponent.numerator // 2 - 1
        q = trig_mode_quadrature(l).scale(C0)
        r = q + CosPolynomial.constant(psi_inf - psi_from_r(q).value_at_x(1))
        return SphereState.from_support(r, t, flags=flags)

    count = GEOMETRY_CONFIG["hopf_samples"]
    theta = np.linspace(0.0, np.pi, count)
    e = float(exponent)
    sin_theta = np.sin(theta)
    sin_theta[-1] = 0.0
    s = float(C0) * sin_theta ** e
    psi = float(psi_inf) - float(mu) * s
    ds = float(C0) * e * np.cos(theta) * np.power(sin_theta, e - 1.0, where=sin_theta > 0,
                                                   out=np.zeros_like(theta))
    dpsi = -float(mu) * ds
    # r'' + r = psi - s with r'(0) = 0 and no axial term
    radius_2 = psi - s
    int_cos = cumulative_trapezoid(np.cos(theta) * radius_2, theta, initial=0.0)
    int_sin = cumulative_trapezoid(sin_theta * radius_2, theta, initial=0.0)
    r = sin_theta * int_cos - np.cos(theta) * int_sin
    dr = np.cos(theta) * int_cos + sin_theta * int_sin
    return SphereState.from_samples(theta, r, psi, s, t, dr=dr, dpsi=dpsi, ds=ds, flags=flags)


def translation_soliton_state(lam: Number, psi_inf: Number, psi_0: Number, C0: Number, t: float):
    """Hopf sphere with mu = lambda: its diagram translates, psi(pole) relaxes to psi_inf."""
    psi_inf = as_fraction(psi_inf)
    pole = psi_inf + (as_fraction(psi_0) - psi_inf) * Fraction(math.exp(-t))
    return hopf_sphere(lam, pole, C0, t)


def soliton_state(lam: Number, psi_inf: Number, psi_0: Number, s_half: Number, t: float):
    """Evolution of the mu = 2 Hopf sphere s = s_half sin^2 under the flow with slope lambda."""
    from geometry import SphereState

    lam = as_fraction(lam)
    psi_inf = as_fraction(psi_inf)
    psi_0 = as_fraction(psi_0)
    s_half = as_fraction(s_half)
    if lam <= 1:
        raise FlowError(f"flow slope lambda must exceed 1, got {lam}")
    decay = math.exp(-t)
    if lam == 3:
        constant = (psi_0 - psi_inf - s_half * 2 * (Fraction(t) + 1)) * Fraction(decay)
        sin_squared = CosPolynomial((1,), 2).scale(s_half * Fraction(decay))
        r = CosPolynomial.constant(psi_inf + constant) + sin_squared
    else:
        shape = math.exp(float(2 - lam) * t)
        relax = psi_0 - psi_inf - 2 * (lam - 2) / (lam - 3) * s_half
        # (1/2) s_half ((lam+1)/(lam-3) - cos 2 theta), cos 2 theta = 2x^2 - 1
        mode = CosPolynomial(((lam + 1) / (lam - 3) + 1, 0, -2)).scale(s_half / 2 * Fraction(shape))
        r = CosPolynomial.constant(psi_inf + relax * Fraction(decay)) + mode
    return SphereState.from_support(r, t, flags={"lambda": lam, "s_half": s_half})
