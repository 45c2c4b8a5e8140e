"""
Verification suites for the closed forms.

Each suite returns a list of VerificationCase records; a failing case keeps
the observed and expected values so the report can show both.
"""

import logging
import math
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from basis import (
    AstigmatismCoefficients,
    DomainError,
    astigmatism_operator,
    codazzi_mainardi_residual,
    psi_from_r,
    quadrature_r_from_s,
    s_from_r,
    trig_mode,
    verify_lemma_identities,
)
from config import ORACLE_CONFIG, example_run_config
from flow import FlowParams, evolve_s, soliton_state, solve_flow
from geometry import (
    Fate,
    classify_fate,
    roc_diagram,
    roc_dilate,
    slope_at_poles,
)
from oracle import Grid, fd_convergence_order, fd_evolve_s

logger = logging.getLogger(__name__)

SUITES = ("lemmas", "roundtrip", "oracle", "slopes", "fate", "solitons")


class VerificationFailure(ValueError):
    """One or more verification cases failed."""

    def __init__(self, failed: List["VerificationCase"]):
        self.failed = failed
        super().__init__(f"{len(failed)} verification case(s) failed")


@dataclass
class VerificationCase:
    suite: str
    name: str
    passed: bool
    observed: Any = None
    expected: Any = None
    detail: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["observed"] = str(self.observed) if isinstance(self.observed, Fraction) else self.observed
        record["expected"] = str(self.expected) if isinstance(self.expected, Fraction) else self.expected
        return record


def require_all(cases: List[VerificationCase]) -> None:
    failed = [case for case in cases if not case.passed]
    if failed:
        raise VerificationFailure(failed)


# --- combinatorial identities ---

def verify_lemmas(max_index: int = 30) -> List[VerificationCase]:
    """Both identities for every 0 <= l, m <= max_index inside their domains."""
    cases = []
    for l in range(max_index + 1):
        for m in range(max_index + 1):
            try:
                first, second = verify_lemma_identities(l, m)
            except DomainError:
                continue
            for label, outcome in (("first", first), ("second", second)):
                if outcome is not None:
                    cases.append(VerificationCase("lemmas", f"{label}(l={l},m={m})", outcome))
    return cases


# --- quadrature roundtrip ---

def verify_roundtrip(max_trig: int = 8, max_n: int = 3, max_legendre: int = 10) -> List[VerificationCase]:
    """s -> r -> (psi, s) recovers s exactly and the CM residual is the zero polynomial."""
    cases = []

    def check(name: str, s, r):
        recovered = s_from_r(r)
        residual = codazzi_mainardi_residual(psi_from_r(r), recovered)
        cases.append(VerificationCase("roundtrip", name, recovered == s and residual.is_zero,
                                      observed=str(recovered), expected=str(s)))

    for l in range(max_trig + 1):
        for cosine in (False, True):
            s = trig_mode(l, cosine)
            check(f"trig(l={l},{'cos' if cosine else 'sin'})", s, quadrature_r_from_s(s))

    for n in range(max_n + 1):
        for l in range(n, max_legendre + 1):
            coeffs = AstigmatismCoefficients(n, legendre_c=[0] * (l - n) + [1])
            check(f"legendre(n={n},l={l})", coeffs.to_cos_polynomial(), quadrature_r_from_s(coeffs))
    return cases


# --- finite-difference oracle ---

def verify_oracle(n_values=(0, 1), example: str = "two-mode", T: float = 1.0,
                  grid_nodes: Optional[int] = None, dt: Optional[float] = None,
                  tol: Optional[float] = None, convergence: bool = True) -> List[VerificationCase]:
    """Crank-Nicolson against the closed form, plus the observed convergence order."""
    grid = Grid(grid_nodes or ORACLE_CONFIG["grid_nodes"], dt or ORACLE_CONFIG["dt"])
    tol = ORACLE_CONFIG["oracle_tolerance"] if tol is None else tol
    low, high = ORACLE_CONFIG["order_window"]
    cases = []

    for n in n_values:
        config = example_run_config(example, n=n)
        params = FlowParams(config.n, config.psi_inf)
        coeffs = AstigmatismCoefficients.from_trig(config.trig_a, config.trig_b, n)
        sol = solve_flow(params, coeffs)
        verdict = classify_fate(coeffs, params).verdict
        guard = None if verdict is Fate.DIVERGES else float(params.lam) - 1.0

        exact_at_T = evolve_s(sol, T)
        numeric = fd_evolve_s(coeffs.evaluate, params.lam, T, grid, stability_rate=guard)
        error = float(np.max(np.abs(numeric - exact_at_T.evaluate(grid.theta))))
        cases.append(VerificationCase("oracle", f"{example}(n={n},N={grid.N})", error < tol,
                                      observed=error, expected=f"< {tol}"))

        if convergence:
            report = fd_convergence_order(coeffs.evaluate, exact_at_T.evaluate, params.lam, T)
            passed = report.order is None or low <= report.order <= high
            cases.append(VerificationCase("oracle", f"{example}(n={n}) order", passed,
                                          observed=report.order, expected=f"[{low}, {high}]",
                                          detail={"grids": report.grid_sizes, "errors": report.errors}))
    return cases


# --- umbilic slopes ---

def _random_order_k(rng: random.Random, k: int, degenerate: bool) -> AstigmatismCoefficients:
    size = k + 3

    def draw() -> Fraction:
        return Fraction(rng.randint(-20, 20), rng.randint(1, 9))

    a = [Fraction(0)] * k + [draw() for _ in range(size - k)]
    b = [Fraction(0)] * k + [draw() for _ in range(size - k)]
    while a[k] == 0:
        a[k] = draw()
    if degenerate:
        b[k] = a[k] if rng.random() < 0.5 else -a[k]
    else:
        while b[k] ** 2 == a[k] ** 2:
            b[k] += 1
    return AstigmatismCoefficients.from_trig(a, b, 0)


def verify_slopes(cases_per_order: int = 500, orders=(0, 1, 2, 3), seed: int = 0) -> List[VerificationCase]:
    """Slopes never exceed 1 + 1/(k+1); both poles attain it iff a_k^2 != b_k^2."""
    rng = random.Random(seed)
    cases = []
    for k in orders:
        bound = Fraction(k + 2, k + 1)
        failures = []
        for i in range(cases_per_order):
            degenerate = i % 4 == 0
            coeffs = _random_order_k(rng, k, degenerate)
            slopes = slope_at_poles(coeffs)
            numeric = [s for s in slopes if isinstance(s, Fraction)]
            attained = len(numeric) == 2 and all(s == bound for s in numeric)
            if any(s > bound for s in numeric) or attained == degenerate:
                failures.append({"a": [str(v) for v in coeffs.full_trig()[0]],
                                 "b": [str(v) for v in coeffs.full_trig()[1]],
                                 "slopes": [str(s) for s in slopes]})
        cases.append(VerificationCase("slopes", f"order k={k} ({cases_per_order} sets)", not failures,
                                      observed=len(failures), expected=0, detail={"failures": failures[:5]}))

    config = example_run_config("slope-jump")
    params = FlowParams(config.n, config.psi_inf)
    sol = solve_flow(params, AstigmatismCoefficients.from_trig(config.trig_a, config.trig_b, config.n))
    for t, expected in ((0.0, Fraction(3, 2)), (1e-3, Fraction(2))):
        observed = slope_at_poles(evolve_s(sol, t))[1]
        cases.append(VerificationCase("slopes", f"slope jump mu_S(t={t})", observed == expected,
                                      observed=observed, expected=expected))
    return cases


# --- fate matrix ---

def _empirical_fate(sol, t_mid: float = 20.0, t_end: float = 40.0) -> Fate:
    theta = np.linspace(0.0, np.pi, 513)
    start = float(np.max(np.abs(sol.initial.evaluate(theta))))
    mid = float(np.max(np.abs(evolve_s(sol, t_mid).evaluate(theta))))
    end = float(np.max(np.abs(evolve_s(sol, t_end).evaluate(theta))))
    if end > 1.5 * mid:
        return Fate.DIVERGES
    if end < 1e-9 * start:
        return Fate.CONVERGES_ROUND
    return Fate.CONVERGES_HOPF


def verify_fate(orders=(0, 1, 2), flow_integers=(0, 1, 2)) -> List[VerificationCase]:
    """classify_fate against the long-time behaviour of the closed form."""
    cases = []
    inputs = []
    for k in orders:
        for n in flow_integers:
            inputs.append((f"sin^{2 * k + 2} (n={n})", n, AstigmatismCoefficients.from_trig([0] * k + [1], [], n)))
    inputs.append(("decaying Legendre mode (n=1)", 1, AstigmatismCoefficients(1, legendre_c=[0, 0, 1])))

    for name, n, coeffs in inputs:
        params = FlowParams(n, 10)
        verdict = classify_fate(coeffs, params).verdict
        observed = _empirical_fate(solve_flow(params, coeffs))
        cases.append(VerificationCase("fate", name, verdict is observed,
                                      observed=observed.value, expected=verdict.value))
    return cases


# --- solitons ---

def _time_derivative(fn: Callable[[float], np.ndarray], t: float, h: float = 1e-3) -> np.ndarray:
    return (8.0 * (fn(t + h) - fn(t - h)) - (fn(t + 2 * h) - fn(t - 2 * h))) / (12.0 * h)


def verify_solitons(lambdas=(Fraction(3, 2), Fraction(5, 2), Fraction(3), Fraction(4)), points: int = 200,
                    seed: int = 0, tol: float = 1e-9) -> List[VerificationCase]:
    """Soliton orbits satisfy the support, mean-radius and astigmatism equations; the dilation orbit is self-similar.

    dr/dt = -K, dpsi/dt = -psi[K] and ds/dt = A_lambda[s], with K = psi + lambda s - psi_inf.
    """
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, np.pi, points)
    psi_inf, psi_0, s_half, t = Fraction(10), Fraction(11), Fraction(1), 0.5
    cases = []
    for lam in lambdas:
        def field_at(time: float, key: str, lam=lam) -> np.ndarray:
            return getattr(soliton_state(lam, psi_inf, psi_0, s_half, time), key)(theta)

        state = soliton_state(lam, psi_inf, psi_0, s_half, t)
        speed = state.psi_poly + state.s_poly.scale(lam) - psi_inf
        rates = {
            "r": -speed.evaluate(theta),
            "psi": -psi_from_r(speed).evaluate(theta),
            "s": astigmatism_operator(state.s_poly, lam).evaluate(theta),
        }
        for key, expected in rates.items():
            observed = _time_derivative(lambda time, key=key: field_at(time, key), t)
            residual = float(np.max(np.abs(observed - expected)))
            cases.append(VerificationCase("solitons", f"{key} equation residual (lambda={lam})", residual < tol,
                                          observed=residual, expected=f"< {tol}"))

    config = example_run_config("dilation-soliton")
    lam = config.soliton_lambda
    start = roc_diagram(soliton_state(lam, config.psi_inf, config.soliton_psi_0, config.soliton_s_half, 0.0))
    for time in config.times[1:]:
        moved = roc_diagram(soliton_state(lam, config.psi_inf, config.soliton_psi_0, config.soliton_s_half, time))
        expected = roc_dilate(start, float(config.psi_inf), math.exp(float(2 - lam) * time))
        gap = float(np.max(np.abs(moved.points - expected.points)))
        cases.append(VerificationCase("solitons", f"dilation orbit (t={time})", gap < 1e-10,
                                      observed=gap, expected="< 1e-10"))
    return cases


def run_suite(suite: str, **options) -> List[VerificationCase]:
    """Run one named suite, or every suite for 'all'."""
    runners = {
        "lemmas": lambda: verify_lemmas(options.get("max_index", 30)),
        "roundtrip": verify_roundtrip,
        "oracle": lambda: verify_oracle(options.get("n_values", (0, 1)), options.get("example", "two-mode"),
                                        grid_nodes=options.get("grid_nodes"), dt=options.get("dt"),
                                        tol=options.get("tol")),
        "slopes": verify_slopes,
        "fate": verify_fate,
        "solitons": verify_solitons,
    }
    if suite == "all":
        cases = []
        for name in SUITES:
            cases.extend(runners[name]())
        return cases
    if suite not in runners:
        raise ValueError(f"Suite '{suite}' not found. Available suites: {list(SUITES) + ['all']}")
    cases = runners[suite]()
    logger.info("suite %s: %d cases", suite, len(cases))
    return cases
