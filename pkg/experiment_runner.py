"""
Run orchestration for Hopf flow studies.
Builds the initial sphere from a RunConfig, evolves it, classifies it and
writes the emitted files and summary.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from analysis import FlowAnalyzer, event_record, fate_record
from basis import AstigmatismCoefficients, decompose_samples
from config import GEOMETRY_CONFIG, OUTPUT_CONFIG, ConfigError, RunConfig
from emitters import emit_state, read_csv, render_csv_directory
from flow import (
    FlowError,
    FlowParams,
    FlowSolution,
    evolve_s,
    hopf_sphere,
    soliton_state,
    solve_flow,
    translation_soliton_state,
)
from geometry import (
    FateReport,
    SphereState,
    classify_fate,
    cm_residual,
    convexity_and_umbilic_events,
    is_convex,
)
from logger import RunLogger


def read_samples(path: str) -> List[Tuple[float, float]]:
    """(theta, s) pairs from a CSV file with a `theta,s` header."""
    sample_path = Path(path)
    if not sample_path.exists():
        raise ConfigError([f"{path}: samples file not found"])
    header, rows = read_csv(sample_path)
    if "theta" not in header or "s" not in header:
        raise ConfigError([f"{path}: samples file needs 'theta' and 's' columns, got {header}"])
    theta = rows[:, header.index("theta")]
    s = rows[:, header.index("s")]
    return list(zip(theta.tolist(), s.tolist()))


def initial_coefficients(config: RunConfig) -> AstigmatismCoefficients:
    """Mixed coefficients for the coefficient, samples and polynomial Hopf sources."""
    if config.source == "coefficients":
        coeffs = AstigmatismCoefficients.from_trig(config.trig_a, config.trig_b, config.n)
        if not config.legendre_c:
            return coeffs
        size = max(len(coeffs.legendre_c), len(config.legendre_c))
        head = list(coeffs.legendre_c) + [Fraction(0)] * (size - len(coeffs.legendre_c))
        extra = list(config.legendre_c) + [Fraction(0)] * (size - len(config.legendre_c))
        return AstigmatismCoefficients(config.n, coeffs.trig_a, coeffs.trig_b,
                                       tuple(x + y for x, y in zip(head, extra)))
    if config.source == "samples":
        coeffs, _ = decompose_samples(read_samples(config.samples_path), config.n)
        return coeffs
    state = initial_state(config)
    if not state.is_polynomial:
        raise FlowError(f"{config.source} initial data is not polynomial in cos(theta); "
                        f"it has no modal decomposition")
    return AstigmatismCoefficients.from_cos_polynomial(state.s_poly, config.n)


def initial_state(config: RunConfig) -> SphereState:
    if config.source == "hopf":
        return hopf_sphere(config.hopf_mu, config.psi_inf, config.hopf_C0)
    if config.source == "soliton":
        return soliton_state(config.soliton_lambda, config.psi_inf, _soliton_psi_0(config),
                             config.soliton_s_half, 0.0)
    return build_solution(config).state_at(0.0)


def _soliton_psi_0(config: RunConfig) -> Fraction:
    return config.psi_inf if config.soliton_psi_0 is None else config.soliton_psi_0


def build_solution(config: RunConfig) -> Optional[FlowSolution]:
    """Closed-form solution for modal sources; None for orbits evolved by their own formula."""
    params = FlowParams(config.n, config.psi_inf)
    if config.source == "soliton":
        return None
    if config.source == "hopf":
        state = hopf_sphere(config.hopf_mu, config.psi_inf, config.hopf_C0)
        if not state.is_polynomial:
            return None
        coeffs = AstigmatismCoefficients.from_cos_polynomial(state.s_poly, config.n)
        return solve_flow(params, coeffs, support=state.r_poly)
    return solve_flow(params, initial_coefficients(config),
                      pole_offset=config.pole_offset, axial_offset=config.axial_offset)


class ExperimentRunner:
    """Orchestrates evolve, classify, decompose, soliton and render runs."""

    def __init__(self, config: RunConfig, logger: Optional[RunLogger] = None):
        self.config = config
        self.params = FlowParams(config.n, config.psi_inf)
        self.analyzer = FlowAnalyzer(self.params)
        self.logger = logger or RunLogger("hopf_flow_run", config.output_directory)

    def _state_at(self, sol: Optional[FlowSolution], t: float) -> Tuple[SphereState, Optional[AstigmatismCoefficients]]:
        config = self.config
        if sol is not None:
            return sol.state_at(t), evolve_s(sol, t)
        if config.source == "soliton":
            state = soliton_state(config.soliton_lambda, config.psi_inf, _soliton_psi_0(config),
                                  config.soliton_s_half, t)
        elif config.hopf_mu == self.params.lam:
            state = translation_soliton_state(self.params.lam, config.psi_inf, config.psi_inf, config.hopf_C0, t)
        else:
            raise FlowError(f"non-analytic Hopf sphere with mu={config.hopf_mu} has no closed-form "
                            f"evolution under lambda={self.params.lam}")
        coeffs = None
        if state.is_polynomial:
            coeffs = AstigmatismCoefficients.from_cos_polynomial(state.s_poly, config.n, exact=(t == 0))
        return state, coeffs

    def _check_cm(self, state: SphereState) -> float:
        residual = cm_residual(state)
        scale = max(1.0, abs(float(state.psi(0.0))), abs(float(state.psi(np.pi))))
        if residual > GEOMETRY_CONFIG["cm_tolerance"] * scale:
            raise FlowError(f"state at t={state.time_tag} fails the Codazzi-Mainardi check "
                            f"(residual {residual:.3e})")
        return residual

    def run_evolve(self) -> Dict[str, Any]:
        """
        Evolve the configured sphere and emit every requested time.

        Returns:
            The summary written to summary.json
        """
        start = time.time()
        config = self.config
        out_dir = Path(config.output_directory)
        self.logger.log_config(config.as_dict())
        self.logger.log_run_start("evolve", source=config.source, times=config.times, formats=config.formats)

        sol = build_solution(config)
        initial, _ = self._state_at(sol, 0.0)
        if not is_convex(initial):
            self.logger.log_warning("initial data is not convex; the surface has focal points")

        with ThreadPoolExecutor(max_workers=OUTPUT_CONFIG["parallel_workers"]) as pool:
            evolved = list(pool.map(lambda t: self._state_at(sol, t), config.times))

        records = []
        files: List[str] = []
        for index, (state, coeffs) in enumerate(evolved):
            self._check_cm(state)
            record = self.analyzer.summarize_state(state, coeffs)
            files.extend(str(p) for p in emit_state(state, out_dir, index, config.formats))
            self.logger.log_state(record)
            records.append(record)
        self.analyzer.print_state_table(records)

        summary: Dict[str, Any] = {
            "config": config.as_dict(),
            "states": records,
            "slope_jumps": self.analyzer.find_slope_jumps(records),
            "fate": None,
            "events": [],
        }
        if sol is not None:
            report = classify_fate(sol.initial, self.params)
            self.analyzer.print_fate(report)
            summary["fate"] = fate_record(report)
            self.logger.log_fate(report.describe(), summary["fate"])
            events = convexity_and_umbilic_events(sol, (config.times[0], config.times[-1]))
            self.analyzer.print_events(events)
            summary["events"] = [event_record(e) for e in events]
            self.logger.log_events(summary["events"])

        with open(out_dir / "summary.json", "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, sort_keys=True, default=str)
            f.write("\n")

        self.logger.log_run_summary("evolve", time.time() - start, {
            "states": len(records),
            "files": len(files),
            "fate": summary["fate"]["verdict"] if summary["fate"] else "n/a",
            "events": len(summary["events"]),
        })
        self.logger.save_session()
        return summary

    def run_classify(self) -> FateReport:
        """Fate of the configured initial data under the configured flow."""
        start = time.time()
        self.logger.log_config(self.config.as_dict())
        self.logger.log_run_start("classify", source=self.config.source)

        coeffs = initial_coefficients(self.config)
        report = classify_fate(coeffs, self.params)
        record = self.analyzer.summarize_state(initial_state(self.config), coeffs)
        self.analyzer.print_fate(report)
        print(f"   Order: {record['order']}, slopes: ({record['slope_north']}, {record['slope_south']})")
        self.logger.log_fate(report.describe(), fate_record(report))
        self.logger.log_run_summary("classify", time.time() - start, {"verdict": report.verdict.value})
        self.logger.save_session()
        return report

    def run_decompose(self, tol: Optional[float] = None) -> Dict[str, Any]:
        """Fit the configured samples file and report the mixed coefficients."""
        if self.config.source != "samples":
            raise ConfigError(["decompose needs initial.samples"])
        start = time.time()
        self.logger.log_run_start("decompose", samples=self.config.samples_path, n=self.config.n)

        coeffs, residual = decompose_samples(read_samples(self.config.samples_path), self.config.n, tol=tol)
        result = {
            "n": coeffs.n,
            "trig_a": [str(v) for v in coeffs.trig_a],
            "trig_b": [str(v) for v in coeffs.trig_b],
            "legendre_c": [str(v) for v in coeffs.legendre_c],
            "residual": residual,
        }
        print(f"\n📐 DECOMPOSITION (n={coeffs.n})")
        print("=" * 40)
        for l, (a, b) in enumerate(zip(coeffs.trig_a, coeffs.trig_b)):
            print(f"   a_{l} = {a}, b_{l} = {b}")
        for i, c in enumerate(coeffs.legendre_c):
            if c:
                print(f"   c_{coeffs.n + i} = {c}")
        print(f"   residual = {residual:.3e}")

        self.logger.log_run_summary("decompose", time.time() - start, {"residual": residual})
        self.logger.save_session()
        return result

    def run_soliton(self) -> Dict[str, Any]:
        if self.config.source != "soliton":
            raise ConfigError(["soliton needs initial.soliton.lambda and initial.soliton.s_half"])
        return self.run_evolve()

    def run_render(self, directory: Optional[str] = None) -> List[Path]:
        """Convert the CSV files of a previous run into SVG."""
        target = Path(directory or self.config.output_directory)
        self.logger.log_run_start("render", directory=str(target))
        written = render_csv_directory(target)
        print(f"\n🖼️  Rendered {len(written)} SVG file(s) in {target}")
        return written
