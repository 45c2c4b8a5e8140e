"""
Analysis utilities for Hopf flow runs.
"""

from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np

from basis import AstigmatismCoefficients
from config import GEOMETRY_CONFIG
from flow import FlowParams
from geometry import (
    FateReport,
    FlowEvent,
    SphereState,
    cm_residual,
    is_convex,
    order_and_degeneracy,
)


def _show(value: Any) -> Any:
    """Fractions print as 2/3; floats and strings pass through."""
    if isinstance(value, Fraction):
        return str(value)
    return value


class FlowAnalyzer:
    """Summarises evolved states and the run they belong to."""

    def __init__(self, params: FlowParams):
        self.params = params
        self.records: List[Dict[str, Any]] = []

    def summarize_state(self, state: SphereState, coeffs: Optional[AstigmatismCoefficients] = None) -> Dict[str, Any]:
        """
        Summary record of one state.

        Args:
            state: The sphere at time state.time_tag
            coeffs: Its astigmatism coefficients, when the state is modal

        Returns:
            Dictionary with order, degeneracy, slopes, convexity and the CM residual
        """
        theta = np.linspace(0.0, np.pi, GEOMETRY_CONFIG["roc_samples"])
        s = np.asarray(state.s(theta), dtype=float)
        s_scale = max(float(np.max(np.abs(s))), 1.0)
        threshold = GEOMETRY_CONFIG["zero_threshold"] * s_scale

        if np.all(np.abs(s) <= threshold):
            shape = "round"
        elif np.all(s >= -threshold):
            shape = "oblate"
        elif np.all(s <= threshold):
            shape = "prolate"
        else:
            shape = "mixed"

        record = {
            "time": state.time_tag,
            "provenance": state.provenance,
            "convex": is_convex(state),
            "cm_residual": cm_residual(state),
            "shape": shape,
            "s_min": float(np.min(s)),
            "s_max": float(np.max(s)),
            "psi_north": float(state.psi(0.0)),
            "psi_south": float(state.psi(np.pi)),
        }

        if coeffs is not None:
            umbilics = order_and_degeneracy(coeffs)
            record.update({
                "order": umbilics.order,
                "nondegenerate": umbilics.nondegenerate,
                "slope_north": _show(umbilics.slope_N),
                "slope_south": _show(umbilics.slope_S),
            })
        else:
            record.update({"order": None, "nondegenerate": None, "slope_north": None, "slope_south": None})

        self.records.append(record)
        return record

    def find_slope_jumps(self, records: Optional[List[Dict[str, Any]]] = None) -> List[Dict[str, Any]]:
        """Consecutive records whose pole slope changes."""
        records = self.records if records is None else records
        jumps = []
        for before, after in zip(records, records[1:]):
            for pole in ("north", "south"):
                key = f"slope_{pole}"
                if before.get(key) != after.get(key):
                    jumps.append({
                        "pole": pole,
                        "from_time": before["time"],
                        "to_time": after["time"],
                        "from_slope": before.get(key),
                        "to_slope": after.get(key),
                    })
        return jumps

    def print_state_table(self, records: Optional[List[Dict[str, Any]]] = None):
        """Print a formatted table of state summaries."""
        records = self.records if records is None else records
        print(f"\n{'='*72}")
        print(f"STATES: n={self.params.n}, lambda={self.params.lam}, psi_inf={self.params.psi_inf}")
        print(f"{'='*72}")
        print(f"{'t':>8}  {'order':>5}  {'mu_N':>10}  {'mu_S':>10}  {'convex':>6}  {'shape':>8}  {'CM':>9}")
        for record in records:
            order = "-" if record["order"] is None else record["order"]
            print(f"{record['time']:>8.4g}  {order:>5}  {str(record['slope_north']):>10}  "
                  f"{str(record['slope_south']):>10}  {str(record['convex']):>6}  "
                  f"{record['shape']:>8}  {record['cm_residual']:>9.2e}")

    def print_fate(self, report: FateReport):
        print(f"\n🧭 {report.describe()}")
        if report.witness_mode is not None:
            print(f"   Leading mode: {report.witness_mode} (rate {report.witness_rate})")

    def print_events(self, events: List[FlowEvent]):
        if not events:
            print("\n📍 No focal crossings or umbilic events in range")
            return
        print(f"\n📍 FLOW EVENTS ({len(events)})")
        print("=" * 40)
        for event in events:
            where = "" if event.theta is None else f" at theta={event.theta:.6f}"
            print(f"   t={event.time:.10f}  {event.kind}{where}")


def event_record(event: FlowEvent) -> Dict[str, Any]:
    return {"kind": event.kind, "time": event.time, "theta": event.theta, "detail": event.detail}


def fate_record(report: FateReport) -> Dict[str, Any]:
    return {
        "verdict": report.verdict.value,
        "description": report.describe(),
        "witness_mode": report.witness_mode,
        "witness_rate": _show(report.witness_rate),
        "lambda": _show(report.lam),
        "psi_inf": _show(report.psi_inf),
        "limit_amplitude": _show(report.limit_amplitude),
    }
