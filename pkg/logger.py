"""
Run logging for Hopf flow commands.
Keeps an append-only history, a JSON record of the session and a short text summary
in the run's output directory.
"""

import datetime
import json
import logging
import platform
from pathlib import Path
from typing import Any, Dict, List, Optional

import matplotlib
import numpy as np
import scipy

from config import LOGGING_CONFIG

MAX_LISTED = 5


def _jsonable(value: Any) -> Any:
    """Fractions and numpy scalars become strings/floats so records serialise."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if hasattr(value, "item"):
        return value.item()
    return str(value)


def _environment() -> Dict[str, str]:
    """Interpreter and numerical library versions, for reproducing a run."""
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "platform": platform.platform(terse=True),
    }


class RunLogger:
    """History, session record and summary for one command."""

    def __init__(self, run_name: str = "hopf_flow_run", output_dir: Optional[str] = None):
        self.run_name = run_name
        self.start_time = datetime.datetime.now()
        self.session_id = f"{run_name}_{self.start_time:%Y%m%d_%H%M%S}"

        self.base_dir = Path(output_dir or ".")
        self.base_dir.mkdir(parents=True, exist_ok=True)
        self.history_file = self.base_dir / LOGGING_CONFIG["history_file"]
        self.results_file = self.base_dir / LOGGING_CONFIG["detailed_results_file"]
        self.summary_file = self.base_dir / LOGGING_CONFIG["summary_file"]

        logging.basicConfig(level=getattr(logging, LOGGING_CONFIG["log_level"], logging.WARNING),
                            format="%(levelname)s %(name)s: %(message)s")

        self.run_data: Dict[str, Any] = {
            "session_id": self.session_id,
            "run_name": run_name,
            "started": self.start_time.isoformat(timespec="seconds"),
            "environment": _environment(),
            "events": [],
            "states": [],
            "verification": [],
            "summary": {},
        }
        self._log_event("RUN_START", f"{run_name} in {self.base_dir}")

    def log_config(self, config: Dict[str, Any]):
        """Record the run configuration and echo its main fields."""
        self.run_data["config"] = _jsonable(config)
        self._log_event("CONFIG", "run configuration", self.run_data["config"])

        print(f"\n📊 RUN CONFIGURATION ({self.session_id})")
        print("=" * 30)
        for key in ("n", "psi_inf", "source", "times", "output_directory"):
            if key in config:
                print(f"  {key}: {config[key]}")

    def log_run_start(self, command: str, **kwargs):
        self._log_event("COMMAND_START", command, _jsonable(kwargs))

        print(f"\n🔬 COMMAND: {command.upper()}")
        print("=" * 50)
        for key, value in kwargs.items():
            shown = value
            if isinstance(value, list) and len(value) > MAX_LISTED:
                shown = f"{value[:MAX_LISTED]} and {len(value) - MAX_LISTED} more"
            print(f"  {key}: {shown}")

    def log_state(self, record: Dict[str, Any]):
        """Record the summary of one emitted state."""
        entry = _jsonable(record)
        self.run_data["states"].append(entry)
        self._log_event("STATE", f"t={record.get('time')}", entry)

    def log_fate(self, description: str, data: Dict[str, Any]):
        print(f"\n🧭 FATE: {description}")
        self.run_data["fate"] = _jsonable(data)
        self._log_event("FATE", description, self.run_data["fate"])

    def log_events(self, events: List[Dict[str, Any]]):
        self.run_data["flow_events"] = _jsonable(events)
        kinds = sorted({event["kind"] for event in events})
        self._log_event("FLOW_EVENTS", f"{len(events)} event(s)", {"kinds": kinds})

    def log_verification(self, case: Dict[str, Any]):
        entry = _jsonable(case)
        self.run_data["verification"].append(entry)
        status = "PASS" if case.get("passed") else "FAIL"
        self._log_event(f"VERIFY_{status}", f"{case.get('suite')}:{case.get('name')}")

    def log_warning(self, message: str):
        print(f"⚠️  Warning: {message}")
        self._log_event("WARNING", message)

    def log_run_summary(self, command: str, total_time: float, key_findings: Dict[str, Any]):
        """Record the outcome of the command and print it."""
        findings = _jsonable(key_findings)
        self.run_data["summary"] = {
            "command": command,
            "seconds": round(total_time, 3),
            "key_findings": findings,
            "finished": datetime.datetime.now().isoformat(timespec="seconds"),
        }
        self._log_event("RUN_COMPLETE", command, findings)

        print(f"\n🏁 {command.upper()} finished in {total_time:.1f}s")
        print("=" * 50)
        for key, value in findings.items():
            print(f"  {key}: {value}")

    def save_session(self):
        """Write the JSON session record and the text summary."""
        try:
            self.results_file.write_text(json.dumps(self.run_data, indent=2, default=str) + "\n",
                                         encoding="utf-8")
            self.summary_file.write_text(self._summary_text(), encoding="utf-8")
        except OSError as e:
            print(f"⚠️  Warning: session not saved to {self.base_dir}: {e}")
            return

        print(f"\n💾 Session {self.session_id} saved to {self.base_dir}/")
        for path in (self.history_file, self.results_file, self.summary_file):
            print(f"  {path.name}")

    def _log_event(self, event_type: str, message: str, data: Dict[str, Any] = None):
        stamp = datetime.datetime.now().isoformat(timespec="milliseconds")
        self.run_data["events"].append({"time": stamp, "type": event_type, "message": message})

        lines = [f"[{stamp}] {self.session_id} {event_type}: {message}"]
        if data and LOGGING_CONFIG["enable_detailed_logging"]:
            lines.append("    " + json.dumps(data, sort_keys=True, default=str))
        try:
            with open(self.history_file, "a", encoding="utf-8") as f:
                f.write("\n".join(lines) + "\n")
        except OSError:
            pass  # history is best effort

    def _summary_text(self) -> str:
        out = [f"Hopf Flow Run Summary: {self.run_name}", "=" * 40, "",
               f"Session: {self.session_id}",
               f"Started: {self.run_data['started']}",
               "Environment: " + ", ".join(f"{k} {v}" for k, v in self.run_data["environment"].items())]

        if "fate" in self.run_data:
            out += ["", f"Fate: {self.run_data['fate'].get('description', '')}"]

        states = self.run_data["states"]
        if states:
            out += ["", f"States ({len(states)}):"]
            out += [f"  t={r['time']}: order={r['order']} slopes=({r['slope_north']}, {r['slope_south']}) "
                    f"convex={r['convex']} shape={r['shape']}" for r in states]

        cases = self.run_data["verification"]
        if cases:
            passed = sum(1 for c in cases if c.get("passed"))
            out += ["", f"Verification: {passed}/{len(cases)} cases passed"]
            out += [f"  FAIL {c['suite']}:{c['name']}" for c in cases if not c.get("passed")]

        findings = self.run_data["summary"].get("key_findings", {})
        if findings:
            out += ["", "Key findings:"]
            out += [f"  {key}: {value}" for key, value in findings.items()]
        return "\n".join(out) + "\n"
