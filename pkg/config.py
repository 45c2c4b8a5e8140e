"""
Configuration module for Hopf flow runs.
Contains all tunable parameters, the example surface registry and the
run-config parser used by the command line.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

# --- Flow Configuration ---
FLOW_CONFIG = {
    "default_n": 0,
    "default_psi_inf": 10,
}

# --- Decomposition Configuration ---
DECOMPOSE_CONFIG = {
    "max_degree": 32,           # L_max of the Legendre truncation
    "residual_tolerance": 1e-9,  # L-infinity over the sample set
    "drop_tolerance": 1e-13,    # relative; fitted Legendre coefficients below this are zeroed
    "max_denominator": 10**12,  # rationalisation of fitted coefficients
    "pole_guard": 1e-12,        # samples with sin^2 below this are kept out of the fit
}

# --- Geometry Configuration ---
GEOMETRY_CONFIG = {
    "zero_threshold": 1e-10,        # relative, for coefficients that came from floats
    "cm_tolerance": 1e-8,
    "event_theta_samples": 2048,
    "event_time_tolerance": 1e-10,
    "event_time_steps": 400,
    "umbilic_trajectory_samples": 11,
    "roc_samples": 257,
    "profile_samples": 257,
    "richardson_step": 1e-2,
    "hopf_samples": 4097,
    "support_tolerance": 1e-10,     # affine remainder check for supplied support functions
}

# --- Oracle Configuration ---
ORACLE_CONFIG = {
    "grid_nodes": 512,
    "dt": 1e-3,
    "min_nodes": 16,
    "stability_safety_factor": 10.0,
    "oracle_tolerance": 5e-4,
    "convergence_grids": [128, 256, 512],
    "order_window": [1.8, 2.2],
    "roundoff_floor": 1e-12,
}

# --- Output Configuration ---
OUTPUT_CONFIG = {
    "directory": "flow_output",
    "formats": ["csv"],
    "svg_margin": 0.05,
    "svg_size": [6.0, 4.5],
    "parallel_workers": 4,
}

# --- Logging Configuration ---
LOGGING_CONFIG = {
    "history_file": "flow_history.log",
    "detailed_results_file": "flow_results.json",
    "summary_file": "flow_summary.txt",
    "enable_detailed_logging": True,
    "log_level": "WARNING",
}

# --- Example Surface Registry ---
# Coefficients are the full trigonometric decomposition (a_l, b_l for every l);
# pole_offset is psi(north pole, t=0) - psi_inf.
EXAMPLE_REGISTRY = {
    "mixed-a": {
        "description": "Oblate/prolate mixture with a0=3, a1=10, b0=2, b1=7",
        "n": 0, "psi_inf": 10, "pole_offset": 1,
        "a": [3, 10], "b": [2, 7], "times": [0],
    },
    "turnip": {
        "description": "Prolate and oblate parts joined along an umbilic circle",
        "n": 0, "psi_inf": 10, "pole_offset": 1,
        "a": [3, 10], "b": [20, 7], "times": [0],
    },
    "mixed-c": {
        "description": "Small target radius, strongly asymmetric astigmatism",
        "n": 0, "psi_inf": 1, "pole_offset": 1,
        "a": [3, 5], "b": [-36, 50], "times": [0],
    },
    "two-mode": {
        "description": "Two-mode initial data (1, 1, 2, 3) for the n=0 and n=1 closed forms",
        "n": 0, "psi_inf": 10, "pole_offset": 1,
        "a": [1, 2], "b": [1, 3], "times": [0, 0.1, 1, 5],
    },
    "slope-jump": {
        "description": "Degenerate south pole whose slope jumps from 3/2 to 2",
        "n": 0, "psi_inf": 10, "pole_offset": 1,
        "a": [1, 2], "b": [1, 3], "times": [0, 0.5, 1, 2],
    },
    "umbilic-pop": {
        "description": "Umbilic circle that reaches the south pole in finite time",
        "n": 0, "psi_inf": 10, "pole_offset": 1,
        "a": [1, 2], "b": [5, 3], "times": [0, 0.25, 0.5, 1, 2],
    },
    "divergent": {
        "description": "n=1 flow that grows like e^(t/2) and loses convexity",
        "n": 1, "psi_inf": 10, "pole_offset": 1,
        "a": [2, 1], "b": [5, -1], "times": [0, 1, 2, 4],
    },
    "dilation-soliton": {
        "description": "Self-similar orbit dilating about (psi_inf, 0)",
        "n": 0, "psi_inf": 10,
        "soliton": {"lambda": 4, "s_half": 1},
        "times": [0, 0.25, 0.5, 1],
    },
}

DEFAULT_EXAMPLE = "two-mode"

# Numeric short names for the worked examples, accepted wherever an example name is.
EXAMPLE_ALIASES = {
    "4.2": "two-mode",
    "4.3": "slope-jump",
    "4.4": "umbilic-pop",
}


def get_example_config(example_name: str = None) -> dict:
    """Get example surface parameters by name."""
    if example_name is None:
        example_name = DEFAULT_EXAMPLE
    example_name = EXAMPLE_ALIASES.get(example_name, example_name)

    if example_name not in EXAMPLE_REGISTRY:
        available_examples = list(EXAMPLE_REGISTRY.keys())
        raise ValueError(f"Example '{example_name}' not found. Available examples: {available_examples}")

    return EXAMPLE_REGISTRY[example_name]


# --- Run Configuration ---

class ConfigError(ValueError):
    """Invalid run configuration; carries one message per fault."""

    def __init__(self, faults: List[str]):
        self.faults = list(faults)
        super().__init__("; ".join(self.faults))


INITIAL_SOURCES = ("coefficients", "samples", "hopf", "soliton")
OUTPUT_FORMATS = ("csv", "svg")


@dataclass
class RunConfig:
    """A parsed run: flow parameters, one initial-data source, times and output."""
    n: int = FLOW_CONFIG["default_n"]
    psi_inf: Fraction = Fraction(FLOW_CONFIG["default_psi_inf"])
    source: str = "coefficients"
    trig_a: List[Fraction] = field(default_factory=list)
    trig_b: List[Fraction] = field(default_factory=list)
    legendre_c: List[Fraction] = field(default_factory=list)
    pole_offset: Fraction = Fraction(0)
    axial_offset: Fraction = Fraction(0)
    samples_path: Optional[str] = None
    hopf_mu: Optional[Fraction] = None
    hopf_C0: Fraction = Fraction(0)
    soliton_lambda: Optional[Fraction] = None
    soliton_psi_0: Optional[Fraction] = None
    soliton_s_half: Fraction = Fraction(0)
    times: List[float] = field(default_factory=lambda: [0.0])
    output_directory: str = OUTPUT_CONFIG["directory"]
    formats: List[str] = field(default_factory=lambda: list(OUTPUT_CONFIG["formats"]))

    @property
    def lam(self) -> Fraction:
        return Fraction(self.n + 2, self.n + 1)

    def as_dict(self) -> Dict[str, Any]:
        """Plain-JSON view for the session log."""
        def show(value):
            if isinstance(value, Fraction):
                return str(value)
            if isinstance(value, list):
                return [show(v) for v in value]
            return value
        return {key: show(value) for key, value in self.__dict__.items()}


def _rational(text: str) -> Fraction:
    return Fraction(text.strip())


def _rational_list(text: str) -> List[Fraction]:
    return [_rational(item) for item in text.split(",") if item.strip()]


def _float_list(text: str) -> List[float]:
    return [float(item) for item in text.split(",") if item.strip()]


_COEFFICIENT_KEYS = {"initial.a", "initial.b", "initial.c", "initial.pole_offset", "initial.axial_offset"}
_HOPF_KEYS = {"initial.hopf.mu", "initial.hopf.C0"}
_SOLITON_KEYS = {"initial.soliton.lambda", "initial.soliton.psi_0", "initial.soliton.s_half"}

_KEY_PARSERS = {
    "flow.n": ("n", int),
    "flow.psi_inf": ("psi_inf", _rational),
    "initial.a": ("trig_a", _rational_list),
    "initial.b": ("trig_b", _rational_list),
    "initial.c": ("legendre_c", _rational_list),
    "initial.pole_offset": ("pole_offset", _rational),
    "initial.axial_offset": ("axial_offset", _rational),
    "initial.samples": ("samples_path", str),
    "initial.hopf.mu": ("hopf_mu", _rational),
    "initial.hopf.C0": ("hopf_C0", _rational),
    "initial.soliton.lambda": ("soliton_lambda", _rational),
    "initial.soliton.psi_0": ("soliton_psi_0", _rational),
    "initial.soliton.s_half": ("soliton_s_half", _rational),
    "times": ("times", _float_list),
    "output.directory": ("output_directory", str),
    "output.formats": ("formats", lambda text: [f.strip() for f in text.split(",") if f.strip()]),
}


def parse_run_config(text: str, source_name: str = "<config>") -> RunConfig:
    """Parse the flat `key = value` run format; every fault is reported at once."""
    config = RunConfig()
    faults: List[str] = []
    seen: Dict[str, int] = {}

    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            faults.append(f"{source_name}:{line_number}: expected 'key = value', got '{line}'")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_PARSERS:
            faults.append(f"{source_name}:{line_number}: unknown key '{key}'")
            continue
        if key in seen:
            faults.append(f"{source_name}:{line_number}: duplicate key '{key}' (first on line {seen[key]})")
            continue
        seen[key] = line_number
        attribute, parser = _KEY_PARSERS[key]
        try:
            setattr(config, attribute, parser(value))
        except (ValueError, ZeroDivisionError) as exc:
            faults.append(f"{source_name}:{line_number}: bad value for '{key}': {exc}")

    sources = []
    if _COEFFICIENT_KEYS & seen.keys():
        sources.append("coefficients")
    if "initial.samples" in seen:
        sources.append("samples")
    if _HOPF_KEYS & seen.keys():
        sources.append("hopf")
    if _SOLITON_KEYS & seen.keys():
        sources.append("soliton")
    if len(sources) > 1:
        faults.append(f"{source_name}: more than one initial-data source given ({', '.join(sources)})")
    elif sources:
        config.source = sources[0]

    faults.extend(validate_run_config(config, source_name))
    if faults:
        raise ConfigError(faults)
    return config


def validate_run_config(config: RunConfig, source_name: str = "<config>") -> List[str]:
    """Return one message per invariant the config violates."""
    faults = []
    if not isinstance(config.n, int) or config.n < 0:
        faults.append(f"{source_name}: flow.n must be a non-negative integer")
    if config.psi_inf <= 0:
        faults.append(f"{source_name}: flow.psi_inf must be positive")
    if not config.times:
        faults.append(f"{source_name}: times must list at least one value")
    elif any(t < 0 for t in config.times):
        faults.append(f"{source_name}: times must be non-negative")
    elif list(config.times) != sorted(config.times):
        faults.append(f"{source_name}: times must be sorted")
    unknown_formats = [f for f in config.formats if f not in OUTPUT_FORMATS]
    if unknown_formats:
        faults.append(f"{source_name}: unknown output format(s) {unknown_formats}")
    if config.source == "hopf" and (config.hopf_mu is None or config.hopf_mu <= 1):
        faults.append(f"{source_name}: initial.hopf.mu must be given and > 1")
    if config.source == "soliton" and (config.soliton_lambda is None or config.soliton_lambda <= 1):
        faults.append(f"{source_name}: initial.soliton.lambda must be given and > 1")
    return faults


def load_run_config(path: str) -> RunConfig:
    """Read and parse a run-config file."""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError([f"{path}: file not found"])
    return parse_run_config(config_path.read_text(encoding="utf-8"), source_name=str(path))


def example_run_config(example_name: str, n: Optional[int] = None) -> RunConfig:
    """Build a RunConfig from a registry entry, optionally overriding n."""
    try:
        example = get_example_config(example_name)
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc

    config = RunConfig(
        n=example["n"] if n is None else n,
        psi_inf=Fraction(example["psi_inf"]),
        times=[float(t) for t in example["times"]],
    )
    if "soliton" in example:
        soliton = example["soliton"]
        lam = Fraction(soliton["lambda"])
        s_half = Fraction(soliton["s_half"])
        config.source = "soliton"
        config.soliton_lambda = lam
        config.soliton_s_half = s_half
        # psi_0 on the dilation orbit about (psi_inf, 0)
        config.soliton_psi_0 = config.psi_inf + 2 * (lam - 2) / (lam - 3) * s_half
    else:
        config.trig_a = [Fraction(v) for v in example["a"]]
        config.trig_b = [Fraction(v) for v in example["b"]]
        config.legendre_c = [Fraction(v) for v in example.get("c", [])]
        config.pole_offset = Fraction(example.get("pole_offset", 0))

    faults = validate_run_config(config, source_name=example_name)
    if faults:
        raise ConfigError(faults)
    return config
