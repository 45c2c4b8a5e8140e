"""
CSV and SVG emission of RoC diagrams and profile curves.

CSV is the contract: `theta,psi,s,r` for states, `x1,x2` for profiles,
shortest round-trip decimals and LF line endings. SVG is decorative.
"""

import csv
import logging
from pathlib import Path
from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from config import GEOMETRY_CONFIG, OUTPUT_CONFIG
from geometry import SphereState, profile_curve

logger = logging.getLogger(__name__)

STATE_HEADER = ["theta", "psi", "s", "r"]
PROFILE_HEADER = ["x1", "x2"]

# Reproducible SVG bytes
plt.rcParams["svg.hashsalt"] = "hopf-flow"


def _number(value: float) -> str:
    return repr(float(value))


def write_csv(path: Path, header: Sequence[str], rows: np.ndarray) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_number(v) for v in row])
    return path


def state_rows(state: SphereState, samples: int = None) -> np.ndarray:
    theta = np.linspace(0.0, np.pi, samples or GEOMETRY_CONFIG["roc_samples"])
    psi = np.asarray(state.psi(theta), dtype=float)
    s = np.asarray(state.s(theta), dtype=float)
    s[0] = 0.0
    s[-1] = 0.0
    r = np.asarray(state.r(theta), dtype=float)
    return np.column_stack([theta, psi, s, r])


def _finish_svg(fig, ax, path: Path) -> Path:
    ax.margins(OUTPUT_CONFIG["svg_margin"])
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_roc_svg(psi: np.ndarray, s: np.ndarray, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=OUTPUT_CONFIG["svg_size"])
    ax.axhline(0.0, color="0.6", linewidth=0.8, linestyle="--")
    ax.plot(psi, s, color="tab:blue", linewidth=1.2)
    ax.set_xlabel("psi")
    ax.set_ylabel("s")
    if title:
        ax.set_title(title)
    return _finish_svg(fig, ax, path)


def plot_profile_svg(x1: np.ndarray, x2: np.ndarray, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=OUTPUT_CONFIG["svg_size"])
    ax.plot(x2, x1, color="tab:red", linewidth=1.2)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x2")
    ax.set_ylabel("x1")
    if title:
        ax.set_title(title)
    return _finish_svg(fig, ax, path)


def emit_state(state: SphereState, directory: Path, index: int, formats: Sequence[str]) -> List[Path]:
    """Write the RoC diagram and profile curve of one state; returns the files written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"t{index:03d}"
    rows = state_rows(state)
    profile = profile_curve(state)
    title = f"t = {state.time_tag:g}"
    written = []
    if "csv" in formats:
        written.append(write_csv(directory / f"roc_{stem}.csv", STATE_HEADER, rows))
        written.append(write_csv(directory / f"profile_{stem}.csv", PROFILE_HEADER, profile))
    if "svg" in formats:
        written.append(plot_roc_svg(rows[:, 1], rows[:, 2], directory / f"roc_{stem}.svg", title))
        written.append(plot_profile_svg(profile[:, 0], profile[:, 1], directory / f"profile_{stem}.svg", title))
    logger.debug("emit_state: %s", [p.name for p in written])
    return written


def read_csv(path: Path):
    """Header and float rows of an emitted CSV file."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, [])
        rows = [[float(v) for v in row] for row in reader if row]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def render_csv_directory(directory: Path) -> List[Path]:
    """Convert every emitted CSV file in `directory` into an SVG next to it."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"no such directory: {directory}")
    written = []
    for path in sorted(directory.glob("*.csv")):
        header, rows = read_csv(path)
        target = path.with_suffix(".svg")
        if header == STATE_HEADER:
            written.append(plot_roc_svg(rows[:, 1], rows[:, 2], target, path.stem))
        elif header == PROFILE_HEADER:
            written.append(plot_profile_svg(rows[:, 0], rows[:, 1], target, path.stem))
        else:
            logger.info("render: skipping %s (header %s)", path.name, header)
    return written
