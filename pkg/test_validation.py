#!/usr/bin/env python3
"""
Validation of the configuration layer: registry integrity, config grammar and imports.
Runs under pytest, or directly as a quick smoke script.
"""

import os
import sys
from fractions import Fraction

import pytest

# Add current directory to path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from config import (
    DEFAULT_EXAMPLE,
    EXAMPLE_ALIASES,
    EXAMPLE_REGISTRY,
    ConfigError,
    get_example_config,
    example_run_config,
    load_run_config,
    parse_run_config,
)

VALID_CONFIG = """
# two-mode data under n = 1
flow.n = 1
flow.psi_inf = 10
initial.a = 1, 2
initial.b = 1, 3
initial.pole_offset = 1/2
times = 0, 0.5, 1
output.directory = out
output.formats = csv, svg
"""


def test_imports():
    """Every module imports."""
    import analysis  # noqa: F401
    import basis  # noqa: F401
    import emitters  # noqa: F401
    import experiment_runner  # noqa: F401
    import flow  # noqa: F401
    import geometry  # noqa: F401
    import logger  # noqa: F401
    import main  # noqa: F401
    import oracle  # noqa: F401
    import verification  # noqa: F401


def test_registry_entries_are_complete():
    for name, example in EXAMPLE_REGISTRY.items():
        assert "description" in example, name
        assert example["n"] >= 0
        assert example["psi_inf"] > 0
        assert example["times"] == sorted(example["times"])
        assert ("soliton" in example) != ("a" in example), name


def test_every_example_builds_a_run_config():
    for name in EXAMPLE_REGISTRY:
        config = example_run_config(name)
        assert config.times


def test_default_example_exists():
    assert get_example_config() is EXAMPLE_REGISTRY[DEFAULT_EXAMPLE]


def test_unknown_example_lists_available():
    with pytest.raises(ValueError, match="Available examples"):
        get_example_config("no-such-example")
    with pytest.raises(ConfigError):
        example_run_config("no-such-example")


def test_numeric_aliases_resolve():
    for alias, name in EXAMPLE_ALIASES.items():
        assert get_example_config(alias) is EXAMPLE_REGISTRY[name]
    assert example_run_config("4.2", n=1).n == 1


def test_dilation_soliton_sits_on_orbit():
    config = example_run_config("dilation-soliton")
    assert config.source == "soliton"
    assert config.soliton_psi_0 == 10 + 2 * Fraction(2) / Fraction(1) * 1


def test_parse_valid_config():
    config = parse_run_config(VALID_CONFIG)
    assert config.n == 1
    assert config.lam == Fraction(3, 2)
    assert config.trig_a == [1, 2]
    assert config.pole_offset == Fraction(1, 2)
    assert config.times == [0.0, 0.5, 1.0]
    assert config.formats == ["csv", "svg"]
    assert config.source == "coefficients"


def test_all_faults_reported_together():
    text = "flow.n = 0\nflow.m = 3\nflow.n = 1\ntimes = 1, 0\noutput.formats = png\n"
    with pytest.raises(ConfigError) as info:
        parse_run_config(text, "bad.cfg")
    faults = info.value.faults
    assert len(faults) == 4
    assert any("unknown key 'flow.m'" in f for f in faults)
    assert any("duplicate key 'flow.n'" in f for f in faults)
    assert any("sorted" in f for f in faults)
    assert any("png" in f for f in faults)


@pytest.mark.parametrize("text,fragment", [
    ("times =\n", "at least one"),
    ("times = -1, 0\n", "non-negative"),
    ("flow.psi_inf = 0\n", "positive"),
    ("flow.n = two\n", "bad value"),
    ("initial.a = 1\ninitial.hopf.mu = 2\n", "more than one"),
    ("initial.soliton.s_half = 1\n", "lambda"),
    ("initial.hopf.C0 = 1\n", "mu"),
    ("just some words\n", "expected 'key = value'"),
])
def test_single_faults(text, fragment):
    with pytest.raises(ConfigError) as info:
        parse_run_config(text)
    assert any(fragment in f for f in info.value.faults)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(str(tmp_path / "missing.cfg"))


def test_load_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(VALID_CONFIG, encoding="utf-8")
    assert load_run_config(str(path)).output_directory == "out"


def main():
    """Run the validation checks without pytest."""
    print("🚀 HOPF FLOW VALIDATION TESTS")
    print("=" * 40)
    test_imports()
    print("✅ imports")
    test_registry_entries_are_complete()
    test_every_example_builds_a_run_config()
    print(f"✅ registry: {len(EXAMPLE_REGISTRY)} examples")
    test_parse_valid_config()
    print("✅ config grammar")
    print("\n🎉 All validation checks completed!")
    print("\n💡 Next steps:")
    print("1. Run: python main.py evolve --example two-mode")
    print("2. Run: python main.py verify all")
    return True


if __name__ == "__main__":
    main()
