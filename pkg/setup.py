#!/usr/bin/env python3
"""
Setup script for Hopf Flow Lab: installs requirements.txt and reports what is importable.
"""

import subprocess
import sys
from importlib import metadata
from pathlib import Path

REQUIREMENTS = Path(__file__).with_name("requirements.txt")


def required_packages():
    """Package names listed in requirements.txt."""
    names = []
    for line in REQUIREMENTS.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            names.append(line.split(">=")[0].split("==")[0].strip())
    return names


def install_requirements() -> bool:
    print(f"📦 pip install -r {REQUIREMENTS.name}")
    result = subprocess.run([sys.executable, "-m", "pip", "install", "-r", str(REQUIREMENTS)])
    if result.returncode != 0:
        print(f"❌ pip exited with status {result.returncode}")
        return False
    return True


def report_versions() -> bool:
    """Print the installed version of each requirement; False if any is missing."""
    print("🔍 Installed packages")
    ok = True
    for name in required_packages():
        try:
            print(f"  ✅ {name} {metadata.version(name)}")
        except metadata.PackageNotFoundError:
            print(f"  ❌ {name} missing")
            ok = False
    return ok


def main():
    print("🔧 HOPF FLOW LAB SETUP")
    print("=" * 30)

    if not (install_requirements() and report_versions()):
        print("\n❌ Setup incomplete")
        return 1

    print("\n🎉 Ready. Try:")
    print("  python main.py --list-examples")
    print("  python main.py evolve --example two-mode --format both")
    print("  python main.py verify all")
    return 0


if __name__ == "__main__":
    if len(sys.argv) > 1:
        # Invoked by a build backend (pip install .): package metadata lives in pyproject.toml.
        from setuptools import setup

        setup()
    else:
        sys.exit(main())
