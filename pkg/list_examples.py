#!/usr/bin/env python3
"""
Utility script to list the example surfaces and their parameters.
"""

from fractions import Fraction

from config import EXAMPLE_REGISTRY


def list_examples():
    """List all registered example surfaces."""
    print("🌐 AVAILABLE EXAMPLES")
    print("=" * 50)

    for name, example in EXAMPLE_REGISTRY.items():
        n = example["n"]
        print(f"\n{name}:")
        print(f"  {example['description']}")
        print(f"  Flow: n={n}, lambda={Fraction(n + 2, n + 1)}, psi_inf={example['psi_inf']}")
        if "soliton" in example:
            soliton = example["soliton"]
            print(f"  Soliton: lambda={soliton['lambda']}, s(pi/2)={soliton['s_half']}")
        else:
            print(f"  a: {example['a']}")
            print(f"  b: {example['b']}")
        print(f"  Times: {example['times']}")


if __name__ == "__main__":
    list_examples()
