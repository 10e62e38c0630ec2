#!/usr/bin/env python3
"""Run every bundled example and print a one-line conservation summary each.

Usage: python scripts/run_all_examples.py [output_root]
"""

import sys
from pathlib import Path

from coho_euler import catalog
from coho_euler.cli import run_command


def main():
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("example_runs")
    codes = {}
    for name in catalog.example_names():
        cfg = catalog.load_example(name)
        out = root / name
        print(f"== {name} -> {out}")
        codes[name] = run_command(cfg, out)
    print()
    for name, code in codes.items():
        print(f"{name:18s} exit {code}")
    return max(codes.values())


if __name__ == "__main__":
    sys.exit(main())
