#!/usr/bin/env python3
"""Regenerate the tabulated profile shipped with the boundary_interval example.

Diagonal su(2) fibre metric over [0, 1] with quadratic entries, so the cubic
spline reproduces both tables exactly and the supplied derivatives are
consistent with the metric by construction:

    g_11 = 1 + 0.05 r + 0.10 r^2
    g_22 = 2 - 0.30 r + 0.15 r^2
    g_33 = 3 + 0.20 r - 0.10 r^2
"""

from pathlib import Path

import numpy as np

from coho_euler.coho_geometry import write_tabulated_csv

OUT = Path(__file__).resolve().parents[1] / "src" / "coho_euler" / "examples_data"


def main():
    r = np.linspace(0.0, 1.0, 33)
    diag = np.stack(
        [
            1.0 + 0.05 * r + 0.10 * r**2,
            2.0 - 0.30 * r + 0.15 * r**2,
            3.0 + 0.20 * r - 0.10 * r**2,
        ],
        axis=1,
    )
    ddiag = np.stack(
        [0.05 + 0.20 * r, -0.30 + 0.30 * r, 0.20 - 0.20 * r],
        axis=1,
    )
    gram = np.zeros((r.size, 3, 3))
    prime = np.zeros((r.size, 3, 3))
    for i in range(3):
        gram[:, i, i] = diag[:, i]
        prime[:, i, i] = ddiag[:, i]
    out = OUT / "boundary_interval_profile.csv"
    write_tabulated_csv(out, r, gram, prime)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
