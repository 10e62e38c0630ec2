#!/usr/bin/env python3
"""Temporal self-convergence study for the three reduced systems.

Integrates each bundled reference problem at a ladder of step sizes on a
fixed grid and prints the Richardson error ratios; the observed order
should sit at four for all of them.
"""

import numpy as np

from coho_euler import SolverConfig, catalog, integrate
from coho_euler.config import build_problem


def final_state(problem, dt, t_end):
    snaps, _ = integrate(problem, SolverConfig(dt=dt, t_end=t_end, snapshot_cadence=10**9))
    s = snaps[-1]
    return np.concatenate([[0.0 if s.c is None else s.c], s.v.ravel()])


def study(name, dts, t_end):
    cfg = catalog.load_example(name)
    finals = [final_state(build_problem(cfg), dt, t_end) for dt in dts]
    print(f"{name} (t_end = {t_end}):")
    prev = None
    for k in range(len(dts) - 1):
        err = float(np.max(np.abs(finals[k] - finals[k + 1])))
        line = f"  dt = {dts[k]:<8g} |diff to dt/2| = {err:.3e}"
        if prev is not None and err > 0:
            line += f"   observed order = {np.log2(prev / err):.3f}"
        prev = err
        print(line)


def main():
    study("su2_rigid_body", (0.1, 0.05, 0.025, 0.0125), 1.0)
    study("boundary_interval", (0.05, 0.025, 0.0125, 0.00625), 1.0)
    study("berger_circle", (0.004, 0.002, 0.001, 0.0005), 0.5)


if __name__ == "__main__":
    main()
