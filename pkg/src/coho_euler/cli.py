"""Command-line interface: run, validate, and list the bundled examples.

Exit codes: 0 success, 2 validation error, 3 numerical failure (partial
artifacts preserved), 4 parse error. Identical configs produce
byte-identical artifacts regardless of the worker count.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import catalog
from .config import RunConfig, build_problem, build_solver_config, parse_config
from .coho_geometry import validate_profile
from .diagnostics import write_diagnostics_csv, write_snapshot_csv
from .errors import CohoEulerError, ConfigError, NumericalFailureError
from .homogeneous_geometry import check_metric_invariance
from .lie_core import check_reductive_split, monte_carlo_fixed_check, validate_structure
from .reduced_euler import integrate, trajectory_pressures

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_PARSE = 4


def _json_dump(obj, path: Path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_command(cfg: RunConfig, out_dir: Path) -> int:
    problem = build_problem(cfg)
    solver = build_solver_config(cfg)

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        snap_dir = out_dir / "snapshots"
        snap_dir.mkdir(exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out_dir}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    snapshots, report = integrate(problem, solver)
    pressures = trajectory_pressures(problem, snapshots)

    manifest_snaps = []
    for i, (state, pressure) in enumerate(zip(snapshots, pressures)):
        fname = f"snapshots/snapshot_{i:06d}.csv"
        write_snapshot_csv(out_dir / fname, state, pressure.samples)
        manifest_snaps.append({"file": fname, "t": float(state.t)})

    write_diagnostics_csv(report, out_dir / "diagnostics.csv")
    _json_dump(report.summary, out_dir / "summary.json")
    manifest = {
        "config": cfg.raw,
        "config_hash": cfg.hash(),
        "problem_kind": cfg.kind,
        "status": "failed" if report.failure else "ok",
        "snapshots": manifest_snaps,
        "diagnostics": "diagnostics.csv",
        "summary": "summary.json",
    }
    _json_dump(manifest, out_dir / "manifest.json")

    if report.failure is not None:
        print(
            f"numerical failure ({report.failure['kind']}): {report.failure['message']}",
            file=sys.stderr,
        )
        print(f"partial artifacts preserved in {out_dir}", file=sys.stderr)
        return EXIT_NUMERICAL

    s = report.summary
    print(
        f"ok: t_end={s['t_final']:g} energy_drift={s['energy']['max_rel_drift']:.3e} "
        f"all_ok={s['all_ok']}"
    )
    print(f"artifacts written to {out_dir}")
    return EXIT_OK


def validate_command(cfg: RunConfig) -> int:
    """Run every structural check and print one line per check; no stepping.

    Unlike ``run``, a failed check is reported rather than raised, so all
    checks are always listed.
    """
    from .config import build_initial_v, build_metric_object, build_profile
    from .diagnostics import GridGeometry, parity_tolerance
    from .reduced_euler import circle_grid, interval_grid

    lines: list[str] = []
    ok = True

    profile_usable = True
    if cfg.kind == "homogeneous":
        metric = build_metric_object(cfg)
        reports = (
            validate_structure(metric.split.algebra),
            check_reductive_split(metric.split),
            monte_carlo_fixed_check(metric.split, seed=cfg.seed),
            check_metric_invariance(metric),
        )
    else:
        profile = build_profile(cfg)
        profile_report = validate_profile(profile)
        profile_usable = profile_report["gram_positive_on_probe_grid"].passed
        reports = (
            validate_structure(profile.split.algebra),
            check_reductive_split(profile.split),
            monte_carlo_fixed_check(profile.split, seed=cfg.seed),
            profile_report,
        )
    for rep in reports:
        lines += rep.lines()
        ok &= rep.passed

    if cfg.kind != "homogeneous" and profile_usable:
        n = int(cfg.solver["N"])
        grid = interval_grid(profile, n) if cfg.kind == "interval" else circle_grid(profile, n)
        try:
            v0 = build_initial_v(cfg, profile, grid)
        except ConfigError as exc:
            ok = False
            lines += [f"FAIL  initial_data: {m}" for m in exc.messages]
            v0 = None
        if v0 is not None:
            geom = GridGeometry(profile, grid)
            tol = parity_tolerance(geom)
            for (alpha, beta, misfit), win in zip(geom.taylor_fit(v0), geom.singular_windows):
                scale = max(1.0, float(abs(v0[win["slice"]]).max()))
                passed = misfit / scale < tol
                ok &= passed
                lines.append(
                    f"{'PASS' if passed else 'FAIL'}  initial_parity_at_r={win['side']:g}: "
                    f"residual={misfit / scale:.3e} (tol={tol:.1e})"
                )

    for line in lines:
        print(line)
    print("validation " + ("passed" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_VALIDATION


def examples_command(action: str) -> int:
    if action != "list":
        print(f"error: unknown examples action {action!r}", file=sys.stderr)
        return EXIT_VALIDATION
    for line in catalog.listing_lines():
        print(line)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coho-euler",
        description="Reduced incompressible Euler flows on cohomogeneity-one manifolds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a configured problem")
    p_run.add_argument("--config", required=True, help="path to a JSON run config")
    p_run.add_argument("--out", default=None, help="output directory")

    p_val = sub.add_parser("validate", help="structural checks without integration")
    p_val.add_argument("--config", required=True, help="path to a JSON run config")

    p_ex = sub.add_parser("examples", help="bundled example catalog")
    p_ex.add_argument("action", choices=["list"], help="catalog action")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "examples":
            return examples_command(args.action)

        try:
            cfg = parse_config(args.config)
        except (json.JSONDecodeError, OSError) as exc:
            print(f"parse error: {exc}", file=sys.stderr)
            return EXIT_PARSE

        if args.command == "validate":
            return validate_command(cfg)

        if args.out is not None:
            out_dir = Path(args.out)
        elif cfg.output.get("directory"):
            out_dir = Path(cfg.output["directory"])
            if not out_dir.is_absolute() and cfg.source_path is not None:
                out_dir = Path.cwd() / out_dir
        else:
            out_dir = Path.cwd() / f"coho_euler_run_{cfg.hash()[:8]}"
        return run_command(cfg, out_dir)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"validation error: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CohoEulerError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
