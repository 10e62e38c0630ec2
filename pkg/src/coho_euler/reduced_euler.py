"""The three reduced Euler integrators and pressure reconstruction.

Homogeneous runs integrate du/dt = -nabla_u u on a single orbit. Interval
runs have no horizontal component at all, so each grid node evolves by the
orbit equation independently. Circle runs couple a horizontal amplitude
c(t) to the vertical coefficients through

    dv/dt = 2 h S_r v - h dv/dr - nabla^r_v v,      h = c(t) h0(r),
    dc/dt = -(int q dr) / (int h0 dr),              q = g_r(S_r v, v),

where the dc/dt closure is exactly the solvability condition that keeps the
reconstructed pressure periodic (the int h0 h0' dr term drops by
periodicity). Both integrals use the same quadrature weights, so the
periodicity residual cancels to rounding and any externally injected dc/dt
offset shows up immediately.

Time stepping is fixed-step classical RK4; identical inputs give
bit-identical outputs regardless of the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coho_geometry import CIRCLE, INTERVAL, SINGULAR, MetricProfile
from .diagnostics import (
    PERIODICITY_TOL,
    GridGeometry,
    RunRecorder,
    conservation_report,
)
from .errors import InputError, NumericalFailureError
from .homogeneous_geometry import InvariantMetric, euler_arnold_rhs
from .numerics import as_float_array, cumulative_integral

CFL_EPS = 1e-12


@dataclass
class SolverConfig:
    """Fixed-step RK4 configuration; the scheme field exists only as a guard."""

    dt: float
    t_end: float
    cfl_guard: float = 0.5
    scheme: str = "rk4"
    snapshot_cadence: int | None = None
    diagnostics_cadence: int = 1
    dcdt_offset: float = 0.0  # test-only fault injection into the c closure

    def __post_init__(self):
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise InputError("dt must be a positive real")
        if not (self.t_end > 0 and np.isfinite(self.t_end)):
            raise InputError("t_end must be a positive real")
        if not (self.cfl_guard > 0):
            raise InputError("cfl_guard must be positive")
        if self.scheme != "rk4":
            raise InputError(f"unsupported scheme {self.scheme!r}")
        if self.diagnostics_cadence < 1:
            raise InputError("diagnostics_cadence must be >= 1")

    def n_steps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if n < 1 or abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, abs(self.t_end)):
            raise InputError("t_end must be a positive integer multiple of dt")
        return n


@dataclass
class ReducedState:
    """Reduced velocity at one instant.

    ``c`` is the horizontal amplitude (None for homogeneous runs, 0.0 on
    intervals); ``v`` holds vertical coefficients per grid node, or the
    single coefficient vector for homogeneous runs (grid is None there).
    """

    t: float
    c: float | None
    v: np.ndarray
    grid: np.ndarray | None

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        if not np.all(np.isfinite(self.v)):
            raise InputError("state coefficients contain non-finite entries")
        if self.c is not None and not np.isfinite(self.c):
            raise InputError("horizontal amplitude is not finite")


@dataclass
class PressureField:
    """Pressure samples on the grid, gauged to zero at the first node."""

    samples: np.ndarray
    periodicity_residual: float = 0.0


def circle_grid(profile: MetricProfile, n: int) -> np.ndarray:
    if n < 16 or n % 2:
        raise InputError(f"circle grids need an even node count >= 16, got {n}")
    return profile.length * np.arange(n) / n


def interval_grid(profile: MetricProfile, n: int) -> np.ndarray:
    """State nodes of the uniform closed grid: singular endpoints excluded."""
    left, right = profile.orbit_space.endpoint_kinds
    if n < 6:
        raise InputError(f"interval grids need at least 6 state nodes, got {n}")
    m = n + (left == SINGULAR) + (right == SINGULAR)
    closed = np.linspace(0.0, profile.length, m)
    lo = 1 if left == SINGULAR else 0
    return closed[lo : lo + n]


@dataclass
class HomogeneousProblem:
    metric: InvariantMetric
    x0: np.ndarray
    kind: str = field(default="homogeneous", init=False)

    def __post_init__(self):
        self.x0 = as_float_array(self.x0, (self.metric.split.dim_m,), "x0")

    def initial_state(self) -> ReducedState:
        return ReducedState(0.0, None, self.x0.copy(), None)


@dataclass
class IntervalProblem:
    profile: MetricProfile
    v0: np.ndarray
    kind: str = field(default="interval", init=False)

    def __post_init__(self):
        if self.profile.orbit_space.kind != INTERVAL:
            raise InputError("IntervalProblem needs an interval orbit space")
        self.v0 = np.asarray(self.v0, dtype=float)
        if self.v0.ndim != 2 or self.v0.shape[1] != self.profile.dim:
            raise InputError(f"v0 must have shape (n, {self.profile.dim})")
        self.grid = interval_grid(self.profile, self.v0.shape[0])

    def initial_state(self) -> ReducedState:
        return ReducedState(0.0, 0.0, self.v0.copy(), self.grid.copy())


@dataclass
class CircleProblem:
    profile: MetricProfile
    c0: float
    v0: np.ndarray
    kind: str = field(default="circle", init=False)

    def __post_init__(self):
        if self.profile.orbit_space.kind != CIRCLE:
            raise InputError("CircleProblem needs a circle orbit space")
        self.v0 = np.asarray(self.v0, dtype=float)
        if self.v0.ndim != 2 or self.v0.shape[1] != self.profile.dim:
            raise InputError(f"v0 must have shape (n, {self.profile.dim})")
        self.grid = circle_grid(self.profile, self.v0.shape[0])

    def initial_state(self) -> ReducedState:
        return ReducedState(0.0, float(self.c0), self.v0.copy(), self.grid.copy())


# -- right-hand sides ---------------------------------------------------------


class _HomogeneousDisc:
    kind = "homogeneous"

    def __init__(self, metric: InvariantMetric):
        self.metric = metric
        gamma = metric.connection_tensor()
        self.d = gamma.shape[0]
        self._g2 = np.ascontiguousarray(gamma.reshape(self.d, self.d * self.d))

    def close(self):
        pass

    def rhs(self, c, x):
        m = (x @ self._g2).reshape(self.d, self.d)
        return 0.0, -(x @ m)


class _GridDisc:
    def __init__(self, geom: GridGeometry, workers: int = 1):
        self.geom = geom
        split = geom.profile.split
        n, d = geom.n, geom.d
        self.gamma = np.empty((n, d, d, d))
        for j in range(n):
            self.gamma[j] = InvariantMetric(split, geom.gram[j]).connection_tensor()
        self.has_gamma = bool(np.max(np.abs(self.gamma)) > 0.0)
        self.has_S = bool(np.max(np.abs(geom.S)) > 0.0)
        self.workers = max(1, int(workers))
        self._pool = None
        self._chunks = None
        if self.workers > 1 and self.has_gamma:
            bounds = np.linspace(0, n, self.workers + 1).astype(int)
            self._chunks = [
                slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a
            ]
            self._pool = ThreadPoolExecutor(max_workers=len(self._chunks))

    def close(self):
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def _gamma_vv(self, v):
        # node-local contraction; chunking over nodes cannot change any value
        if not self.has_gamma:
            return np.zeros_like(v)
        if self._pool is None:
            return np.einsum("jabc,ja,jb->jc", self.gamma, v, v)
        out = np.empty_like(v)

        def work(sl):
            out[sl] = np.einsum("jabc,ja,jb->jc", self.gamma[sl], v[sl], v[sl])

        list(self._pool.map(work, self._chunks))
        return out


class _IntervalDisc(_GridDisc):
    kind = "interval"

    def rhs(self, c, v):
        return 0.0, -self._gamma_vv(v)


class _CircleDisc(_GridDisc):
    kind = "circle"

    def __init__(self, geom: GridGeometry, workers: int = 1, dcdt_offset: float = 0.0):
        super().__init__(geom, workers)
        self.dcdt_offset = float(dcdt_offset)

    def q_samples(self, v):
        return np.einsum("ja,jab,jb->j", v, self.geom.gramS, v)

    def dcdt(self, v):
        if not self.has_S:
            return self.dcdt_offset
        q_int = float(np.sum(self.geom.weights * self.q_samples(v)))
        return -q_int / self.geom.int_h0 + self.dcdt_offset

    def rhs(self, c, v):
        geom = self.geom
        h = c * geom.h0
        hcol = h[:, None]
        dv = -hcol * geom.deriv(v)
        if self.has_S:
            dv += (2.0 * hcol) * np.einsum("jab,jb->ja", geom.S, v)
        if self.has_gamma:
            dv -= self._gamma_vv(v)
        return self.dcdt(v), dv


def homogeneous_rhs(metric: InvariantMetric, X) -> np.ndarray:
    """du/dt for the orbit problem; delegates to the Euler-Arnold field."""
    return euler_arnold_rhs(metric, X)


def interval_rhs(state: ReducedState, profile: MetricProfile) -> np.ndarray:
    """Node-decoupled dv/dt = -nabla^r_v v on an interval of orbits."""
    disc = _IntervalDisc(GridGeometry(profile, state.grid))
    return disc.rhs(0.0, state.v)[1]


def circle_rhs(state: ReducedState, profile: MetricProfile, dcdt_offset: float = 0.0):
    """(dc/dt, dv/dt) for the circle problem."""
    disc = _CircleDisc(GridGeometry(profile, state.grid), dcdt_offset=dcdt_offset)
    return disc.rhs(float(state.c), state.v)


def _pressure_gradient(geom: GridGeometry, c: float, v: np.ndarray, dcdt: float):
    """Radial pressure gradient samples and the loop (periodicity) residual."""
    q = np.einsum("ja,jab,jb->j", v, geom.gramS, v)
    if geom.kind == CIRCLE:
        pprime = -dcdt * geom.h0 - (c * c) * geom.h0 * geom.h0_prime - q
        loop = float(np.sum(geom.weights * pprime))
        scale = max(geom.profile.length * float(np.max(np.abs(pprime))), 1e-30)
        residual = 0.0 if loop == 0.0 else abs(loop) / scale
    else:
        pprime = -q
        residual = 0.0
    return pprime, residual


def _pressure(geom: GridGeometry, c: float, v: np.ndarray, dcdt: float):
    """Pressure samples (gauge p(r_0) = 0) and the periodicity residual."""
    pprime, residual = _pressure_gradient(geom, c, v, dcdt)
    return cumulative_integral(pprime, geom.dr), residual


def pressure_reconstruct(
    state: ReducedState,
    profile: MetricProfile,
    dcdt: float = 0.0,
    check: bool = True,
) -> PressureField:
    """Integrate the radial momentum balance to the pressure, gauge p(r_0)=0."""
    geom = GridGeometry(profile, state.grid)
    c = 0.0 if state.c is None else float(state.c)
    p, residual = _pressure(geom, c, state.v, dcdt)
    if check and residual > PERIODICITY_TOL:
        raise NumericalFailureError(
            f"pressure periodicity residual {residual:.3e} exceeds {PERIODICITY_TOL:.1e} "
            "(dc/dt inconsistent with the periodic closure)",
            kind="pressure_periodicity",
            t=state.t,
            detail={"residual": residual},
        )
    return PressureField(p, residual)


def trajectory_pressures(problem, snapshots) -> list[PressureField]:
    """Pressure fields for a trajectory, sharing one discretisation build."""
    if problem.kind == "homogeneous":
        return [PressureField(np.zeros(1)) for _ in snapshots]
    geom = GridGeometry(problem.profile, problem.grid)
    if problem.kind == "circle":
        disc = _CircleDisc(geom)
        out = []
        for s in snapshots:
            p, residual = _pressure(geom, float(s.c), s.v, disc.dcdt(s.v))
            out.append(PressureField(p, residual))
        return out
    return [PressureField(_pressure(geom, 0.0, s.v, 0.0)[0]) for s in snapshots]


# -- time stepping ------------------------------------------------------------


def _check_stage(dc, dv, stage, step, t):
    # cheap screen first; a non-finite entry always poisons the sum
    if np.isfinite(dc) and np.isfinite(float(np.sum(dv))):
        return
    if np.isfinite(dc) and bool(np.all(np.isfinite(dv))):
        return  # finite values whose sum overflowed
    raise NumericalFailureError(
        f"non-finite right-hand side at RK4 stage {stage}",
        kind="non_finite",
        step=step,
        t=t,
        detail={"stage": stage},
    )


def _rk4(disc, c, v, dt, step, t):
    rhs = disc.rhs
    k1c, k1v = rhs(c, v)
    _check_stage(k1c, k1v, 1, step, t)
    k2c, k2v = rhs(c + 0.5 * dt * k1c, v + (0.5 * dt) * k1v)
    _check_stage(k2c, k2v, 2, step, t)
    k3c, k3v = rhs(c + 0.5 * dt * k2c, v + (0.5 * dt) * k2v)
    _check_stage(k3c, k3v, 3, step, t)
    k4c, k4v = rhs(c + dt * k3c, v + dt * k3v)
    _check_stage(k4c, k4v, 4, step, t)
    c_new = c + (dt / 6.0) * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
    v_new = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return c_new, v_new


def _cfl_check(disc, config, c, step, t):
    if disc.kind != "circle":
        return
    hmax = abs(c) * disc.geom.h0_max
    limit = config.cfl_guard * disc.geom.dr / max(hmax, CFL_EPS)
    if config.dt > limit:
        raise NumericalFailureError(
            f"dt = {config.dt:.3e} violates the CFL guard {limit:.3e} "
            f"(|h|max = {hmax:.3e}, dr = {disc.geom.dr:.3e})",
            kind="cfl",
            step=step,
            t=t,
            detail={"dt": config.dt, "limit": limit},
        )


def step_rk4(state: ReducedState, geometry, config: SolverConfig) -> ReducedState:
    """One deterministic RK4 step of the appropriate reduced system."""
    if isinstance(geometry, InvariantMetric):
        disc = _HomogeneousDisc(geometry)
        c, v = 0.0, state.v
    else:
        geom = GridGeometry(geometry, state.grid)
        if geom.kind == CIRCLE:
            disc = _CircleDisc(geom, dcdt_offset=config.dcdt_offset)
            c, v = float(state.c), state.v
        else:
            disc = _IntervalDisc(geom)
            c, v = 0.0, state.v
    _cfl_check(disc, config, c, 0, state.t)
    c_new, v_new = _rk4(disc, c, v, config.dt, 0, state.t)
    if isinstance(geometry, InvariantMetric):
        return ReducedState(state.t + config.dt, None, v_new, None)
    keep_c = c_new if geom.kind == CIRCLE else 0.0
    return ReducedState(state.t + config.dt, keep_c, v_new, state.grid)


def worker_count() -> int:
    """Worker cap from COHO_EULER_WORKERS; results never depend on it."""
    raw = os.environ.get("COHO_EULER_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise InputError(f"COHO_EULER_WORKERS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise InputError(f"COHO_EULER_WORKERS must be a positive integer, got {raw!r}")
    return n


def integrate(problem, config: SolverConfig, workers: int | None = None):
    """Run the problem to t_end; returns (snapshots, report).

    A CFL or non-finite failure ends the run early with the partial
    trajectory preserved and a failure record in the report; it never exits
    silently.
    """
    workers = worker_count() if workers is None else max(1, int(workers))
    n_steps = config.n_steps()
    dt = config.dt
    snap_every = config.snapshot_cadence
    if snap_every is None:
        snap_every = max(1, int(round(1.0 / dt)))
    diag_every = config.diagnostics_cadence

    if problem.kind == "homogeneous":
        disc = _HomogeneousDisc(problem.metric)
        recorder = RunRecorder("homogeneous", None, problem.metric)
        geom = None
        c = 0.0
        v = problem.x0.copy()
        grid = None
    else:
        geom = GridGeometry(problem.profile, problem.grid)
        if problem.kind == "circle":
            disc = _CircleDisc(geom, workers=workers, dcdt_offset=config.dcdt_offset)
            c = float(problem.c0)
        else:
            disc = _IntervalDisc(geom, workers=workers)
            c = 0.0
        recorder = RunRecorder(problem.kind, geom, None)
        v = problem.v0.copy()
        grid = problem.grid

    c_bound = None
    if problem.kind == "circle":
        e0 = geom.energy(c, v)
        c_bound = 2.0 * e0 / geom.int_h02_vol

    def make_state(t, cc, vv):
        if problem.kind == "homogeneous":
            return ReducedState(t, None, vv.copy(), None)
        keep = cc if problem.kind == "circle" else 0.0
        return ReducedState(t, keep, vv.copy(), grid)

    def record_with_pressure_watchdog(t, cc, vv):
        # the offending row is recorded before raising: failures leave a
        # diagnostic tail, never a silent exit
        residual = 0.0
        if problem.kind == "circle":
            _, residual = _pressure_gradient(geom, cc, vv, disc.dcdt(vv))
        recorder.record(t, cc, vv, residual)
        if residual > PERIODICITY_TOL:
            raise NumericalFailureError(
                f"pressure periodicity residual {residual:.3e} exceeds "
                f"{PERIODICITY_TOL:.1e}",
                kind="pressure_periodicity",
                t=t,
                detail={"residual": residual},
            )

    snapshots = []
    failure = None
    t_now = 0.0
    try:
        record_with_pressure_watchdog(0.0, c, v)
        snapshots.append(make_state(0.0, c, v))
        for step in range(n_steps):
            _cfl_check(disc, config, c, step, t_now)
            c, v = _rk4(disc, c, v, dt, step, t_now)
            t_now = (step + 1) * dt
            last = step + 1 == n_steps
            if (step + 1) % diag_every == 0 or last:
                record_with_pressure_watchdog(t_now, c, v)
            if (step + 1) % snap_every == 0 or last:
                snapshots.append(make_state(t_now, c, v))
    except NumericalFailureError as exc:
        if exc.t is None:
            exc.t = t_now
        failure = exc.record()
        snapshots.append(make_state(t_now, c, v))
    finally:
        disc.close()

    report = recorder.finish(failure=failure, c_bound=c_bound)
    conservation_report(report)
    return snapshots, report
