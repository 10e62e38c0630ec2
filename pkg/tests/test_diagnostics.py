import numpy as np
import pytest

from coho_euler import (
    CircleProblem,
    InputError,
    IntervalProblem,
    InvariantMetric,
    ReducedState,
    SolverConfig,
    c1_monitor,
    conservation_report,
    divergence_residual,
    endpoint_taylor_monitor,
    energy,
    integrate,
    pointwise_speed,
    warped_torus,
)
from coho_euler.diagnostics import GridGeometry, parity_tolerance, write_diagnostics_csv
from coho_euler.errors import ConfigError
from coho_euler.reduced_euler import circle_grid, interval_grid


def interval_state(profile, values, n=128):
    grid = interval_grid(profile, n)
    return ReducedState(0.0, 0.0, np.tile(values, (n, 1)), grid)


def test_energy_zero_state(flat_torus):
    grid = circle_grid(flat_torus, 32)
    state = ReducedState(0.0, 0.0, np.zeros((32, 2)), grid)
    assert energy(state, flat_torus) == 0.0


def test_energy_flat_torus_pure_horizontal(flat_torus):
    grid = circle_grid(flat_torus, 64)
    state = ReducedState(0.0, 1.0, np.zeros((64, 2)), grid)
    assert abs(energy(state, flat_torus) - 0.5) < 1e-14


def test_energy_round_s3_t2_quadrature(round_s3_t2):
    # 2E = int_0^{pi/2} cos^2 r * (sin r cos r) dr = 1/4
    state = interval_state(round_s3_t2, [1.0, 0.0], n=128)
    assert abs(2.0 * energy(state, round_s3_t2) - 0.25) < 1e-8


def test_energy_homogeneous(rigid_body_metric):
    state = ReducedState(0.0, None, np.array([1.0, 0.0, 1.0]), None)
    assert abs(energy(state, rigid_body_metric) - 0.5 * (1.0 + 3.0)) < 1e-15


def test_pointwise_speed_examples(round_s3_t2, flat_torus):
    zero = interval_state(round_s3_t2, [0.0, 0.0], n=16)
    assert pointwise_speed(zero, round_s3_t2, 3) == 0.0

    # N = 127 interior nodes puts a node exactly at pi/4
    a, b = 1.5, -0.4
    state = interval_state(round_s3_t2, [a, b], n=127)
    j = 63
    assert abs(state.grid[j] - np.pi / 4) < 1e-12
    want = np.sqrt((a * a + b * b) / 2.0)
    assert abs(pointwise_speed(state, round_s3_t2, j) - want) < 1e-12

    grid = circle_grid(flat_torus, 32)
    horiz = ReducedState(0.0, 2.0, np.zeros((32, 2)), grid)
    assert abs(pointwise_speed(horiz, flat_torus, 5) - 2.0) < 1e-15


def test_pointwise_speed_index_error(flat_torus):
    grid = circle_grid(flat_torus, 32)
    state = ReducedState(0.0, 0.0, np.zeros((32, 2)), grid)
    with pytest.raises(InputError):
        pointwise_speed(state, flat_torus, 32)


def test_c1_monitor_zero_state(round_s3_t2):
    state = interval_state(round_s3_t2, [0.0, 0.0], n=16)
    assert c1_monitor(state, round_s3_t2) == 0.0


def test_c1_monitor_constant_on_steady_run(round_s3_t2):
    prob = IntervalProblem(round_s3_t2, np.tile([1.0, 2.0], (64, 1)))
    _, report = integrate(prob, SolverConfig(dt=1e-2, t_end=1.0))
    c1 = np.asarray(report.series["c1_monitor"])
    assert np.max(np.abs(c1 - c1[0])) < 1e-10


def test_c1_monitor_constant_under_transport(flat_torus):
    n = 128
    grid = circle_grid(flat_torus, n)
    v0 = np.zeros((n, 2))
    v0[:, 0] = np.sin(2 * np.pi * grid)
    prob = CircleProblem(flat_torus, 1.0, v0)
    _, report = integrate(prob, SolverConfig(dt=1e-3, t_end=1.0))
    c1 = np.asarray(report.series["c1_monitor"])
    # sup-over-grid of a sliding profile wobbles by O((pi/N)^2) between nodes
    assert np.max(np.abs(c1 - c1[0])) / c1[0] < 1e-3
    # after one full period the phase realigns with the grid exactly
    assert abs(c1[-1] - c1[0]) / c1[0] < 1e-6


def test_divergence_residual_interval(round_s3_t2):
    state = interval_state(round_s3_t2, [0.7, -1.1], n=64)
    assert divergence_residual(state, round_s3_t2) < 1e-10


def test_divergence_residual_circle_h0():
    # bundled-scale profile: the 4th-order stencil floor sits well under 1e-8
    wt = warped_torus(1.0, [[0.0, 0.08, -0.05]])
    grid = circle_grid(wt, 256)
    state = ReducedState(0.0, 1.0, np.zeros((256, 1)), grid)
    assert divergence_residual(state, wt) < 1e-8


def test_divergence_residual_detects_constant_h():
    # constant horizontal amplitude on a variable-volume circle: not solenoidal
    wt = warped_torus(1.0, [[0.0, 0.8, 0.0]])
    grid = circle_grid(wt, 256)
    state = ReducedState(0.0, 0.0, np.zeros((256, 1)), grid)
    res = divergence_residual(state, wt, h_samples=np.ones(256))
    assert res > 0.1


def test_endpoint_taylor_steady(round_s3_t2):
    prob = IntervalProblem(round_s3_t2, np.tile([1.0, 2.0], (64, 1)))
    snaps, _ = integrate(prob, SolverConfig(dt=1e-2, t_end=1.0))
    mon = endpoint_taylor_monitor(snaps, round_s3_t2)
    assert np.max(np.abs(mon["alpha"] - mon["alpha"][0])) < 1e-12
    assert np.max(np.abs(mon["beta"] - mon["beta"][0])) < 1e-12
    assert mon["bounded"]


def test_endpoint_taylor_zero_state(round_s3_t2):
    grid = interval_grid(round_s3_t2, 32)
    state = ReducedState(0.0, 0.0, np.zeros((32, 2)), grid)
    mon = endpoint_taylor_monitor([state], round_s3_t2)
    assert np.max(np.abs(mon["alpha"])) == 0.0
    assert np.max(np.abs(mon["beta"])) == 0.0
    assert np.max(mon["misfit"]) == 0.0


def test_endpoint_taylor_flags_odd_parity(round_s3_t2):
    grid = interval_grid(round_s3_t2, 128)
    v = np.zeros((128, 2))
    v[:, 0] = grid  # v_1 = r: odd about the left singular endpoint
    state = ReducedState(0.0, 0.0, v, grid)
    mon = endpoint_taylor_monitor([state], round_s3_t2)
    geom = GridGeometry(round_s3_t2, grid)
    assert mon["misfit"][0, 0] > parity_tolerance(geom)
    # constants stay far below the parity cut
    flat = ReducedState(0.0, 0.0, np.tile([1.0, 2.0], (128, 1)), grid)
    mon2 = endpoint_taylor_monitor([flat], round_s3_t2)
    assert np.max(mon2["misfit"]) < 1e-12


def test_endpoint_taylor_needs_singular_endpoint(flat_torus):
    grid = circle_grid(flat_torus, 32)
    state = ReducedState(0.0, 0.0, np.zeros((32, 2)), grid)
    with pytest.raises(ConfigError):
        endpoint_taylor_monitor([state], flat_torus)


def test_conservation_report_steady_run(round_s3_t2):
    prob = IntervalProblem(round_s3_t2, np.tile([1.0, 2.0], (32, 1)))
    _, report = integrate(prob, SolverConfig(dt=1e-2, t_end=1.0))
    s = report.summary
    assert s["energy"]["max_rel_drift"] == 0.0
    assert s["pointwise_speed"]["max_drift"] == 0.0
    assert s["endpoint_taylor"]["ok"]
    assert s["all_ok"]


def test_conservation_report_flags_fault_injection(flat_torus):
    n = 32
    grid = circle_grid(flat_torus, n)
    v0 = np.zeros((n, 2))
    v0[:, 0] = 0.1 * np.sin(2 * np.pi * grid)
    prob = CircleProblem(flat_torus, 0.5, v0)
    _, report = integrate(prob, SolverConfig(dt=1e-3, t_end=0.1, dcdt_offset=1.0))
    s = report.summary
    assert report.failure is not None
    assert not s["pressure_periodicity"]["ok"]
    assert not s["all_ok"]


def test_divergence_invariant_under_integration():
    # solenoidality is structural: the residual must not drift with time
    wt = warped_torus(1.0, [[0.0, 0.06, -0.03], [0.1, -0.04, 0.02]])
    n = 128
    grid = circle_grid(wt, n)
    v0 = np.zeros((n, 2))
    v0[:, 0] = 0.2 * np.sin(2 * np.pi * grid)
    v0[:, 1] = 0.1 * np.cos(2 * np.pi * grid)
    prob = CircleProblem(wt, 0.4, v0)
    _, report = integrate(prob, SolverConfig(dt=2e-3, t_end=1.0))
    res = np.asarray(report.series["div_residual"])
    assert np.max(res) < 1e-8
    assert np.max(np.abs(res - res[0])) < 1e-8


def test_component_energies_recorded(flat_torus):
    prob = CircleProblem(flat_torus, 0.0, np.tile([1.0, 0.5], (32, 1)))
    _, report = integrate(prob, SolverConfig(dt=1e-2, t_end=0.1))
    comp = np.asarray(report.series["component_energy"])
    assert comp.shape[1] == 2
    assert np.allclose(comp[0], [0.5, 0.125])


def test_recorder_rows_match_public_diagnostics():
    # the fast in-loop recorder and the public one-shot functions must agree
    wt = warped_torus(1.0, [[0.0, 0.04, -0.02], [0.1, 0.02, 0.01]])
    n = 64
    grid = circle_grid(wt, n)
    v0 = np.zeros((n, 2))
    v0[:, 0] = 0.2 * np.sin(2 * np.pi * grid)
    v0[:, 1] = 0.1 + 0.05 * np.cos(2 * np.pi * grid)
    prob = CircleProblem(wt, 0.3, v0)
    snaps, report = integrate(prob, SolverConfig(dt=2e-3, t_end=0.1, snapshot_cadence=50))
    final = snaps[-1]
    assert abs(final.t - report.series["t"][-1]) < 1e-12
    assert abs(energy(final, wt) - report.series["E"][-1]) < 1e-13
    assert abs(pointwise_speed(final, wt) - report.series["max_speed"][-1]) < 1e-13
    assert abs(c1_monitor(final, wt) - report.series["c1_monitor"][-1]) < 1e-12
    assert abs(divergence_residual(final, wt) - report.series["div_residual"][-1]) < 1e-12


def test_discrete_energy_exchange_identity():
    # d/dt (v' G v) = -h d_r (v' G v) + 2 h g(S v, v) along a real trajectory,
    # checked with a centred difference in time; pins the sign of the
    # shape-operator exchange term against the integrated dynamics
    wt = warped_torus(1.0, [[0.0, 0.05, -0.03], [0.1, 0.03, 0.02]])
    n = 128
    grid = circle_grid(wt, n)
    v0 = np.zeros((n, 2))
    v0[:, 0] = 0.3 * np.sin(2 * np.pi * grid)
    v0[:, 1] = 0.2 * np.cos(2 * np.pi * grid)
    prob = CircleProblem(wt, 0.4, v0)
    dt = 1e-4
    snaps, _ = integrate(prob, SolverConfig(dt=dt, t_end=10 * dt, snapshot_cadence=1))
    geom = GridGeometry(wt, grid)

    def vG(state):
        return np.einsum("ja,jab,jb->j", state.v, geom.gram, state.v)

    mid = snaps[5]
    lhs = (vG(snaps[6]) - vG(snaps[4])) / (2 * dt)
    h = float(mid.c) * geom.h0
    Sv = np.einsum("jab,jb->ja", geom.S, mid.v)
    q = np.einsum("ja,jab,jb->j", Sv, geom.gram, mid.v)
    rhs = -h * geom.deriv(vG(mid)) + 2.0 * h * q
    scale = max(1.0, float(np.max(np.abs(rhs))))
    assert np.max(np.abs(lhs - rhs)) / scale < 1e-5
    # the opposite exchange sign is far outside the error band
    wrong = -h * geom.deriv(vG(mid)) - 2.0 * h * q
    assert np.max(np.abs(lhs - wrong)) / scale > 1e-2


def test_report_series_aligned_even_after_failure(flat_torus):
    prob = CircleProblem(flat_torus, 5.0, np.zeros((32, 2)))  # CFL violation
    _, report = integrate(prob, SolverConfig(dt=0.05, t_end=1.0))
    lengths = {len(v) for v in report.series.values()}
    assert len(lengths) == 1
    for key, vals in report.series.items():
        assert np.all(np.isfinite(np.asarray(vals, dtype=float).ravel())), key


def test_diagnostics_csv_roundtrip(tmp_path, round_s3_t2):
    prob = IntervalProblem(round_s3_t2, np.tile([1.0, 2.0], (32, 1)))
    _, report = integrate(prob, SolverConfig(dt=1e-2, t_end=0.1))
    path = tmp_path / "diag.csv"
    write_diagnostics_csv(report, path)
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    assert header[:7] == ["t", "E", "c", "max_speed", "c1_monitor", "div_residual", "p_periodicity"]
    assert "alpha_1" in header and "beta_2" in header
    assert len(lines) == 1 + len(report.series["t"])
    # byte determinism of the writer
    path2 = tmp_path / "diag2.csv"
    write_diagnostics_csv(report, path2)
    assert path.read_bytes() == path2.read_bytes()
