"""Tests for the path-simulation engine."""

import io

import numpy as np
import pytest

from mucogarch import kronalg as ka, levy, sim
from mucogarch.exceptions import NotPositiveSemidefiniteError


def k1_params():
    return sim.ModelParams(
        a=np.array([[0.3, 0.05], [0.0, 0.25]]),
        b=np.array([[-1.0, 0.3], [0.0, -2.0]]),
        c=np.array([[1.0, 0.25], [0.25, 1.5]]),
    )


def cp_spec(rate, dim=2, sigma_w=0.0, eps=None):
    return levy.LevySpec(dim=dim, rate=rate, epsilon=eps or levy.constant_mix(1.0), sigma_w=sigma_w)


# ---------------------------------------------------------------------------
# parameter validation


def test_model_params_validation():
    with pytest.raises(ValueError):
        sim.ModelParams(a=np.eye(2), b=np.eye(2), c=np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        sim.ModelParams(a=np.eye(2), b=np.eye(2), c=np.diag([1.0, 0.0]))
    # degenerate baseline allowed only when asked for
    p = sim.ModelParams(a=np.eye(2), b=-np.eye(2), c=np.ones((2, 2)), allow_degenerate_c=True)
    assert p.dim == 2
    with pytest.raises(ValueError):
        sim.ModelParams(a=np.eye(2), b=np.eye(3), c=np.eye(2))


# ---------------------------------------------------------------------------
# flow and jump kernels


def test_flow_zero_time():
    y = np.array([[1.0, 0.2], [0.2, 2.0]])
    assert np.allclose(sim.flow_y(y, -np.eye(2), 0.0), y)


def test_flow_scalar_drift_factor():
    rng = np.random.default_rng(0)
    z = rng.standard_normal((3, 3))
    y = z @ z.T
    out = sim.flow_y(y, -0.7 * np.eye(3), 0.9)
    assert np.allclose(out, np.exp(-2 * 0.7 * 0.9) * y)


def test_flow_preserves_psd():
    rng = np.random.default_rng(1)
    z = rng.standard_normal((3, 3))
    y = z @ z.T
    out = sim.flow_y(y, rng.standard_normal((3, 3)), 0.5)
    assert np.linalg.eigvalsh(out)[0] >= -1e-12


def test_jump_update_degenerate_inputs():
    y = np.array([[0.5, 0.0], [0.0, 0.2]])
    c = np.eye(2)
    assert np.allclose(sim.jump_update(y, c, np.zeros((2, 2)), np.array([1.0, 2.0])), y)
    assert np.allclose(sim.jump_update(y, c, np.eye(2), np.zeros(2)), y)


def test_jump_update_scalar_value():
    out = sim.jump_update(np.array([[0.0]]), np.array([[1.3]]), np.array([[0.6]]), np.array([2.0]))
    assert np.isclose(out[0, 0], 0.6**2 * 1.3 * 4.0)


def test_jump_update_increment_is_rank_one_psd():
    rng = np.random.default_rng(2)
    z = rng.standard_normal((3, 3))
    y = z @ z.T
    a = rng.standard_normal((3, 3))
    x = rng.standard_normal(3)
    inc = sim.jump_update(y, np.eye(3), a, x) - y
    w = np.linalg.eigvalsh(inc)
    assert w[0] >= -1e-12
    assert np.linalg.matrix_rank(inc, tol=1e-10) <= 1


def test_jump_update_rejects_indefinite_covariance():
    with pytest.raises(NotPositiveSemidefiniteError):
        sim.jump_update(np.array([[-2.0]]), np.array([[1.0]]), np.array([[1.0]]), np.array([1.0]))


# ---------------------------------------------------------------------------
# deterministic covariance flow and the cone-exit example


def test_deterministic_flow_cone_exit_value():
    b = np.array([[-0.5 * np.log(10 / 9), 0.0], [1.0, -0.5 * np.log(10 / 9)]])
    params = sim.ModelParams(a=np.zeros((2, 2)), b=b, c=2 * np.eye(2))
    v1 = sim.deterministic_flow_v(0.5 * np.eye(2), params, 1.0)
    x = np.array([1.0, 1.0])
    assert abs(x @ v1 @ x + 11 / 4) < 1e-13
    assert np.linalg.eigvalsh(v1)[0] < 0


def test_deterministic_flow_fixed_point_and_zero_time():
    params = k1_params()
    v0 = params.c.copy()
    assert np.allclose(sim.deterministic_flow_v(v0, params, 3.0), params.c)
    v0 = np.array([[2.0, 0.1], [0.1, 1.0]])
    assert np.allclose(sim.deterministic_flow_v(v0, params, 0.0), v0)


# ---------------------------------------------------------------------------
# path simulation


def test_zero_driver_is_pure_flow():
    params = k1_params()
    grid = np.linspace(0, 2, 21)
    y0 = np.array([[0.5, 0.1], [0.1, 0.4]])
    s = sim.simulate_path(params, cp_spec(rate=0.0), grid, seed=1, y0=y0)
    for k, t in enumerate(grid):
        e = ka.matrix_exp(params.b, t)
        assert np.abs(s.y[k] - e @ y0 @ e.T).max() < 1e-12
    assert np.abs(s.g).max() == 0.0
    assert np.abs(s.v - (params.c + s.y)).max() == 0.0
    assert np.abs(s.g[0]).max() == 0.0


def test_zero_jump_loading_keeps_flow_between_jumps():
    params = sim.ModelParams(a=np.zeros((2, 2)), b=np.array([[-1.0, 0.0], [0.0, -2.0]]), c=np.eye(2))
    grid = np.linspace(0, 5, 26)
    y0 = 0.8 * np.eye(2)
    s = sim.simulate_path(params, cp_spec(rate=3.0), grid, seed=5, y0=y0)
    assert s.jump_times.size > 0
    for k, t in enumerate(grid):
        e = ka.matrix_exp(params.b, t)
        assert np.abs(s.y[k] - e @ y0 @ e.T).max() < 1e-12
    # covariance decays toward the baseline level
    assert np.abs(s.v[-1] - params.c).max() < np.abs(s.v[0] - params.c).max()


def test_psd_and_lower_bound_on_random_paths():
    params = k1_params()
    grid = np.linspace(0, 5, 26)
    rng = np.random.default_rng(3)
    for p in range(20):
        z = rng.standard_normal((2, 2))
        y0 = 0.3 * (z @ z.T)
        s = sim.simulate_path(params, cp_spec(rate=4.0), grid, seed=40 + p, y0=y0)
        assert np.linalg.eigvalsh(s.y)[:, 0].min() >= -1e-10 * np.trace(params.c)
        for k, t in enumerate(grid):
            e = ka.matrix_exp(params.b, t)
            assert np.linalg.eigvalsh(s.y[k] - e @ y0 @ e.T)[0] >= -1e-10


def test_simulation_is_deterministic_in_seed():
    params = k1_params()
    grid = np.linspace(0, 2, 9)
    spec = cp_spec(rate=3.0, sigma_w=0.4)
    a = sim.simulate_path(params, spec, grid, seed=77, steps_per_unit=64)
    b = sim.simulate_path(params, spec, grid, seed=77, steps_per_unit=64)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.g, b.g)


def test_burn_in_shifts_the_recording_window():
    params = k1_params()
    spec = cp_spec(rate=3.0)
    grid = np.linspace(0, 2, 11)
    full = sim.simulate_path(params, spec, np.linspace(0, 6, 31), seed=13)
    shifted = sim.simulate_path(params, spec, grid, seed=13, burn_in=4.0)
    k_full = 20  # t = 4.0 in the full grid
    assert np.abs(shifted.y[0] - full.y[k_full]).max() < 1e-10
    assert np.abs(shifted.g[0]).max() == 0.0
    assert shifted.jump_times.min() > 0.0
    assert shifted.jump_times.max() <= 2.0 + 1e-12


def test_coupled_streams_give_identical_latent_paths():
    params = k1_params()
    spec = cp_spec(rate=3.0)
    stream = levy.sample_jumps(spec, 2.0, seed=21)
    grid = np.linspace(0, 2, 11)
    a = sim.simulate_path(params, None, grid, seed=0, jumps=stream)
    b = sim.simulate_path(params, spec.with_sigma_w(0.0), grid, seed=999, jumps=stream)
    assert np.array_equal(a.y, b.y)


# ---------------------------------------------------------------------------
# replay via the flow-plus-kicks form


def test_shot_noise_no_jumps_is_flow():
    params = k1_params()
    grid = np.linspace(0, 1, 5)
    y0 = 0.4 * np.eye(2)
    s = sim.simulate_path(params, cp_spec(rate=0.0), grid, seed=1, y0=y0)
    out = sim.shot_noise_eval(y0, params, s, 1.0)
    e = ka.matrix_exp(params.b, 1.0)
    assert np.abs(out - e @ y0 @ e.T).max() < 1e-12


def test_shot_noise_single_jump():
    params = k1_params()
    grid = np.linspace(0, 2, 41)
    spec = cp_spec(rate=0.7)
    seed = 5
    s = sim.simulate_path(params, spec, grid, seed=seed, y0=0.2 * np.eye(2))
    while s.jump_times.size != 1:
        seed += 1
        s = sim.simulate_path(params, spec, grid, seed=seed, y0=0.2 * np.eye(2))
    for k in range(grid.size):
        out = sim.shot_noise_eval(0.2 * np.eye(2), params, s, grid[k])
        assert np.abs(out - s.y[k]).max() < 1e-10 * (1 + np.abs(s.y[k]).max())


def test_shot_noise_many_jumps_d3():
    params = sim.ModelParams(
        a=0.25 * np.eye(3) + 0.03, b=np.diag([-1.0, -1.5, -2.0]) + 0.1, c=np.eye(3)
    )
    grid = np.linspace(0, 4, 21)
    s = sim.simulate_path(params, cp_spec(rate=25.0, dim=3), grid, seed=3, y0=0.1 * np.eye(3))
    assert s.jump_times.size >= 80
    for t in (1.0, 2.4, 4.0):
        k = int(np.argmin(np.abs(grid - t)))
        out = sim.shot_noise_eval(0.1 * np.eye(3), params, s, grid[k])
        assert np.abs(out - s.y[k]).max() < 1e-8 * (1 + np.abs(s.y[k]).max())


def test_shot_noise_rejects_times_outside_window():
    params = k1_params()
    s = sim.simulate_path(params, cp_spec(rate=1.0), np.linspace(0, 1, 5), seed=1)
    with pytest.raises(ValueError):
        sim.shot_noise_eval(np.zeros((2, 2)), params, s, 2.0)


# ---------------------------------------------------------------------------
# truncation ladder


def test_ladder_reference_distance_zero_and_monotone():
    params = k1_params()
    spec = cp_spec(rate=10.0, eps=levy.exponential_mix(1.0))
    grid = np.linspace(0, 3, 31)
    rep = sim.cp_approximation_ladder(params, spec, grid, [2.0**-k for k in range(1, 9)], seed=9)
    assert rep.distances[-1] == 0.0
    assert rep.non_increasing


def test_ladder_huge_floor_removes_all_jumps():
    params = k1_params()
    spec = cp_spec(rate=5.0)
    grid = np.linspace(0, 2, 21)
    stream = levy.sample_jumps(spec, 2.0, seed=31)
    big = float(np.linalg.norm(stream.sizes, axis=1).max()) + 1.0
    rep = sim.cp_approximation_ladder(params, None, grid, [big, 1e-9], seed=0, jumps=stream)
    ref = sim.simulate_path(params, None, grid, 0, jumps=stream.truncate(1e-9))
    flow_only = sim.simulate_path(params, None, grid, 0, jumps=stream.truncate(big))
    expected = np.linalg.norm(ref.y - flow_only.y, ord=2, axis=(1, 2)).max()
    assert np.isclose(rep.distances[0], expected)


def test_ladder_rejects_non_decreasing_floors():
    params = k1_params()
    with pytest.raises(ValueError):
        sim.cp_approximation_ladder(params, cp_spec(rate=1.0), np.linspace(0, 1, 5), [0.1, 0.2], seed=0)


# ---------------------------------------------------------------------------
# increments


def test_increments_telescope():
    params = k1_params()
    s = sim.simulate_path(params, cp_spec(rate=6.0, sigma_w=0.2), np.linspace(0, 3, 31), seed=2, steps_per_unit=32)
    inc = sim.aggregate_increments(s, 1.0)
    assert inc.shape == (3, 2)
    assert np.allclose(inc.sum(axis=0), s.g[-1])
    single = sim.aggregate_increments(s, 3.0)
    assert np.allclose(single[0], s.g[-1])


def test_increments_zero_driver():
    params = k1_params()
    s = sim.simulate_path(params, cp_spec(rate=0.0), np.linspace(0, 2, 21), seed=2)
    assert np.abs(sim.aggregate_increments(s, 0.5)).max() == 0.0


def test_increments_misaligned_window_rejected():
    params = k1_params()
    s = sim.simulate_path(params, cp_spec(rate=1.0), np.linspace(0, 1, 11), seed=2)
    with pytest.raises(ValueError):
        sim.aggregate_increments(s, 0.15)


# ---------------------------------------------------------------------------
# structural invariants


def test_scaling_coincidence():
    a = np.array([[0.3, 0.1], [0.0, 0.25]])
    b = np.array([[-1.0, 0.2], [0.1, -1.5]])
    spec = cp_spec(rate=4.0)
    stream = levy.sample_jumps(spec, 3.0, seed=61)
    grid = np.linspace(0, 3, 31)
    scale = 3.5
    ps = sim.ModelParams(a=a, b=b, c=scale * np.eye(2))
    pu = sim.ModelParams(a=a, b=b, c=np.eye(2))
    ss = sim.simulate_path(ps, None, grid, 0, jumps=stream, y0=scale * 0.4 * np.eye(2))
    su = sim.simulate_path(pu, None, grid, 0, jumps=stream, y0=0.4 * np.eye(2))
    assert np.abs(ss.v / scale - su.v).max() < 1e-12 * (1 + np.abs(su.v).max())


def test_diagonal_decoupling_exact_zeros():
    params = sim.ModelParams(
        a=np.diag([0.3, 0.25, 0.2]), b=np.diag([-1.0, -1.4, -1.8]), c=np.diag([1.0, 1.3, 0.8])
    )
    base = levy.sample_jumps(cp_spec(rate=8.0, dim=3), 4.0, seed=62)
    sizes = np.zeros_like(base.sizes)
    for k in range(base.count):
        sizes[k, k % 3] = base.sizes[k, k % 3]
    stream = levy.JumpStream(base.horizon, base.times, sizes)
    s = sim.simulate_path(params, None, np.linspace(0, 4, 41), 0, jumps=stream, y0=np.diag([0.2, 0.1, 0.3]))
    off = s.y.copy()
    off[:, np.arange(3), np.arange(3)] = 0.0
    assert np.abs(off).max() == 0.0


def test_degenerate_baseline_ray_preserved():
    ray = np.array([[1.0, 1.0], [1.0, 1.0]])
    params = sim.ModelParams(a=0.4 * np.eye(2), b=-0.9 * np.eye(2), c=ray, allow_degenerate_c=True)
    s = sim.simulate_path(params, cp_spec(rate=5.0), np.linspace(0, 3, 31), seed=63, y0=0.7 * ray)
    coeffs = np.einsum("tij,ij->t", s.y, ray) / 4.0
    assert np.abs(s.y - coeffs[:, None, None] * ray).max() < 1e-10


# ---------------------------------------------------------------------------
# CSV export


def test_path_csv_round_trip_shape():
    params = k1_params()
    s = sim.simulate_path(params, cp_spec(rate=2.0), np.linspace(0, 1, 5), seed=8)
    buf = io.StringIO()
    s.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,Y_11,Y_21,Y_22,V_11,V_21,V_22,G_1,G_2"
    assert len(lines) == 1 + 5
    jb = io.StringIO()
    s.write_jumps_csv(jb)
    jlines = jb.getvalue().splitlines()
    assert jlines[0].startswith("t,x_1,x_2,Vpre_11")
    assert len(jlines) == 1 + s.jump_times.size
