import numpy as np
import pytest

from tflow import dynamics, models, operators, tf
from tflow.dynamics import TimeGrid, constant_hamiltonian
from tflow.errors import DegenerateDistributionError


def _series(t_start, t_end, n, func):
    grid = TimeGrid(t_start, t_end, n)
    return tf.PopulationSeries(grid, func(grid.times))


def test_tf_from_population_sine_drive():
    series = _series(0.0, np.pi, 2001, lambda t: np.sin(t / 2.0) ** 2)
    dist = tf.tf_from_population(series)
    assert abs(np.sum(dist.density) * dist.dt - 1.0) <= 1e-9
    ref = 0.5 * np.sin(dist.times)
    assert np.max(np.abs(dist.density - ref)) <= 1e-5


def test_tf_from_population_linear_ramp_is_uniform():
    total = 2.0
    series = _series(0.0, total, 101, lambda t: t / total)
    dist = tf.tf_from_population(series)
    assert np.max(np.abs(dist.density - 1.0 / total)) <= 1e-12


def test_tf_from_population_exponential_decay():
    gamma = 1.0
    series = _series(0.0, 10.0, 4001,
                     lambda t: 0.5 * (1.0 - np.exp(-2.0 * gamma * t)))
    dist = tf.tf_from_population(series)
    ref = 2.0 * gamma * np.exp(-2.0 * gamma * dist.times)
    # O(dt^2) finite differences plus the renormalized truncation tail
    assert np.max(np.abs(dist.density - ref)) <= 1e-5


def test_tf_from_population_flat_series_raises():
    series = _series(0.0, 1.0, 50, lambda t: np.full_like(t, 0.25))
    with pytest.raises(DegenerateDistributionError):
        tf.tf_from_population(series)


def test_split_departure_then_arrival_boundary():
    # oracle: rate is (1/2) sin(t - pi/3), so the boundary sits at pi/3
    waveform = models.ControlWaveform.constant(1.0)
    init = models.TwoLevelInitial(theta=np.pi / 3, phi=np.pi / 2)
    grid = TimeGrid(0.0, np.pi, 2001)
    series = tf.PopulationSeries(
        grid, models.two_level_population(waveform, init, grid.times)
    )
    split = tf.split_toa_tod(series)
    kinds = [k for _, _, k in split.segments]
    assert kinds == [tf.KIND_TOD, tf.KIND_TOA]
    boundary = grid.times[split.segments[1][0]]
    assert abs(boundary - np.pi / 3.0) <= grid.dt
    assert split.tod is not None and split.toa is not None
    # weight identity: 1/n_a - 1/n_d telescopes to the net change
    net = series.values[-1] - series.values[0]
    assert abs((1.0 / split.n_a - 1.0 / split.n_d) - net) <= 1e-9


def test_split_monotone_series_single_segment():
    series = _series(0.0, np.pi, 500, lambda t: np.sin(t / 2.0) ** 2)
    split = tf.split_toa_tod(series)
    assert [k for _, _, k in split.segments] == [tf.KIND_TOA]
    assert split.tod is None
    assert np.isinf(split.n_d)
    assert abs(np.sum(split.toa.density) * split.toa.dt - 1.0) <= 1e-9


def test_split_alternating_phases_match_rate_roots():
    # oracle: sign changes of cos(th) sin(t) - sin(th) cos(t) sin(phi)
    theta, phi = np.pi / 3, np.pi / 4
    waveform = models.ControlWaveform.constant(1.0)
    init = models.TwoLevelInitial(theta=theta, phi=phi)
    t_end = 3.0 * np.pi
    grid = TimeGrid(0.0, t_end, 6001)
    series = tf.PopulationSeries(
        grid, models.two_level_population(waveform, init, grid.times)
    )
    split = tf.split_toa_tod(series)
    psi = np.arctan2(np.sin(theta) * np.sin(phi), np.cos(theta))
    roots = [psi + k * np.pi for k in range(4) if 0 < psi + k * np.pi < t_end]
    boundaries = [grid.times[i0] for i0, _, _ in split.segments[1:]]
    assert len(boundaries) == len(roots)
    for got, want in zip(boundaries, roots):
        assert abs(got - want) <= 2 * grid.dt


def test_moments_sine_distribution():
    grid = TimeGrid(0.0, np.pi, 4001)
    density = 0.5 * np.sin(grid.times)
    density /= np.sum(density) * grid.dt
    dist = tf.TFDistribution(grid.times, density, grid.dt, 1.0, tf.KIND_TF)
    m = tf.moments(dist)
    assert abs(m.mean - np.pi / 2.0) <= 1e-6
    want_std = (np.pi / 2.0) * np.sqrt(1.0 - 8.0 / np.pi ** 2)
    assert abs(m.std - want_std) <= 1e-5


def test_moments_exponential_on_grid():
    gamma = 1.0
    series = _series(0.0, 10.0, 4001,
                     lambda t: 0.5 * (1.0 - np.exp(-2.0 * gamma * t)))
    m = tf.moments(tf.tf_from_population(series))
    assert abs(m.mean - 0.5) <= 0.005
    assert abs(m.std - 0.5) <= 0.005


def test_moments_uniform():
    total = 3.0
    grid = TimeGrid(0.0, total, 2001)
    series = tf.PopulationSeries(grid, grid.times / total)
    m = tf.moments(tf.tf_from_population(series))
    assert abs(m.mean - total / 2.0) <= 1e-9
    assert abs(m.std - total / np.sqrt(12.0)) <= 1e-5


def test_moments_raw_order():
    grid = TimeGrid(0.0, 1.0, 101)
    series = tf.PopulationSeries(grid, grid.times)
    m = tf.moments(tf.tf_from_population(series), max_order=4)
    assert m.raw.shape == (4,)
    assert m.raw[1] >= m.raw[0] ** 2 - 1e-12


def test_tf_from_current_matches_finite_differences():
    # oracle: finite differences of the exact population
    omega0 = 1.0
    grid = TimeGrid(0.0, np.pi, 2000)
    schedule = constant_hamiltonian(0.5 * omega0 * operators.SIGMA_X)
    traj = dynamics.propagate_schrodinger(schedule, operators.basis_state(2, 0), grid)
    gamma_op = dynamics.current_operator(
        schedule(0.0), operators.projector(2, 1), sign=+1
    )
    p_exact = np.sin(omega0 * grid.times / 2.0) ** 2
    fd = tf.tf_from_population(tf.PopulationSeries(grid, p_exact))
    mid = tf.tf_from_current(traj, gamma_op, align="midpoints")
    assert np.max(np.abs(mid.density - fd.density)) <= 5.0 * grid.dt
    on_grid = tf.tf_from_current(traj, gamma_op, align="grid")
    assert on_grid.times.shape == grid.times.shape
    assert abs(np.sum(on_grid.density) * grid.dt - 1.0) <= 1e-9


def test_tf_from_current_time_dependent_operator():
    config = models.STAConfig(alpha=1.0, t_final=1.0, omega0=5.0)
    grid = TimeGrid(0.0, 1.0, 801)
    traj = models.sta_propagate(config, grid)
    m_plus = operators.projector_from_state(operators.plus_state())
    schedule = models.sta_hamiltonian(config)
    dist = tf.tf_from_current(
        traj, lambda t: dynamics.current_operator(schedule(t), m_plus), "midpoints"
    )
    p = models.sta_population_closed(config, grid.times)
    fd = tf.tf_from_population(tf.PopulationSeries(grid, p))
    assert np.max(np.abs(dist.density - fd.density)) <= 5.0 * grid.dt


def test_tf_from_current_zero_current_raises():
    grid = TimeGrid(0.0, 1.0, 10)
    states = np.tile(operators.basis_state(2, 0), (10, 1))
    traj = dynamics.Trajectory(grid, states)
    with pytest.raises(DegenerateDistributionError):
        tf.tf_from_current(traj, operators.SIGMA_Y)


def test_step_statistics_two_equal_steps():
    stats = tf.step_model_statistics([(2.0, 0.5), (4.0, 0.5)])
    assert stats.toa.mean == pytest.approx(3.0, abs=1e-12)
    assert stats.toa.std == pytest.approx(1.0, abs=1e-12)
    assert stats.tod is None


def test_step_statistics_mixed_flow():
    stats = tf.step_model_statistics([(2.0, 0.5), (4.0, -0.25), (6.0, 0.75)])
    assert stats.toa.mean == pytest.approx(22.0 / 5.0, abs=1e-12)
    assert stats.toa.std == pytest.approx(4.0 * np.sqrt(6.0) / 5.0, abs=1e-12)
    assert stats.tod.mean == pytest.approx(4.0, abs=1e-12)
    assert stats.tod.std == pytest.approx(0.0, abs=1e-12)
    assert stats.tf.mean == pytest.approx(13.0 / 3.0, abs=1e-12)
    assert stats.tf.std == pytest.approx(np.sqrt(29.0) / 3.0, abs=1e-12)


def test_step_statistics_single_step():
    stats = tf.step_model_statistics([(1.5, 1.0)])
    assert stats.toa.mean == 1.5
    assert stats.toa.std == 0.0


def test_step_statistics_validation():
    with pytest.raises(ValueError):
        tf.step_model_statistics([(2.0, 0.5), (1.0, 0.5)])
    with pytest.raises(ValueError):
        tf.step_model_statistics([(1.0, 0.8), (2.0, 0.8)])
    with pytest.raises(ValueError):
        tf.step_model_statistics([])


def test_delta_pulse_limit_concentrates():
    t0 = 1.0
    for sigma in (0.2, 0.1, 0.05):
        waveform = models.ControlWaveform.gaussian_pulse(t0, sigma)
        grid = TimeGrid(0.0, 2.0, 8001)
        series = tf.PopulationSeries(
            grid,
            np.clip(models.two_level_population(
                waveform, models.TwoLevelInitial(), grid.times), 0.0, 1.0),
        )
        m = tf.moments(tf.tf_from_population(series))
        assert abs(m.mean - t0) <= 3.0 * sigma
        assert m.std <= 2.0 * sigma


def test_grid_refinement_second_order():
    # halving dt should cut the moment error by about 4; the asymmetric
    # decay model avoids the symmetry cancellation of the sine drive
    gamma = 1.0
    exact_func = lambda t: 0.5 * (1.0 - np.exp(-2.0 * gamma * t))
    errs = []
    for n in (201, 401):
        series = _series(0.0, 8.0, n, exact_func)
        m = tf.moments(tf.tf_from_population(series))
        errs.append(abs(m.mean - 0.5))
    assert errs[0] / errs[1] >= 3.5


def test_distribution_rejects_bad_density():
    grid = TimeGrid(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        tf.TFDistribution(grid.times, np.ones(11), grid.dt, 1.0)  # integrates to ~1.1
