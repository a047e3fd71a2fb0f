"""Finite-sample simulation of the projective measurement protocol.

Each time point t_j gets its own batch of N independently prepared
systems; every system is measured once, so no trajectory is monitored
twice and the dynamics are never frozen by repeated observation. The
detection frequencies f(t_j) = N_k(t_j)/N estimate the populations, and
their forward differences |Delta f|/dt, normalized, estimate the flow
density.

Sampling draws a Binomial(N, p(t_j)) count per time point from a
counter-based Philox stream keyed by (seed, j), which makes the result
bit-identical for a given (seed, grid, N) no matter how the points are
scheduled across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dynamics
from .dynamics import HamiltonianSchedule, LindbladModel, TimeGrid
from .errors import DegenerateDistributionError, GridMismatchError
from .tf import PopulationSeries, TFDistribution, tf_from_population


@dataclass(frozen=True)
class ProtocolConfig:
    """Trials per time point, sampling grid, stream seed and target
    projector."""

    n_trials: int
    grid: TimeGrid
    seed: int
    target: np.ndarray

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.grid.n_points < 3:
            raise ValueError("the protocol needs at least 3 time points")


@dataclass(frozen=True)
class EmpiricalTF:
    """Detection frequencies and the flow density estimated from them."""

    grid: TimeGrid
    frequencies: np.ndarray
    density: np.ndarray  # at interval midpoints
    normalization: float
    n_trials: int
    seed: int

    @property
    def midpoint_times(self) -> np.ndarray:
        return self.grid.midpoints

    def as_distribution(self) -> TFDistribution:
        return TFDistribution(
            times=self.grid.midpoints,
            density=self.density,
            dt=self.grid.dt,
            normalization=self.normalization,
            kind="TF",
        )


def _draw_point(seed: int, j: int, n_trials: int, p: float) -> float:
    rng = np.random.Generator(np.random.Philox(key=[seed, j]))
    return rng.binomial(n_trials, p) / n_trials


def sample_frequencies(p: np.ndarray, n_trials: int, seed: int,
                       workers: int = 1) -> np.ndarray:
    """Per-point binomial frequencies from independent (seed, j) streams."""
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    if workers <= 1:
        for j in range(p.size):
            out[j] = _draw_point(seed, j, n_trials, p[j])
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for j, f in enumerate(
            pool.map(lambda j: _draw_point(seed, j, n_trials, p[j]), range(p.size))
        ):
            out[j] = f
    return out


def exact_populations(model, initial_state, config: ProtocolConfig,
                      substeps: int | None = None) -> np.ndarray:
    """Populations p(t_j) of the target under the given dynamics."""
    if isinstance(model, LindbladModel):
        state = np.asarray(initial_state, dtype=complex)
        if state.ndim == 1:
            state = np.outer(state, state.conj())
        traj = dynamics.propagate_lindblad(model, state, config.grid, substeps)
    elif isinstance(model, HamiltonianSchedule):
        traj = dynamics.propagate_schrodinger(
            model, np.asarray(initial_state, dtype=complex), config.grid, substeps
        )
    else:
        raise TypeError("model must be a HamiltonianSchedule or LindbladModel")
    return dynamics.population_series(traj, config.target)


def empirical_from_populations(p: np.ndarray, config: ProtocolConfig,
                               workers: int = 1, sample: bool = True) -> EmpiricalTF:
    """Sample the protocol against known exact populations.

    With ``sample=False`` the exact populations stand in for the
    frequencies (the infinite-trials limit), so the result coincides with
    the finite-difference distribution of the exact series.
    """
    p = np.asarray(p, dtype=float)
    f = sample_frequencies(p, config.n_trials, config.seed, workers) if sample else p
    series = PopulationSeries(config.grid, f)
    try:
        dist = tf_from_population(series)
    except DegenerateDistributionError:
        raise DegenerateDistributionError(
            "no population change was detected; increase the number of trials "
            "or time points, or widen the observation window"
        )
    return EmpiricalTF(
        grid=config.grid,
        frequencies=f,
        density=dist.density,
        normalization=dist.normalization,
        n_trials=config.n_trials,
        seed=config.seed,
    )


def simulate_protocol(model, initial_state, config: ProtocolConfig,
                      workers: int = 1, sample: bool = True,
                      substeps: int | None = None) -> EmpiricalTF:
    """Run the measurement protocol against propagated exact dynamics."""
    p = exact_populations(model, initial_state, config, substeps)
    return empirical_from_populations(p, config, workers, sample)


@dataclass(frozen=True)
class ConvergenceReport:
    """Distances between an empirical flow density and a reference one.

    ``l1_distance`` is the integral of |pi_hat - pi| over the window and
    ``mean_abs_distance`` the same integral divided by the window length.
    ``noise_density`` estimates the per-bin sampling noise on the density,
    2 sqrt(p(1-p)) / (dt sqrt(N)); ``snr`` is the reference density over
    that noise floor.
    """

    sup_distance: float
    l1_distance: float
    mean_abs_distance: float
    noise_density: np.ndarray
    snr: np.ndarray
    freq_sup_error: float | None
    binomial_flag: bool | None
    passed: bool | None


def convergence_report(empirical: EmpiricalTF, exact: TFDistribution,
                       p_exact: np.ndarray | None = None,
                       tolerance: float | None = None) -> ConvergenceReport:
    """Compare an empirical density against an exact one on the same grid."""
    mid = empirical.midpoint_times
    if exact.times.shape != mid.shape or np.max(np.abs(exact.times - mid)) > 1e-12:
        raise GridMismatchError("empirical and exact distributions use different grids")
    diff = np.abs(empirical.density - exact.density)
    dt = empirical.grid.dt
    window = empirical.grid.t_end - empirical.grid.t_start
    l1 = float(np.sum(diff) * dt)

    n = empirical.n_trials
    if p_exact is not None:
        p_exact = np.asarray(p_exact, dtype=float)
        p_mid = 0.5 * (p_exact[1:] + p_exact[:-1])
        freq_sup = float(np.max(np.abs(empirical.frequencies - p_exact)))
        flag = bool(freq_sup <= 5.0 / np.sqrt(n))
    else:
        p_mid = 0.5 * (empirical.frequencies[1:] + empirical.frequencies[:-1])
        freq_sup = None
        flag = None
    noise = 2.0 * np.sqrt(np.clip(p_mid * (1.0 - p_mid), 0.0, None) / n) / dt
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = np.where(noise > 0, exact.density / noise, np.inf)

    return ConvergenceReport(
        sup_distance=float(np.max(diff)),
        l1_distance=l1,
        mean_abs_distance=l1 / window,
        noise_density=noise,
        snr=snr,
        freq_sup_error=freq_sup,
        binomial_flag=flag,
        passed=None if tolerance is None else bool(l1 <= tolerance),
    )
