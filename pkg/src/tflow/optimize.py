"""Derivative-free shaping of polynomial drive waveforms.

The drive w(t) = omega0 + sum_p a_p t^p steers the two-level transfer
|0> -> |1>, whose final population and monotonicity enter the cost

    J(a) = (p_1(T) - 1)^2 + lambda_mono * N_false + lambda_reg * sum a_p^2,

with N_false the number of grid intervals on which the population does
not increase. N_false is an integer count, so the cost is deliberately
non-smooth; a Nelder-Mead simplex handles it where gradient methods
would stall. Runs are deterministic for a given configuration (the
initial simplex is built explicitly).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import models
from .dynamics import TimeGrid
from .tf import Moments, PopulationSeries, TFDistribution


@dataclass(frozen=True)
class OptimizeConfig:
    t_horizon: float
    omega0: float
    lambda_mono: float = 1.0
    lambda_reg: float = 0.0
    grid_points: int = 200
    initial_coefficients: tuple = (0.0, 0.0, 0.0, 0.0)
    max_iterations: int = 2000
    simplex_scale: float = 0.1
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.t_horizon <= 0:
            raise ValueError("t_horizon must be positive")
        if self.lambda_mono < 0 or self.lambda_reg < 0:
            raise ValueError("penalty weights must be >= 0")
        if self.grid_points < 10:
            raise ValueError("grid_points must be >= 10")
        if len(self.initial_coefficients) != 4:
            raise ValueError("expected 4 initial coefficients")

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizeConfig":
        coeffs = data.get("initial_coefficients", (0.0, 0.0, 0.0, 0.0))
        return cls(
            t_horizon=float(data["t_horizon"]),
            omega0=float(data["omega0"]),
            lambda_mono=float(data.get("lambda_mono", 1.0)),
            lambda_reg=float(data.get("lambda_reg", 0.0)),
            grid_points=int(data.get("grid_points", 200)),
            initial_coefficients=tuple(float(c) for c in coeffs),
            max_iterations=int(data.get("max_iterations", 2000)),
            simplex_scale=float(data.get("simplex_scale", 0.1)),
            tolerance=float(data.get("tolerance", 1e-10)),
        )


def _grid(config: OptimizeConfig) -> np.ndarray:
    return np.linspace(0.0, config.t_horizon, config.grid_points)


def _population(coefficients, config: OptimizeConfig, times: np.ndarray) -> np.ndarray:
    waveform = models.ControlWaveform.polynomial(config.omega0, coefficients)
    return models.two_level_population(waveform, models.TwoLevelInitial(), times)


def n_false(coefficients, config: OptimizeConfig,
            times: np.ndarray | None = None) -> int:
    """Grid intervals on which p_1 fails to increase (delta p <= 0)."""
    ts = _grid(config) if times is None else times
    p1 = _population(coefficients, config, ts)
    return int(np.sum(np.diff(p1) <= 0.0))


def cost(coefficients, config: OptimizeConfig) -> float:
    a = np.asarray(coefficients, dtype=float)
    ts = _grid(config)
    p1 = _population(a, config, ts)
    miss = (p1[-1] - 1.0) ** 2
    return float(
        miss
        + config.lambda_mono * np.sum(np.diff(p1) <= 0.0)
        + config.lambda_reg * np.sum(a * a)
    )


@dataclass(frozen=True)
class OptimizationResult:
    coefficients: np.ndarray
    cost: float
    p1_final: float
    n_false: int
    iterations: int
    converged: bool
    population: PopulationSeries
    distribution: TFDistribution


def optimize_polynomial(config: OptimizeConfig) -> OptimizationResult:
    """Nelder-Mead over (a_1, ..., a_4) from an explicit initial simplex.

    Vertex p displaces coefficient a_p by simplex_scale * omega0 / T^p,
    which keeps the perturbations dimensionally commensurate. Stops on
    simplex size below ``tolerance`` or on the iteration cap; the best
    point found so far is returned either way, flagged by ``converged``.
    """
    x0 = np.asarray(config.initial_coefficients, dtype=float)
    scales = np.array([
        config.simplex_scale * config.omega0 / config.t_horizon ** (p + 1)
        for p in range(4)
    ])
    simplex = np.vstack([x0] + [x0 + np.eye(4)[i] * scales[i] for i in range(4)])

    res = minimize(
        cost, x0, args=(config,), method="Nelder-Mead",
        options=dict(
            initial_simplex=simplex,
            xatol=config.tolerance,
            fatol=1e-15,
            maxiter=config.max_iterations,
            maxfev=max(4 * config.max_iterations, 1000),
        ),
    )

    a = np.asarray(res.x, dtype=float)
    grid = TimeGrid(0.0, config.t_horizon, config.grid_points)
    ts = grid.times
    p1 = _population(a, config, ts)
    waveform = models.ControlWaveform.polynomial(config.omega0, a)
    dist = models.two_level_tf_closed(waveform, models.TwoLevelInitial(), grid)
    return OptimizationResult(
        coefficients=a,
        cost=float(res.fun),
        p1_final=float(p1[-1]),
        n_false=int(np.sum(np.diff(p1) <= 0.0)),
        iterations=int(res.nit),
        converged=bool(res.success),
        population=PopulationSeries(grid, p1),
        distribution=dist,
    )


@dataclass(frozen=True)
class AlphaRow:
    alpha: float
    mean: float
    std: float


def sta_alpha_report(alphas, t_final: float,
                     omega0: float = 1.0) -> list[AlphaRow]:
    """Arrival mean/spread of the counterdiabatic sweep per exponent,
    sorted by alpha; moments by quadrature."""
    rows = []
    for alpha in sorted(float(a) for a in alphas):
        if alpha <= 0:
            raise ValueError("alpha values must be positive")
        m: Moments = models.sta_moments_closed(
            models.STAConfig(alpha=alpha, t_final=t_final, omega0=omega0)
        )
        rows.append(AlphaRow(alpha=alpha, mean=m.mean, std=m.std))
    return rows
