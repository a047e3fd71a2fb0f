"""Ready-made physical scenarios with their closed-form references.

Four families are bundled:

* a driven two-level transition H(t) = (w(t)/2) sigma_x with an arbitrary
  Bloch-sphere initial state, solvable for any drive waveform through the
  accumulated angle W(t) = int_0^t w;
* a counterdiabatic two-level sweep whose exact solution follows the
  instantaneous eigenstate of the bare part, parameterized by an angle
  schedule theta(t) = (pi/2)(t/T)^alpha;
* a three-level Lambda system with fixed Rabi couplings and a linear
  detuning ramp swept once through resonance;
* open-system examples: pure sigma_z dephasing, and a Hadamard-axis
  rotation with a dephasing channel.

Frequencies are angular (rad per time unit, hbar = 1); helpers accepting
cyclic MHz multiply by 2*pi at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ndtr

from . import operators
from .dynamics import (
    DOUBLE_COMMUTATOR,
    GKS,
    HamiltonianSchedule,
    LindbladModel,
    TimeGrid,
    Trajectory,
    constant_hamiltonian,
    propagate_schrodinger,
)
from .errors import DegenerateDistributionError
from .operators import SIGMA_X, SIGMA_Y, SIGMA_Z
from .tf import KIND_TF, KIND_TOA, Moments, PopulationSeries, TFDistribution

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=200)


# ---------------------------------------------------------------------------
# control waveforms


class ControlWaveform:
    """Drive frequency w(t) together with its accumulated angle W(t).

    W is in closed form for the constant, polynomial and gaussian kinds;
    custom waveforms without a supplied antiderivative fall back to
    adaptive quadrature (absolute error <= 1e-10).
    """

    def __init__(self, kind: str, omega: Callable, cumulative: Callable,
                 params: dict):
        self.kind = kind
        self._omega = omega
        self._cumulative = cumulative
        self.params = dict(params)

    def omega(self, t):
        return self._omega(np.asarray(t, dtype=float))

    def cumulative(self, t):
        return self._cumulative(np.asarray(t, dtype=float))

    @classmethod
    def constant(cls, omega0: float) -> "ControlWaveform":
        return cls(
            "constant",
            lambda t: np.full_like(t, omega0, dtype=float),
            lambda t: omega0 * t,
            {"omega0": omega0},
        )

    @classmethod
    def polynomial(cls, omega0: float, coefficients) -> "ControlWaveform":
        """w(t) = omega0 + sum_p a_p t^p with a = (a_1, ..., a_4)."""
        a = np.asarray(coefficients, dtype=float)
        if a.shape != (4,):
            raise ValueError("expected exactly 4 polynomial coefficients")

        def omega(t):
            return omega0 + sum(a[p] * t ** (p + 1) for p in range(4))

        def cumulative(t):
            return omega0 * t + sum(a[p] * t ** (p + 2) / (p + 2) for p in range(4))

        return cls("polynomial", omega, cumulative,
                   {"omega0": omega0, "coefficients": tuple(a)})

    @classmethod
    def gaussian_pulse(cls, t0: float, sigma: float,
                       area: float = np.pi) -> "ControlWaveform":
        """Normalized gaussian drive of total angle ``area`` centered at t0."""
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        norm = area / np.sqrt(2.0 * np.pi * sigma * sigma)

        def omega(t):
            return norm * np.exp(-((t - t0) ** 2) / (2.0 * sigma * sigma))

        def cumulative(t):
            return area * (ndtr((t - t0) / sigma) - ndtr(-t0 / sigma))

        return cls("gaussian", omega, cumulative,
                   {"t0": t0, "sigma": sigma, "area": area})

    @classmethod
    def custom(cls, omega: Callable[[float], float],
               cumulative: Callable[[float], float] | None = None) -> "ControlWaveform":
        omega_v = np.vectorize(omega, otypes=[float])
        if cumulative is None:
            def cumulative_v(t):
                flat = np.atleast_1d(np.asarray(t, dtype=float))
                out = np.array([quad(omega, 0.0, x, **_QUAD_OPTS)[0] for x in flat])
                return out.reshape(np.shape(t)) if np.ndim(t) else float(out[0])
        else:
            cumulative_v = np.vectorize(cumulative, otypes=[float])
        return cls("custom", omega_v, cumulative_v, {})


@dataclass(frozen=True)
class TwoLevelInitial:
    """Bloch angles of cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""

    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError("theta must lie in [0, pi]")
        if not 0.0 <= self.phi < 2.0 * np.pi:
            raise ValueError("phi must lie in [0, 2 pi)")

    def state(self) -> np.ndarray:
        return np.array(
            [np.cos(self.theta / 2.0),
             np.exp(1j * self.phi) * np.sin(self.theta / 2.0)],
            dtype=complex,
        )


def two_level_hamiltonian(waveform: ControlWaveform) -> HamiltonianSchedule:
    """H(t) = (w(t)/2) sigma_x."""
    def batch(ts):
        w = np.atleast_1d(waveform.omega(ts))
        return 0.5 * w[:, None, None] * SIGMA_X

    return HamiltonianSchedule(
        2, lambda t: 0.5 * float(waveform.omega(t)) * SIGMA_X, batch=batch
    )


def two_level_population(waveform: ControlWaveform, init: TwoLevelInitial, t):
    """Occupation of |1> at time t for the sigma_x drive, in closed form:

    p_1 = sin^2(theta/2) cos^2(W/2) + cos^2(theta/2) sin^2(W/2)
          - (1/2) sin(theta) sin(W) sin(phi).
    """
    w = waveform.cumulative(t)
    th, ph = init.theta, init.phi
    return (
        np.sin(th / 2.0) ** 2 * np.cos(w / 2.0) ** 2
        + np.cos(th / 2.0) ** 2 * np.sin(w / 2.0) ** 2
        - 0.5 * np.sin(th) * np.sin(w) * np.sin(ph)
    )


def two_level_rate(waveform: ControlWaveform, init: TwoLevelInitial, t):
    """Signed dp_1/dt = (w/2)[cos(theta) sin(W) - sin(theta) cos(W) sin(phi)]."""
    w = waveform.cumulative(t)
    return 0.5 * waveform.omega(t) * (
        np.cos(init.theta) * np.sin(w)
        - np.sin(init.theta) * np.cos(w) * np.sin(init.phi)
    )


def two_level_tf_closed(waveform: ControlWaveform, init: TwoLevelInitial,
                        grid: TimeGrid) -> TFDistribution:
    """Closed-form flow density |dp_1/dt| sampled at the grid points and
    renormalized over the window."""
    raw = np.abs(two_level_rate(waveform, init, grid.times))
    total = float(np.sum(raw) * grid.dt)
    if total <= 1e-12:
        raise DegenerateDistributionError("flow density vanishes on this window")
    return TFDistribution(
        times=grid.times,
        density=raw / total,
        dt=grid.dt,
        normalization=1.0 / total,
        kind=KIND_TF,
    )


def two_level_moments_closed(waveform: ControlWaveform, init: TwoLevelInitial,
                             t_start: float, t_end: float,
                             max_order: int = 2) -> Moments:
    """Moments of the closed-form flow density by adaptive quadrature.

    The signed rate is integrated piecewise between its sign changes
    (bracketed on a dense probe grid, refined by brentq), so the absolute
    value never degrades the quadrature order.
    """
    if t_start < 0:
        raise ValueError("transfer windows start at t >= 0")

    def rate(t):
        return two_level_rate(waveform, init, t)

    probe = np.linspace(t_start, t_end, 4097)
    signs = np.sign(np.atleast_1d(rate(probe)))
    cuts = [t_start]
    last_sign, last_idx = 0.0, 0
    for i in range(probe.size):
        if signs[i] == 0.0:
            continue
        if last_sign != 0.0 and signs[i] != last_sign:
            cuts.append(float(brentq(rate, probe[last_idx], probe[i], xtol=1e-14)))
        last_sign, last_idx = signs[i], i
    cuts.append(t_end)
    cuts = sorted(set(cuts))

    # within a segment t^p * rate has the constant sign of rate (t >= 0),
    # so |rate| integrals are signed integrals flipped segment-wise
    total = 0.0
    mus = np.zeros(max_order)
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        seg0, _ = quad(rate, lo, hi, **_QUAD_OPTS)
        sgn = 1.0 if seg0 >= 0 else -1.0
        total += abs(seg0)
        for p in range(1, max_order + 1):
            val, _ = quad(lambda t, p=p: t ** p * rate(t), lo, hi, **_QUAD_OPTS)
            mus[p - 1] += sgn * val
    if total <= 1e-14:
        raise DegenerateDistributionError("flow density vanishes on this window")
    mus /= total
    var = max(mus[1] - mus[0] ** 2, 0.0)
    return Moments(mean=float(mus[0]), std=float(np.sqrt(var)), raw=mus)


# ---------------------------------------------------------------------------
# counterdiabatic (exactly-following) two-level sweep


@dataclass(frozen=True)
class STAConfig:
    """Angle schedule theta(t) = (pi/2)(t/T)^alpha at splitting omega0."""

    alpha: float
    t_final: float
    omega0: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")

    def theta(self, t):
        return 0.5 * np.pi * (np.asarray(t, dtype=float) / self.t_final) ** self.alpha

    def theta_dot(self, t):
        a, big_t = self.alpha, self.t_final
        t = np.asarray(t, dtype=float)
        if a < 1.0 and np.any(t <= 0.0):
            raise ValueError(
                "theta_dot diverges at t = 0 for alpha < 1; "
                "start the grid at t > 0 (e.g. half a grid step)"
            )
        with np.errstate(divide="ignore"):
            return 0.5 * np.pi * (a / big_t) * (t / big_t) ** (a - 1.0)


def sta_hamiltonian(config: STAConfig) -> HamiltonianSchedule:
    """H(t) = (1/2)[-omega0(sin th sigma_x + cos th sigma_z) + th' sigma_y]."""
    w0 = config.omega0

    def batch(ts):
        th = np.atleast_1d(config.theta(ts))
        td = np.atleast_1d(config.theta_dot(ts))
        out = np.empty((th.size, 2, 2), dtype=complex)
        out[:] = 0.5 * (
            -w0 * (np.sin(th)[:, None, None] * SIGMA_X
                   + np.cos(th)[:, None, None] * SIGMA_Z)
            + td[:, None, None] * SIGMA_Y
        )
        return out

    return HamiltonianSchedule(2, lambda t: batch(np.array([t]))[0], batch=batch)


def sta_instantaneous_state(config: STAConfig, t: float) -> np.ndarray:
    """The tracked eigenstate cos(th/2)|0> + sin(th/2)|1> at time t."""
    th = float(config.theta(t))
    return np.array([np.cos(th / 2.0), np.sin(th / 2.0)], dtype=complex)


def sta_population_closed(config: STAConfig, t):
    """Exact target-state occupation p_+(t) = cos^2(theta(t)/2 - pi/4)."""
    return np.cos(config.theta(t) / 2.0 - np.pi / 4.0) ** 2


def sta_flow_cdf(config: STAConfig, t):
    """Accumulated flow F(t) = sin((pi/2)(t/T)^alpha), i.e. p_+ - p_+(0)
    rescaled to total mass 1."""
    return np.sin(0.5 * np.pi * (np.asarray(t, dtype=float) / config.t_final)
                  ** config.alpha)


def sta_tf_closed(config: STAConfig, grid: TimeGrid) -> tuple[TFDistribution, Moments]:
    """Arrival distribution of the sweep plus its quadrature moments.

    The density on the grid is assigned as exact per-interval flow mass
    (differences of the closed-form accumulated flow), which stays finite
    for alpha < 1 where the pointwise density diverges at t = 0. The
    moments come from sta_moments_closed, not from the grid.
    """
    if config.alpha == 0:
        raise DegenerateDistributionError("alpha = 0 freezes the sweep")
    if grid.t_start < 0 or grid.t_end > config.t_final * (1 + 1e-12):
        raise ValueError("grid must lie within [0, t_final]")
    f = sta_flow_cdf(config, grid.times)
    mass = np.diff(f)
    total = float(np.sum(mass))
    dist = TFDistribution(
        times=grid.midpoints,
        density=mass / grid.dt / total,
        dt=grid.dt,
        normalization=1.0 / total,
        kind=KIND_TOA,
    )
    return dist, sta_moments_closed(config)


def sta_moments_closed(config: STAConfig) -> Moments:
    """Mean and spread of the arrival distribution by quadrature.

    Integration by parts against the accumulated flow avoids the
    integrable density singularity at t = 0 for alpha < 1:
    mu1 = T - int F, mu2 = T^2 - 2 int t F.
    """
    big_t = config.t_final
    i0, _ = quad(lambda t: sta_flow_cdf(config, t), 0.0, big_t, **_QUAD_OPTS)
    i1, _ = quad(lambda t: t * sta_flow_cdf(config, t), 0.0, big_t, **_QUAD_OPTS)
    mu1 = big_t - i0
    mu2 = big_t * big_t - 2.0 * i1
    var = max(mu2 - mu1 * mu1, 0.0)
    return Moments(mean=mu1, std=float(np.sqrt(var)), raw=np.array([mu1, mu2]))


def sta_propagate(config: STAConfig, grid: TimeGrid,
                  substeps: int | None = None) -> Trajectory:
    """Numerically propagate the sweep, handling the alpha < 1 endpoint.

    For alpha < 1 the counterdiabatic term diverges at t = 0, so a grid
    starting there is shifted to begin at half a grid step, with the
    instantaneous eigenstate at that time as the initial state (the exact
    solution passes through it). The trajectory's grid records the times
    actually used.
    """
    if config.alpha < 1.0 and grid.t_start <= 0.0:
        grid = TimeGrid(grid.t_start + 0.5 * grid.dt, grid.t_end, grid.n_points)
    psi0 = sta_instantaneous_state(config, grid.t_start)
    return propagate_schrodinger(sta_hamiltonian(config), psi0, grid, substeps)


# ---------------------------------------------------------------------------
# three-level Lambda sweep


@dataclass(frozen=True)
class LambdaConfig:
    """Lambda system: couplings omega1 (|1>-|2|) and omega2 (|3>-|2>),
    single-photon detuning ramped linearly from delta_initial to
    delta_final over t_final. All rates angular."""

    omega1: float
    omega2: float
    delta_initial: float
    delta_final: float
    t_final: float

    def __post_init__(self):
        if self.omega1 <= 0 or self.omega2 <= 0:
            raise ValueError("couplings must be positive")
        if not (self.delta_initial < 0.0 < self.delta_final):
            raise ValueError("the ramp must cross resonance: delta_i < 0 < delta_f")
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")

    @classmethod
    def from_cyclic_mhz(cls, omega1, omega2, delta_initial, delta_final,
                        t_final) -> "LambdaConfig":
        """Convenience constructor taking frequencies in cyclic MHz."""
        two_pi = 2.0 * np.pi
        return cls(two_pi * omega1, two_pi * omega2, two_pi * delta_initial,
                   two_pi * delta_final, t_final)

    @property
    def omega_eff(self) -> float:
        return float(np.hypot(self.omega1, self.omega2))

    def detuning(self, t):
        return self.delta_initial + (self.delta_final - self.delta_initial) * (
            np.asarray(t, dtype=float) / self.t_final
        )


def lambda_hamiltonian(config: LambdaConfig) -> HamiltonianSchedule:
    """3x3 generator in the (|1>, |2>, |3>) ordering with linear ramp."""
    o1, o2 = 0.5 * config.omega1, 0.5 * config.omega2

    def batch(ts):
        d = np.atleast_1d(config.detuning(ts))
        out = np.zeros((d.size, 3, 3), dtype=complex)
        out[:, 0, 1] = out[:, 1, 0] = o1
        out[:, 1, 2] = out[:, 2, 1] = o2
        out[:, 1, 1] = d
        return out

    return HamiltonianSchedule(3, lambda t: batch(np.array([t]))[0], batch=batch)


def lambda_bright_state(config: LambdaConfig) -> np.ndarray:
    """(omega1 |1> + omega2 |3>)/omega_eff: couples to |2> at omega_eff."""
    return np.array([config.omega1, 0.0, config.omega2],
                    dtype=complex) / config.omega_eff


def lambda_dark_state(config: LambdaConfig) -> np.ndarray:
    """(omega2 |1> - omega1 |3>)/omega_eff: decoupled from |2> at all times."""
    return np.array([config.omega2, 0.0, -config.omega1],
                    dtype=complex) / config.omega_eff


def lambda_gamma(config: LambdaConfig) -> np.ndarray:
    """Current-like operator of the excited-state population,
    -(omega_eff/2)(-i|B><2| + i|2><B|); Hermitian, time-independent,
    annihilates the dark state."""
    bright = lambda_bright_state(config)
    ket2 = operators.basis_state(3, 1)
    sigma_y_b2 = -1j * np.outer(bright, ket2.conj()) + 1j * np.outer(ket2, bright.conj())
    return -(config.omega_eff / 2.0) * sigma_y_b2


def landau_zener_probability(config: LambdaConfig) -> float:
    """Non-adiabatic transition probability exp(-pi Weff^2 / (2 |dDelta/dt|))
    for the linear sweep."""
    ramp_rate = (config.delta_final - config.delta_initial) / config.t_final
    return float(np.exp(-np.pi * config.omega_eff ** 2 / (2.0 * ramp_rate)))


# ---------------------------------------------------------------------------
# open-system examples


def dephasing_model(gamma: float) -> LindbladModel:
    """Pure sigma_z dephasing, double-commutator convention:
    d rho/dt = -(gamma/2)[sigma_z, [sigma_z, rho]]."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return LindbladModel(
        hamiltonian=constant_hamiltonian(np.zeros((2, 2), dtype=complex)),
        channels=((SIGMA_Z, gamma),),
        form=DOUBLE_COMMUTATOR,
    )


@dataclass(frozen=True)
class DephasingAnalytics:
    """Closed-form quantities of the dephasing transition |+> -> |->.

    The population is p_-(t) = (1 - exp(-2 gamma t))/2 and the flow
    density 2 gamma exp(-2 gamma t); mean and spread both equal
    1/(2 gamma). The grid distribution is renormalized over the window
    and ``truncation_mass`` records the flow mass beyond it.
    """

    gamma: float
    population: PopulationSeries
    distribution: TFDistribution
    exact_mean: float
    exact_std: float
    delta_theta: float
    trace_term: float
    truncation_mass: float


def dephasing_population(gamma: float, t):
    return 0.5 * (1.0 - np.exp(-2.0 * gamma * np.asarray(t, dtype=float)))


def dephasing_analytics(gamma: float, grid: TimeGrid) -> DephasingAnalytics:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    times = grid.times
    pop = PopulationSeries(grid, dephasing_population(gamma, times))
    raw = 2.0 * gamma * np.exp(-2.0 * gamma * times)
    total = float(np.sum(raw) * grid.dt)
    dist = TFDistribution(
        times=times,
        density=raw / total,
        dt=grid.dt,
        normalization=1.0 / total,
        kind=KIND_TOA,
    )
    outside = float(
        np.exp(-2.0 * gamma * grid.t_end) + (1.0 - np.exp(-2.0 * gamma * grid.t_start))
    )
    return DephasingAnalytics(
        gamma=gamma,
        population=pop,
        distribution=dist,
        exact_mean=0.5 / gamma,
        exact_std=0.5 / gamma,
        delta_theta=0.5,
        trace_term=2.0 * gamma * gamma,
        truncation_mass=outside,
    )


@dataclass(frozen=True)
class HadamardModel:
    """Hadamard-axis rotation with a sigma_z dephasing channel.

    H = (omega0/2)(sigma_x + sigma_z)/sqrt(2) plus the gks channel
    (gamma/2)(sigma_z rho sigma_z - rho). The current-like operator of
    the |+> population is -(omega0/(2 sqrt 2)) sigma_y - (gamma/2) sigma_x
    and Tr[(L^dag M_+)^2] = omega0^2/4 + gamma^2/2.
    """

    omega0: float
    gamma: float
    model: LindbladModel
    current_op: np.ndarray
    trace_term: float
    target: np.ndarray


def hadamard_model(omega0: float, gamma: float = 0.0) -> HadamardModel:
    if omega0 <= 0:
        raise ValueError("omega0 must be positive")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    h = 0.5 * omega0 * operators.hadamard()
    channels = ((SIGMA_Z, gamma),) if gamma > 0 else ()
    model = LindbladModel(
        hamiltonian=constant_hamiltonian(h), channels=channels, form=GKS
    )
    current = -(omega0 / (2.0 * np.sqrt(2.0))) * SIGMA_Y - 0.5 * gamma * SIGMA_X
    return HadamardModel(
        omega0=omega0,
        gamma=gamma,
        model=model,
        current_op=current,
        trace_term=omega0 ** 2 / 4.0 + gamma ** 2 / 2.0,
        target=operators.projector_from_state(operators.plus_state()),
    )
