"""Benchmark the numba propagation kernels against the numpy fallback.

Run: python benchmarks/bench_propagators.py

Times the two RK4 steppers on representative workloads (a three-level
detuning sweep and a dephased two-level rotation) with warmup, so JIT
compilation is excluded. ``TFLOW_NO_NUMBA=1`` selects the numpy path for
the whole package; this script always exercises both implementations
directly.
"""

import time

import numpy as np

from tflow import dynamics, kernels, models, operators


def _time(fn, *args, n_warmup=2, n_runs=5):
    for _ in range(n_warmup):
        fn(*args)
    times = []
    for _ in range(n_runs):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return np.mean(times), np.std(times)


def _print(label, numba_stats, numpy_stats):
    mean_nb, std_nb = numba_stats
    mean_np, std_np = numpy_stats
    print(f"  numba : {mean_nb * 1e3:8.2f} +- {std_nb * 1e3:.2f} ms")
    print(f"  numpy : {mean_np * 1e3:8.2f} +- {std_np * 1e3:.2f} ms")
    print(f"  speedup: {mean_np / mean_nb:.1f}x")


def bench_schrodinger(n_points=4001, substeps=14):
    config = models.LambdaConfig(
        2 * np.pi, 2 * np.pi, -2 * np.pi * 10.0, 2 * np.pi * 10.0, 4.0
    )
    grid = dynamics.TimeGrid(0.0, config.t_final, n_points)
    schedule = models.lambda_hamiltonian(config)
    n_steps = (n_points - 1) * substeps
    half = grid.dt / (2 * substeps)
    table = np.ascontiguousarray(
        schedule.sample(grid.t_start + half * np.arange(2 * n_steps + 1))
    )
    psi0 = operators.basis_state(3, 0)
    out = np.empty((n_points, 3), dtype=complex)
    h = grid.dt / substeps

    print(f"\nstate propagation, dim 3, {n_steps} RK4 steps")
    _print(
        "schrodinger",
        _time(kernels._schrodinger_steps_numba, table, psi0, substeps, h, out),
        _time(kernels._schrodinger_steps_numpy, table, psi0, substeps, h, out),
    )


def bench_lindblad(n_points=2001, substeps=4):
    bundle = models.hadamard_model(2 * np.pi * 10.0, 2 * np.pi * 5.0)
    grid = dynamics.TimeGrid(0.0, 0.1, n_points)
    jumps, jump_dags, half_b = bundle.model.scaled_jumps()
    n_steps = (n_points - 1) * substeps
    table = np.ascontiguousarray(
        bundle.model.hamiltonian.sample(np.zeros(2 * n_steps + 1))
    )
    rho0 = operators.projector(2, 0).astype(complex)
    out = np.empty((n_points, 2, 2), dtype=complex)
    h = grid.dt / substeps

    print(f"\ndensity-matrix propagation, dim 2, {n_steps} RK4 steps")
    _print(
        "lindblad",
        _time(kernels._lindblad_steps_numba, table, jumps, jump_dags, half_b,
              rho0, substeps, h, out),
        _time(kernels._lindblad_steps_numpy, table, jumps, jump_dags, half_b,
              rho0, substeps, h, out),
    )


def main():
    if not kernels.HAS_NUMBA:
        print("numba is not installed; only the numpy fallback is available.")
        return
    print(f"active package backend: {kernels.BACKEND}")
    bench_schrodinger()
    bench_lindblad()


if __name__ == "__main__":
    main()
