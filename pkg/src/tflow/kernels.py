"""Fixed-step RK4 kernels behind the propagators.

The time-stepping loops dominate the toolkit's runtime, so they come in
two interchangeable backends: numba ``@njit`` loop kernels (the default
whenever numba imports) and a pure-numpy fallback. Set
``TFLOW_NO_NUMBA=1`` in the environment to force the numpy path;
``benchmarks/bench_propagators.py`` compares the two. The jitted kernels
spell out the tiny (dim 2 or 3) matrix products to avoid per-step BLAS
dispatch; the fallback uses ordinary array expressions.

Kernels consume a pre-sampled generator table ``h_table`` holding H(t)
at every half-step node (2*n_steps + 1 matrices for n_steps RK4 steps),
so no Python callback happens inside the hot loop. They do the
arithmetic only: drift accounting, renormalization and retries live in
``tflow.dynamics``.
"""

from __future__ import annotations

import os

import numpy as np


def env_disables_numba(value) -> bool:
    return str(value).strip().lower() in {"1", "true", "yes", "on"}


_FORCED_OFF = env_disables_numba(os.environ.get("TFLOW_NO_NUMBA", ""))

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA and not _FORCED_OFF


def lindblad_rhs_dense(hmat, rho, jump_ops, jump_dags, half_b):
    """-i[H, rho] + sum_j A_j rho A_j^dag - (B/2) rho - rho (B/2).

    One-shot evaluation used outside the stepping loops (adjoint duality
    checks, diagnostics); always plain numpy.
    """
    dr = -1j * (hmat @ rho - rho @ hmat) - (half_b @ rho + rho @ half_b)
    for j in range(jump_ops.shape[0]):
        dr = dr + jump_ops[j] @ (rho @ jump_dags[j])
    return dr


# ---------------------------------------------------------------------------
# pure-numpy backend


def _schrodinger_steps_numpy(h_table, psi0, substeps, h, out):
    n_grid = out.shape[0]
    psi = psi0.copy()
    out[0] = psi
    for g in range(n_grid - 1):
        for s in range(substeps):
            b = 2 * (g * substeps + s)
            h0 = h_table[b]
            hm = h_table[b + 1]
            h1 = h_table[b + 2]
            k1 = -1j * (h0 @ psi)
            k2 = -1j * (hm @ (psi + (0.5 * h) * k1))
            k3 = -1j * (hm @ (psi + (0.5 * h) * k2))
            k4 = -1j * (h1 @ (psi + h * k3))
            psi = psi + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        out[g + 1] = psi


def _lindblad_steps_numpy(h_table, jump_ops, jump_dags, half_b, rho0,
                          substeps, h, out):
    n_grid = out.shape[0]
    rho = rho0.copy()
    out[0] = rho
    max_asym = 0.0
    for g in range(n_grid - 1):
        for s in range(substeps):
            b = 2 * (g * substeps + s)
            k1 = lindblad_rhs_dense(h_table[b], rho, jump_ops, jump_dags, half_b)
            k2 = lindblad_rhs_dense(
                h_table[b + 1], rho + (0.5 * h) * k1, jump_ops, jump_dags, half_b
            )
            k3 = lindblad_rhs_dense(
                h_table[b + 1], rho + (0.5 * h) * k2, jump_ops, jump_dags, half_b
            )
            k4 = lindblad_rhs_dense(
                h_table[b + 2], rho + h * k3, jump_ops, jump_dags, half_b
            )
            rho = rho + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            asym = 0.5 * float(np.max(np.abs(rho - rho.conj().T)))
            if asym > max_asym:
                max_asym = asym
            rho = 0.5 * (rho + rho.conj().T)
        out[g + 1] = rho
    return max_asym


# ---------------------------------------------------------------------------
# numba backend: explicit small-matrix loops


if HAS_NUMBA:

    @njit(cache=True)
    def _schrodinger_steps_numba(h_table, psi0, substeps, h, out):
        n_grid = out.shape[0]
        d = psi0.shape[0]
        psi = psi0.copy()
        k = np.empty((4, d), np.complex128)
        stage = np.empty(d, np.complex128)
        out[0] = psi
        coeff = (0.5 * h, 0.5 * h, h)
        for g in range(n_grid - 1):
            for s in range(substeps):
                b = 2 * (g * substeps + s)
                # stage nodes use H at b, b+1, b+1, b+2
                for a in range(d):
                    acc = 0j
                    for c in range(d):
                        acc += h_table[b, a, c] * psi[c]
                    k[0, a] = -1j * acc
                for stage_i in range(1, 4):
                    node = b + 2 if stage_i == 3 else b + 1
                    w = coeff[stage_i - 1]
                    for a in range(d):
                        stage[a] = psi[a] + w * k[stage_i - 1, a]
                    for a in range(d):
                        acc = 0j
                        for c in range(d):
                            acc += h_table[node, a, c] * stage[c]
                        k[stage_i, a] = -1j * acc
                for a in range(d):
                    psi[a] = psi[a] + (h / 6.0) * (
                        k[0, a] + 2.0 * (k[1, a] + k[2, a]) + k[3, a]
                    )
            out[g + 1] = psi

    @njit(cache=True)
    def _lindblad_rhs_into(hm, rho, jump_ops, jump_dags, half_b, tmp, dr):
        d = rho.shape[0]
        for a in range(d):
            for c in range(d):
                herm = 0j
                damp = 0j
                for e in range(d):
                    herm += hm[a, e] * rho[e, c] - rho[a, e] * hm[e, c]
                    damp += half_b[a, e] * rho[e, c] + rho[a, e] * half_b[e, c]
                dr[a, c] = -1j * herm - damp
        for j in range(jump_ops.shape[0]):
            for a in range(d):
                for c in range(d):
                    acc = 0j
                    for e in range(d):
                        acc += rho[a, e] * jump_dags[j, e, c]
                    tmp[a, c] = acc
            for a in range(d):
                for c in range(d):
                    acc = 0j
                    for e in range(d):
                        acc += jump_ops[j, a, e] * tmp[e, c]
                    dr[a, c] += acc

    @njit(cache=True)
    def _lindblad_steps_numba(h_table, jump_ops, jump_dags, half_b, rho0,
                              substeps, h, out):
        n_grid = out.shape[0]
        d = rho0.shape[0]
        rho = rho0.copy()
        k = np.empty((4, d, d), np.complex128)
        stage = np.empty((d, d), np.complex128)
        tmp = np.empty((d, d), np.complex128)
        out[0] = rho
        max_asym = 0.0
        coeff = (0.5 * h, 0.5 * h, h)
        for g in range(n_grid - 1):
            for s in range(substeps):
                b = 2 * (g * substeps + s)
                _lindblad_rhs_into(
                    h_table[b], rho, jump_ops, jump_dags, half_b, tmp, k[0]
                )
                for stage_i in range(1, 4):
                    node = b + 2 if stage_i == 3 else b + 1
                    w = coeff[stage_i - 1]
                    for a in range(d):
                        for c in range(d):
                            stage[a, c] = rho[a, c] + w * k[stage_i - 1, a, c]
                    _lindblad_rhs_into(
                        h_table[node], stage, jump_ops, jump_dags, half_b,
                        tmp, k[stage_i]
                    )
                for a in range(d):
                    for c in range(d):
                        rho[a, c] = rho[a, c] + (h / 6.0) * (
                            k[0, a, c] + 2.0 * (k[1, a, c] + k[2, a, c]) + k[3, a, c]
                        )
                asym = 0.0
                for a in range(d):
                    for c in range(d):
                        diff = abs(rho[a, c] - np.conj(rho[c, a]))
                        if diff > asym:
                            asym = diff
                if 0.5 * asym > max_asym:
                    max_asym = 0.5 * asym
                for a in range(d):
                    for c in range(a, d):
                        sym = 0.5 * (rho[a, c] + np.conj(rho[c, a]))
                        rho[a, c] = sym
                        rho[c, a] = np.conj(sym)
            out[g + 1] = rho
        return max_asym


if USING_NUMBA:
    schrodinger_steps = _schrodinger_steps_numba
    lindblad_steps = _lindblad_steps_numba
else:
    schrodinger_steps = _schrodinger_steps_numpy
    lindblad_steps = _lindblad_steps_numpy

BACKEND = "numba" if USING_NUMBA else "numpy"
