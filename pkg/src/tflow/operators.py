"""Dense complex matrix primitives for 2- and 3-level systems.

States are plain numpy arrays: a 1-d complex vector is a pure state, a
2-d complex matrix is a density matrix. Operators are 2-d complex
matrices. Everything is small (dim 2 or 3) and dense; validators below
enforce the constraints the rest of the toolkit relies on. All angular
frequencies are in rad per time unit and hbar = 1 throughout.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionMismatchError,
    OperatorConstraintError,
    StateConstraintError,
)

HERMITIAN_TOL = 1e-12
PROJECTOR_TOL = 1e-12
NORM_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-9

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


def pauli(axis: str) -> np.ndarray:
    """Return the 2x2 Pauli matrix for ``axis`` in {'x', 'y', 'z'}."""
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}, expected 'x', 'y' or 'z'")


def hadamard() -> np.ndarray:
    """The 2x2 Hadamard operator (sigma_x + sigma_z)/sqrt(2)."""
    return (SIGMA_X + SIGMA_Z) / np.sqrt(2.0)


def basis_state(dim: int, k: int) -> np.ndarray:
    """Computational basis vector |k> of the given dimension."""
    if not 0 <= k < dim:
        raise IndexError(f"basis index {k} out of range for dim {dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[k] = 1.0
    return psi


def plus_state() -> np.ndarray:
    return np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def minus_state() -> np.ndarray:
    return np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)


def projector(dim: int, k: int) -> np.ndarray:
    """Rank-1 projector |k><k| onto a computational basis state."""
    if not 0 <= k < dim:
        raise IndexError(f"basis index {k} out of range for dim {dim}")
    p = np.zeros((dim, dim), dtype=complex)
    p[k, k] = 1.0
    return p


def projector_from_state(psi: np.ndarray) -> np.ndarray:
    """Rank-1 projector |psi><psi| for an arbitrary normalized pure state."""
    psi = np.asarray(psi, dtype=complex)
    assert_unit_norm(psi)
    return np.outer(psi, psi.conj())


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """AB - BA."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"commutator shapes {a.shape} vs {b.shape}")
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """AB + BA."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"anticommutator shapes {a.shape} vs {b.shape}")
    return a @ b + b @ a


def su2_exponential(phi: float, axis: str) -> np.ndarray:
    """exp(-i*phi*sigma_axis) = cos(phi) I - i sin(phi) sigma_axis.

    The closed form follows from sigma^2 = I; it is exactly unitary up to
    rounding for any finite angle.
    """
    if not np.isfinite(phi):
        raise ValueError("angle must be finite")
    return np.cos(phi) * IDENTITY_2 - 1.0j * np.sin(phi) * pauli(axis)


def expectation(state: np.ndarray, op: np.ndarray) -> complex:
    """<psi|A|psi> for a vector, Tr(rho A) for a matrix."""
    state = np.asarray(state, dtype=complex)
    op = np.asarray(op, dtype=complex)
    if state.ndim == 1:
        if op.shape != (state.shape[0], state.shape[0]):
            raise DimensionMismatchError(
                f"state dim {state.shape[0]} vs operator {op.shape}"
            )
        return complex(np.vdot(state, op @ state))
    if state.shape != op.shape:
        raise DimensionMismatchError(f"state {state.shape} vs operator {op.shape}")
    return complex(np.trace(state @ op))


# ---------------------------------------------------------------------------
# validators


def hermiticity_defect(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T)))


def assert_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "operator"):
    defect = hermiticity_defect(a)
    if defect > tol:
        raise OperatorConstraintError(f"{name} is not Hermitian (defect {defect:.3e})")


def is_projector(a: np.ndarray, tol: float = PROJECTOR_TOL) -> bool:
    a = np.asarray(a, dtype=complex)
    idem = float(np.max(np.abs(a @ a - a)))
    return idem <= tol and abs(np.trace(a) - 1.0) <= tol


def assert_projector(a: np.ndarray, tol: float = PROJECTOR_TOL, name: str = "operator"):
    if not is_projector(a, tol):
        raise OperatorConstraintError(f"{name} is not a rank-1 projector")


def assert_unit_norm(psi: np.ndarray, tol: float = NORM_TOL):
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > tol:
        raise StateConstraintError(f"state norm {norm} deviates from 1 by > {tol}")


def min_eigenvalue_hermitian(a: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian 2x2 or 3x3 matrix.

    Uses the characteristic polynomial in closed form, so no iterative
    eigensolver is involved.
    """
    a = np.asarray(a, dtype=complex)
    d = a.shape[0]
    if d == 2:
        tr = float(np.real(a[0, 0] + a[1, 1]))
        det = float(np.real(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]))
        disc = max(tr * tr - 4.0 * det, 0.0)
        return 0.5 * (tr - np.sqrt(disc))
    if d == 3:
        # trigonometric solution of the cubic characteristic polynomial
        p1 = (abs(a[0, 1]) ** 2 + abs(a[0, 2]) ** 2 + abs(a[1, 2]) ** 2)
        diag = np.real(np.diag(a))
        q = float(diag.sum()) / 3.0
        if p1 == 0.0:
            return float(diag.min())
        p2 = float(((diag - q) ** 2).sum()) + 2.0 * p1
        p = np.sqrt(p2 / 6.0)
        b = (a - q * np.eye(3)) / p
        r = float(np.real(_det3(b))) / 2.0
        r = min(max(r, -1.0), 1.0)
        phi = np.arccos(r) / 3.0
        return q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    raise ValueError(f"analytic eigenvalues only implemented for dim <= 3, got {d}")


def _det3(a: np.ndarray) -> complex:
    return (
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )


def assert_density_matrix(rho: np.ndarray, name: str = "density matrix"):
    """Check Hermiticity, unit trace and positivity of a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    assert_hermitian(rho, HERMITIAN_TOL, name)
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > TRACE_TOL:
        raise StateConstraintError(f"{name} trace {tr} deviates from 1")
    lo = min_eigenvalue_hermitian(rho)
    if lo < -EIGENVALUE_TOL:
        raise StateConstraintError(f"{name} has negative eigenvalue {lo:.3e}")
