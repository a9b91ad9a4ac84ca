"""Dense complex linear algebra on small square matrices.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The helpers here
validate shapes and numerical invariants and return new arrays; nothing is
modified in place.
"""
from __future__ import annotations

import numpy as np

from .exceptions import ValidationError

HERMITIAN_RTOL = 1e-12
DENSITY_TOL = 1e-10

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_matrix(A, name="matrix") -> np.ndarray:
    """Return ``A`` as a finite square complex array or raise ``ValidationError``."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValidationError(f"{name} must be a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} has non-finite entries")
    return A


def _check_same_dim(A, B):
    if A.shape != B.shape:
        raise ValidationError(f"dimension mismatch: {A.shape} vs {B.shape}")


def dagger(A) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(A).conj().T


def hermitian_residual(A) -> float:
    """Largest entrywise deviation of ``A`` from its adjoint."""
    A = np.asarray(A, dtype=complex)
    return float(np.max(np.abs(A - A.conj().T)))


def is_hermitian(A, rtol=HERMITIAN_RTOL) -> bool:
    A = as_matrix(A)
    scale = max(1.0, float(np.max(np.abs(A))))
    return hermitian_residual(A) <= rtol * scale


def check_hermitian(A, name="matrix", rtol=HERMITIAN_RTOL) -> np.ndarray:
    A = as_matrix(A, name)
    if not is_hermitian(A, rtol):
        raise ValidationError(
            f"{name} is not Hermitian (residual {hermitian_residual(A):.3g})",
            residual=hermitian_residual(A),
        )
    return A


def hs_inner(A, B) -> float:
    """Hilbert-Schmidt inner product ``Tr(A^dagger B)``, real part.

    For Hermitian arguments the imaginary part vanishes up to rounding.
    """
    A = as_matrix(A)
    B = as_matrix(B)
    _check_same_dim(A, B)
    return float(np.vdot(A, B).real)


def hermitian_eigs(A) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix."""
    A = check_hermitian(A)
    return np.linalg.eigvalsh((A + A.conj().T) / 2)


def lambda_max(A) -> float:
    return float(hermitian_eigs(A)[-1])


def lambda_min(A) -> float:
    return float(hermitian_eigs(A)[0])


def is_psd(A, tol=0.0) -> bool:
    """True iff the smallest eigenvalue of Hermitian ``A`` is at least ``-tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return lambda_min(A) >= -tol


def is_projection(P, tol=DENSITY_TOL) -> bool:
    P = as_matrix(P)
    return hermitian_residual(P) <= tol and float(np.max(np.abs(P @ P - P))) <= tol


def check_density_matrix(rho, name="state", tol=DENSITY_TOL) -> np.ndarray:
    """Validate unit trace, Hermiticity and positivity of ``rho``."""
    rho = check_hermitian(rho, name)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"{name} has trace {tr:.12g}, expected 1", residual=abs(tr - 1.0))
    lmin = lambda_min(rho)
    if lmin < -tol:
        raise ValidationError(f"{name} is not positive semidefinite (min eigenvalue {lmin:.3g})",
                              residual=-lmin)
    return rho


def is_density_matrix(rho, tol=DENSITY_TOL) -> bool:
    try:
        check_density_matrix(rho, tol=tol)
    except ValidationError:
        return False
    return True


def basis_projector(i: int, dim: int) -> np.ndarray:
    """``|i><i|`` in dimension ``dim``."""
    P = np.zeros((dim, dim), dtype=complex)
    P[i, i] = 1.0
    return P


def outer(i: int, j: int, dim: int) -> np.ndarray:
    """Matrix unit ``|i><j|``."""
    E = np.zeros((dim, dim), dtype=complex)
    E[i, j] = 1.0
    return E


def bloch_vector(rho) -> np.ndarray:
    """``(Tr X rho, Tr Y rho, Tr Z rho)`` for a qubit state."""
    rho = as_matrix(rho)
    if rho.shape != (2, 2):
        raise ValidationError("Bloch vector requires a 2x2 state")
    return np.array([np.trace(P @ rho).real for P in (PAULI_X, PAULI_Y, PAULI_Z)])


def random_density_matrix(dim: int, rng=None, kind="gram") -> np.ndarray:
    """Sample a state: ``kind='gram'`` gives ``G G^dagger / Tr`` for complex
    Gaussian ``G``, ``kind='vertex'`` a uniformly chosen basis projector."""
    rng = np.random.default_rng(rng)
    if kind == "vertex":
        return basis_projector(int(rng.integers(dim)), dim)
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def sample_states(dim: int, n: int, rng=None) -> np.ndarray:
    """Mixture of vertex and Gram states, shape ``(n, dim, dim)``.

    Roughly one in five samples is a basis vertex so checks cover the
    boundary as well as the interior of the state space.
    """
    rng = np.random.default_rng(rng)
    out = np.empty((n, dim, dim), dtype=complex)
    for k in range(n):
        out[k] = random_density_matrix(dim, rng, "vertex" if rng.random() < 0.2 else "gram")
    return out


def random_unitary(dim: int, rng=None) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    rng = np.random.default_rng(rng)
    Z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_hermitian(dim: int, rng=None, scale=1.0) -> np.ndarray:
    rng = np.random.default_rng(rng)
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (A + A.conj().T) / 2
