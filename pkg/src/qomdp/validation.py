"""Input validation helpers for batches of states."""
from __future__ import annotations

import numpy as np

from .exceptions import ValidationError
from .qmath import DENSITY_TOL, hermitian_residual


def check_density_matrices(X, dim=None, tol=DENSITY_TOL) -> np.ndarray:
    """Validate one state ``(d, d)`` or a batch ``(n, d, d)``; return the batch.

    Each state must be Hermitian, positive semidefinite and of unit trace
    within ``tol``.
    """
    X = np.asarray(X, dtype=complex)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] != X.shape[2] or X.shape[0] == 0:
        raise ValidationError(f"expected states of shape (n, d, d), got {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise ValidationError(f"expected {dim}x{dim} states, got {X.shape[1]}x{X.shape[2]}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("states contain non-finite entries")
    for i, rho in enumerate(X):
        if hermitian_residual(rho) > tol:
            raise ValidationError(f"state {i} is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > tol:
            raise ValidationError(f"state {i} has trace {tr:.12g}", residual=abs(tr - 1.0))
    lam = np.linalg.eigvalsh((X + X.conj().transpose(0, 2, 1)) / 2)
    bad = np.nonzero(lam[:, 0] < -tol)[0]
    if bad.size:
        raise ValidationError(f"state {bad[0]} has negative eigenvalue {lam[bad[0], 0]:.3g}")
    return X
