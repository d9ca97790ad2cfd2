"""Dense symmetric linear algebra: eigendecomposition and stabilized pseudo-inverse.

Everything here assumes matrices of at most a few thousand rows, for which a
full eigendecomposition is cheap and the most robust route to a truncated
Moore-Penrose pseudo-inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class SymmetricEigen:
    """Full spectrum of a symmetric matrix, eigenvalues descending."""

    values: np.ndarray
    vectors: np.ndarray  # orthonormal columns, aligned with values


def eig_sym(A) -> SymmetricEigen:
    """Eigendecomposition of a (defensively symmetrized) real matrix."""
    M = np.asarray(A, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError("eig_sym expects a square matrix")
    if not np.all(np.isfinite(M)):
        raise InputError("matrix contains non-finite entries")
    S = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(S)
    return SymmetricEigen(values=w[::-1].copy(), vectors=V[:, ::-1].copy())


def default_pinv_tol(size: int) -> float:
    """Relative eigenvalue cutoff used by pinv_apply, scaled with matrix size."""
    return 1e-10 * size


def pinv_apply(A, b, rel_tol: float | None = None) -> np.ndarray:
    """Minimum-norm solution A^+ b for symmetric PSD A.

    Eigenvalues below ``rel_tol * lambda_max`` are truncated.  An all-zero A
    yields the zero vector (minimum-norm convention), not an error.
    """
    M = np.asarray(A, dtype=np.float64)
    rhs = np.asarray(b, dtype=np.float64).ravel()
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError("pinv_apply expects a square matrix")
    if M.shape[0] != rhs.shape[0]:
        raise InputError(f"shape mismatch: {M.shape} vs {rhs.shape}")
    if rel_tol is None:
        rel_tol = default_pinv_tol(M.shape[0])
    if not 0.0 < rel_tol < 1.0:
        raise InputError("rel_tol must lie in (0, 1)")
    eig = eig_sym(M)
    lam_max = max(float(eig.values[0]), 0.0)
    keep = eig.values > rel_tol * lam_max
    if lam_max == 0.0 or not keep.any():
        return np.zeros_like(rhs)
    V = eig.vectors[:, keep]
    return V @ ((V.T @ rhs) / eig.values[keep])
