"""
Truncated SVD and projections onto a reduced basis.

The factorization goes through LAPACK's gesvd driver, i.e. Householder
bidiagonalization followed by implicit-shift QR on the bidiagonal, which is
deterministic for a given input and thread count.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from mhd_shred.errors import DataError, DimensionError


@dataclass(frozen=True)
class ReducedBasis:
    """Orthonormal spatial modes U (Nh x r) with their singular values"""
    U: np.ndarray
    sigma: np.ndarray

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    @property
    def n_rows(self) -> int:
        return self.U.shape[0]


def as_dense(a, name: str = "matrix") -> np.ndarray:
    """Validate a 2-D finite float64 array (the DenseMatrix contract)"""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite entries")
    return arr


def _fix_signs(U: np.ndarray, Vt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # Largest-magnitude entry of every U column is made positive; first index wins ties.
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, Vt * signs[:, None]


def truncated_svd(A, r: int) -> Tuple[ReducedBasis, np.ndarray]:
    """
    Rank-r truncated SVD of A.

    Returns the basis (U, sigma) and the right factor Vt (r x cols), so that
    U @ diag(sigma) @ Vt is the best rank-r approximation of A.
    """
    A = as_dense(A, "A")
    if r < 1 or r > min(A.shape):
        raise DimensionError(f"rank {r} not in [1, {min(A.shape)}] for a {A.shape[0]}x{A.shape[1]} matrix")
    U, s, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesvd", check_finite=False)
    U, Vt = _fix_signs(U[:, :r], Vt[:r, :])
    return ReducedBasis(U=np.ascontiguousarray(U), sigma=s[:r].copy()), np.ascontiguousarray(Vt)


def singular_values(A) -> np.ndarray:
    """All singular values of A, descending"""
    A = as_dense(A, "A")
    return scipy.linalg.svd(A, compute_uv=False, lapack_driver="gesvd", check_finite=False)


def project(basis: ReducedBasis, X) -> np.ndarray:
    """Latent coefficients V = U^T X"""
    X = as_dense(X, "X")
    if X.shape[0] != basis.n_rows:
        raise DimensionError(f"X has {X.shape[0]} rows, basis has {basis.n_rows}")
    return basis.U.T @ X


def reconstruct(basis: ReducedBasis, V) -> np.ndarray:
    """Back-projection U V"""
    V = as_dense(V, "V")
    if V.shape[0] != basis.rank:
        raise DimensionError(f"V has {V.shape[0]} rows, basis rank is {basis.rank}")
    return basis.U @ V


def truncation_error(A, r: int) -> float:
    """Squared Frobenius error of the rank-r truncation, from the full spectrum"""
    s = singular_values(A)
    return float(np.sum(s[r:] ** 2))
