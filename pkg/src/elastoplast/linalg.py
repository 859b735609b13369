"""Sparse matrix helpers and the Dirichlet-restricted linear solve.

Matrices are :class:`scipy.sparse.csr_matrix` instances.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import SolverFailure

SOLVE_RTOL = 1e-10


def from_triplets(i, j, v, n_rows: int, n_cols: int) -> sp.csr_matrix:
    """Compressed matrix from a triplet stream; duplicate entries are summed."""
    i = np.asarray(i, dtype=np.int64).ravel()
    j = np.asarray(j, dtype=np.int64).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if not (i.size == j.size == v.size):
        raise ValueError("triplet arrays must have equal length")
    if i.size and (i.min() < 0 or i.max() >= n_rows or j.min() < 0 or j.max() >= n_cols):
        raise ValueError(f"triplet index out of range for a {n_rows}x{n_cols} matrix")
    A = sp.coo_matrix((v, (i, j)), shape=(n_rows, n_cols)).tocsr()
    A.sum_duplicates()
    return A


def sandwich(B: sp.spmatrix, D: sp.spmatrix) -> sp.csr_matrix:
    """Return ``B.T @ D @ B``."""
    if D.shape[0] != D.shape[1]:
        raise ValueError(f"D must be square, got {D.shape}")
    if B.shape[0] != D.shape[0]:
        raise ValueError(f"B has {B.shape[0]} rows but D is {D.shape[0]}x{D.shape[1]}")
    B = sp.csr_matrix(B)
    return (B.T.tocsr() @ sp.csr_matrix(D) @ B).tocsr()


def is_symmetric(A: sp.spmatrix, rtol: float = 1e-10) -> bool:
    A = sp.csr_matrix(A)
    scale = abs(A).max() if A.nnz else 0.0
    diff = A - A.T
    return (abs(diff).max() if diff.nnz else 0.0) <= rtol * scale


def energy_norm(K: sp.spmatrix, v) -> float:
    """``sqrt(v^T K v)``; small negative round-off is clamped to zero."""
    v = np.asarray(v, dtype=float).ravel()
    return float(np.sqrt(max(float(v @ (K @ v)), 0.0)))


def _relative_residual(A, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return r / nb if nb > 0 else r


def restricted_solve(K: sp.spmatrix, rhs, free_mask, method: str = "direct",
                     rtol: float = SOLVE_RTOL) -> np.ndarray:
    """Solve ``K[f, f] x[f] = rhs[f]`` on the free dofs; ``x`` is zero elsewhere.

    Parameters
    ----------
    K : sparse matrix, symmetric
    rhs : array
    free_mask : boolean array (any shape, flattened column-major)
    method : {"direct", "cg"}
        Sparse LU factorization in symmetric mode, or conjugate gradients with a diagonal
        preconditioner and at most ``10 n`` iterations.

    Raises
    ------
    SolverFailure
        If the factorization breaks down or the relative residual exceeds
        ``rtol`` after one step of iterative refinement.
    """
    rhs = np.asarray(rhs, dtype=float).ravel(order="F")
    free = np.asarray(free_mask, dtype=bool).ravel(order="F")
    if rhs.size != K.shape[0] or free.size != K.shape[0]:
        raise ValueError("rhs and mask must match the matrix size")
    x = np.zeros_like(rhs)
    idx = np.flatnonzero(free)
    if idx.size == 0:
        return x
    K = sp.csr_matrix(K)
    A = K[idx][:, idx].tocsc()
    b = rhs[idx]
    if not np.any(b):
        return x

    if method == "direct":
        try:
            # symmetric ordering with threshold pivoting keeps the fill low
            lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.1,
                           options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise SolverFailure(f"factorization failed: {exc}") from exc
        xf = lu.solve(b)
        res = _relative_residual(A, xf, b) if np.all(np.isfinite(xf)) else np.inf
        if res > rtol and np.isfinite(res):
            xf = xf + lu.solve(b - A @ xf)
            res = _relative_residual(A, xf, b)
    elif method == "cg":
        d = A.diagonal()
        if np.any(d <= 0):
            raise SolverFailure("nonpositive diagonal, matrix is not SPD")
        M = sp.diags(1.0 / d)
        xf, _ = spla.cg(A, b, rtol=rtol, atol=0.0, maxiter=10 * idx.size, M=M)
        res = _relative_residual(A, xf, b)
    else:
        raise ValueError(f"unknown solver {method!r}")

    if not np.isfinite(res) or res > rtol:
        raise SolverFailure(f"restricted solve reached relative residual {res:.3e}", res)
    x[idx] = xf
    return x
