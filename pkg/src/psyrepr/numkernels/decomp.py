"""Truncated SVD and classical (Torgerson) multidimensional scaling."""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive."""
    if vectors.size == 0:
        return np.ones(vectors.shape[1])
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def truncated_svd(A, k: int):
    """Rank-``k`` singular value decomposition of a dense matrix.

    Parameters
    ----------
    A : array_like, shape (n, m)
    k : int
        Number of components, ``1 <= k <= min(n, m)``.

    Returns
    -------
    U : ndarray, shape (n, k)
    s : ndarray, shape (k,)
        Singular values in descending order.
    Vt : ndarray, shape (k, m)

    Notes
    -----
    Signs are fixed so that the largest-magnitude entry of every left singular
    vector is positive, which makes the output reproducible across runs.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("A must be a 2-D matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("A contains non-finite values")
    k = int(k)
    if not 1 <= k <= min(A.shape):
        raise ValueError(f"k={k} out of range for a {A.shape[0]}x{A.shape[1]} matrix")
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD did not converge: {exc}") from None
    U, s, Vt = U[:, :k], s[:k], Vt[:k]
    signs = _fix_signs(U)
    return U * signs, s.copy(), Vt * signs[:, None]


def classical_mds(D, dims: int = 2) -> np.ndarray:
    """Torgerson scaling of a symmetric dissimilarity matrix.

    The doubly centred Gram matrix ``B = -J D**2 J / 2`` is eigendecomposed;
    coordinates are the leading eigenvectors scaled by the square root of their
    eigenvalues, with negative eigenvalues clamped to zero (as are those within round-off of zero).
    """
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("D must be square")
    n = D.shape[0]
    dims = int(dims)
    if dims < 1 or dims > n:
        raise ValueError(f"dims={dims} must be between 1 and n={n}")
    if not np.all(np.isfinite(D)):
        raise ValueError("D contains non-finite values")
    scale = max(1.0, float(np.abs(D).max()))
    if not np.allclose(D, D.T, rtol=0, atol=1e-12 * scale):
        raise ValueError("D must be symmetric")
    if np.any(np.abs(np.diag(D)) > 1e-12 * scale):
        raise ValueError("D must have a zero diagonal")
    if np.any(D < 0):
        raise ValueError("D must be nonnegative")

    D2 = D**2
    row = D2.mean(axis=1)
    B = -0.5 * (D2 - row[:, None] - row[None, :] + D2.mean())
    B = (B + B.T) / 2
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals, kind="stable")[::-1][:dims]
    # eigenvalues at round-off level would otherwise add sqrt(eps)-sized coordinates
    tol = max(n, 1) * np.finfo(np.float64).eps * max(float(np.abs(evals).max()), 0.0)
    evals = evals[order]
    evals[evals <= tol] = 0.0
    evecs = evecs[:, order]
    coords = evecs * np.sqrt(evals)
    coords = coords * _fix_signs(coords)
    return coords - coords.mean(axis=0)
