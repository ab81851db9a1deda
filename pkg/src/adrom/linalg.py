"""Dense linear-algebra kernels used throughout the reduction pipeline.

All routines take and return float64 numpy arrays, validate finiteness on
entry, and are deterministic: identical inputs give bitwise-identical
outputs. Basis-like outputs follow a fixed sign convention (largest-magnitude
entry of each column made positive, ties to the lowest row index) so that
bases and golden files reproduce exactly.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DegenerateUpdateError, NumericalError

# Fixed tolerances. These are contractual constants, not tuning knobs:
# changing them shifts pivot orders and rank decisions everywhere downstream.
RANK_RTOL = 1e-12
PIVOT_TIE_RTOL = 1e-14
SYMMETRY_RTOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-d float64 array, validating on entry."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name}: expected a 2-d array, got ndim={m.ndim}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError(f"{name}: entries must be finite")
    return m


def as_vector(a, name: str = "vector") -> np.ndarray:
    """Return ``a`` as a finite 1-d float64 array."""
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name}: expected a 1-d array, got ndim={v.ndim}")
    if v.size and not np.all(np.isfinite(v)):
        raise ValueError(f"{name}: entries must be finite")
    return v


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Scale each column so its largest-magnitude entry is positive.

    Ties pick the lowest row index. Exact zero columns are left unchanged.
    """
    V = np.array(V, dtype=np.float64, copy=True)
    if V.size == 0:
        return V
    lead = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[lead, np.arange(V.shape[1])])
    signs[signs == 0.0] = 1.0
    return V * signs


def pod(snapshots, n: int):
    """Rank-``n`` orthonormal basis of a snapshot matrix via the SVD.

    Returns ``(basis, sigma)`` where ``basis`` holds the ``n`` leading left
    singular vectors (sign-fixed) of the N x M input and ``sigma`` is the
    full non-increasing list of min(N, M) singular values.
    """
    Q = as_matrix(snapshots, "snapshots")
    N, M = Q.shape
    r = min(N, M)
    if not 1 <= n <= r:
        raise ValueError(f"pod: n={n} out of range [1, {r}] for a {N}x{M} snapshot matrix")
    try:
        U, sigma, _ = np.linalg.svd(Q, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"pod: SVD did not converge on a {N}x{M} matrix") from exc
    return fix_signs(U[:, :n]), sigma


def pivoted_qr_pivots(M) -> np.ndarray:
    """Column order of a column-pivoted QR factorization of ``M``.

    Greedy Businger-Golub pivoting: each step takes the column with the
    largest residual norm after deflating the span of the columns already
    chosen. Residual norms within ``PIVOT_TIE_RTOL`` (relative) of the best
    tie-break to the lowest column index. Returns min(rows, cols) distinct
    0-based column indices.
    """
    W = as_matrix(M, "M").copy()
    r, c = W.shape
    if r == 0 or c == 0:
        raise ValueError("pivoted_qr_pivots: matrix must be non-empty")
    steps = min(r, c)
    pivots = np.empty(steps, dtype=np.intp)
    chosen = np.zeros(c, dtype=bool)
    for j in range(steps):
        norms = np.sqrt(np.einsum("ij,ij->j", W, W))
        norms[chosen] = -1.0
        best = float(norms.max())
        if best <= 0.0:
            # Rank collapsed early; fill the remaining slots in index order.
            remaining = np.flatnonzero(~chosen)
            pivots[j:] = remaining[: steps - j]
            break
        tie = norms >= best * (1.0 - PIVOT_TIE_RTOL)
        p = int(np.flatnonzero(tie)[0])
        pivots[j] = p
        chosen[p] = True
        v = W[:, p] / norms[p]
        W -= np.outer(v, v @ W)
    return pivots


def lstsq(A, B) -> np.ndarray:
    """Minimum-norm least-squares solution of ``A X = B``.

    ``B`` may be a vector or a matrix; the result matches its shape family.
    """
    A = as_matrix(A, "A")
    Bv = np.asarray(B, dtype=np.float64)
    if Bv.ndim not in (1, 2):
        raise ValueError(f"B: expected a 1-d or 2-d array, got ndim={Bv.ndim}")
    if Bv.size and not np.all(np.isfinite(Bv)):
        raise ValueError("B: entries must be finite")
    if A.shape[0] != Bv.shape[0]:
        raise ValueError(f"lstsq: incompatible rows, A is {A.shape[0]}x{A.shape[1]} but B has {Bv.shape[0]} rows")
    X, _, _, _ = np.linalg.lstsq(A, Bv, rcond=None)
    return X


def gen_eig_max(A, B):
    """Largest generalized Rayleigh quotient of symmetric PSD ``(A, B)``.

    Maximizes v^T A v / v^T B v over the numerically nonzero eigenspace of
    ``B`` (eigenvalues above ``RANK_RTOL`` times the largest are kept).
    Returns ``(lam, v)`` with the attained quotient and a unit sign-fixed
    maximizer. Among equal eigenvalues the lowest eigenvector index wins.

    Raises DegenerateUpdateError when ``B`` is numerically zero.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n, n):
        raise ValueError(f"gen_eig_max: expected square matrices of equal size, got {A.shape} and {B.shape}")
    _check_symmetric(A, "A")
    _check_symmetric(B, "B")
    d, U = np.linalg.eigh(B)
    dmax = float(d[-1])
    if not (dmax > 0.0):
        raise DegenerateUpdateError("gen_eig_max: B is numerically zero")
    keep = d > RANK_RTOL * dmax
    W = U[:, keep] / np.sqrt(d[keep])
    Mw = W.T @ A @ W
    Mw = 0.5 * (Mw + Mw.T)
    w, Y = np.linalg.eigh(Mw)
    i = int(np.argmax(w))  # first occurrence, so exact ties pick the lowest index
    lam = float(w[i])
    v = W @ Y[:, i]
    v /= np.linalg.norm(v)
    v = fix_signs(v[:, None])[:, 0]
    return lam, v


def orthonormalize(V) -> np.ndarray:
    """Orthonormal basis with the same column span as ``V``, sign-fixed.

    Raises NumericalError when ``V`` is numerically rank deficient
    (smallest singular value at most ``RANK_RTOL`` times the largest).
    """
    V = as_matrix(V, "V")
    if min(V.shape) == 0:
        raise ValueError("orthonormalize: matrix must be non-empty")
    s = np.linalg.svd(V, compute_uv=False)
    rank = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0.0 else 0
    if rank < V.shape[1]:
        raise NumericalError(
            f"orthonormalize: input numerically rank deficient ({V.shape[1]} columns, rank {rank})"
        )
    Q, _ = np.linalg.qr(V)
    return fix_signs(Q)


def _check_symmetric(M: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 0.0)
    if float(np.max(np.abs(M - M.T))) > SYMMETRY_RTOL * scale:
        raise ValueError(f"gen_eig_max: {name} is not symmetric to within {SYMMETRY_RTOL:g}")
