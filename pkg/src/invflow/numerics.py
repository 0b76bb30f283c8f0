"""Dense small-matrix kernel used by every analysis module.

All matrices in this problem domain are tiny (buffer and control counts
of a flow network), so the routines favour tight residual guarantees and
explicit failure modes over scalability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NotPositiveDefinite,
    NotSymmetric,
    SingularLyapunov,
    SingularMatrix,
)

SYMMETRY_RTOL = 1e-9

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a float 2-D array with finite entries."""
    m = np.array(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def require_symmetric(a, name: str = "matrix") -> np.ndarray:
    """Validate symmetry to SYMMETRY_RTOL * ||a|| and return the array."""
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if np.linalg.norm(m - m.T) > SYMMETRY_RTOL * np.linalg.norm(m):
        raise NotSymmetric(f"{name} is not symmetric to tolerance")
    return m


@dataclass(frozen=True)
class EigenResult:
    """Full spectrum of a symmetric matrix.

    values are ascending; vectors[:, i] is the orthonormal eigenvector
    paired with values[i].
    """

    values: np.ndarray
    vectors: np.ndarray


def sym_eig(s, name: str = "S") -> EigenResult:
    """Eigendecomposition of a symmetric matrix.

    The input is symmetrized as (S + S^T)/2 before decomposition to
    absorb roundoff in upstream products.
    """
    s = require_symmetric(s, name)
    values, vectors = np.linalg.eigh(0.5 * (s + s.T))
    return EigenResult(values=values, vectors=vectors)


def cholesky(s, name: str = "S") -> np.ndarray:
    """Lower-triangular factor L with L L^T = S.

    Raises NotPositiveDefinite when S has a non-positive pivot; this is
    the canonical positive-definiteness test for R_w, R_u and P inputs.
    """
    s = require_symmetric(s, name)
    try:
        return np.linalg.cholesky(0.5 * (s + s.T))
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(name) from None


def pencil_max_eig(phi, r, names: tuple[str, str] = ("Phi", "R")) -> tuple[float, np.ndarray]:
    """Largest generalized eigenvalue of the pencil (phi, r), both PD.

    Returns (lambda_max, w) with phi @ w = lambda_max * r @ w and
    w^T r w = 1.  Solved by Cholesky congruence: factor r = L L^T,
    eigendecompose L^-1 phi L^-T, and map the top eigenvector back.
    Forming r^-1 phi directly would destroy symmetry, so it is avoided.
    """
    phi = require_symmetric(phi, names[0])
    r = require_symmetric(r, names[1])
    if phi.shape != r.shape:
        raise ValueError(f"{names[0]} and {names[1]} have mismatched shapes")
    cholesky(phi, names[0])  # PD check
    ell = cholesky(r, names[1])
    half = np.linalg.solve(ell, phi)
    core = np.linalg.solve(ell, half.T)  # L^-1 phi L^-T, symmetric up to roundoff
    eig = sym_eig(core, "congruence core")
    lam = float(eig.values[-1])
    w = np.linalg.solve(ell.T, eig.vectors[:, -1])
    w = w / np.sqrt(w @ r @ w)
    return lam, w


def lyap_solve(a, c) -> np.ndarray:
    """Solve A Q + Q A^T = C for symmetric Q by Kronecker vectorization.

    Intended for the tiny systems of this domain (n up to ~10).  Raises
    SingularLyapunov when the vectorized system is numerically singular,
    which happens exactly when A and -A share an eigenvalue pair summing
    to zero; the failure is detected through the residual.
    """
    a = as_matrix(a, "A")
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"A must be square, got shape {a.shape}")
    c = require_symmetric(c, "C")
    if c.shape != a.shape:
        raise ValueError("A and C have mismatched shapes")
    n = a.shape[0]
    eye = np.eye(n)
    system = np.kron(eye, a) + np.kron(a, eye)
    try:
        vec = np.linalg.solve(system, c.flatten(order="F"))
    except np.linalg.LinAlgError:
        raise SingularLyapunov("vectorized system is singular") from None
    q = vec.reshape((n, n), order="F")
    q = 0.5 * (q + q.T)
    residual = np.linalg.norm(a @ q + q @ a.T - c)
    if residual > 1e-9 * (1.0 + np.linalg.norm(c)):
        raise SingularLyapunov(f"residual {residual:.3e} exceeds bound")
    return q


def det_and_inverse(s) -> tuple[float, np.ndarray]:
    """Determinant and inverse via Gaussian elimination with partial pivoting.

    The determinant is the product of pivots with the sign given by the
    row-permutation parity.  Raises SingularMatrix when a pivot falls
    below 1e-12 * ||S||.
    """
    s = as_matrix(s, "S")
    if s.shape[0] != s.shape[1]:
        raise ValueError(f"S must be square, got shape {s.shape}")
    n = s.shape[0]
    tol = 1e-12 * np.linalg.norm(s)
    aug = np.hstack([s, np.eye(n)])
    det = 1.0
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[pivot_row, col]) <= tol:
            raise SingularMatrix(f"pivot below {tol:.3e} at column {col}")
        if pivot_row != col:
            aug[[col, pivot_row]] = aug[[pivot_row, col]]
            det = -det
        pivot = aug[col, col]
        det *= pivot
        aug[col] /= pivot
        for row in range(n):
            if row != col and aug[row, col] != 0.0:
                aug[row] -= aug[row, col] * aug[col]
    return det, aug[:, n:]


def pivot_columns(b, rtol: float = 1e-9) -> list[int]:
    """Indices of the leftmost linearly independent columns of b.

    Left-to-right Gaussian elimination with partial row pivoting;
    columns whose best pivot is at most rtol * ||b|| are skipped.
    Deterministic, so repeated calls pick the same basis.
    """
    work = as_matrix(b, "B").copy()
    rows, cols = work.shape
    tol = rtol * np.linalg.norm(work)
    pivots: list[int] = []
    r = 0
    for j in range(cols):
        if r == rows:
            break
        i = r + int(np.argmax(np.abs(work[r:, j])))
        if abs(work[i, j]) <= tol:
            continue
        if i != r:
            work[[r, i]] = work[[i, r]]
        work[r + 1:] -= np.outer(work[r + 1:, j] / work[r, j], work[r])
        pivots.append(j)
        r += 1
    return pivots


def golden_section_min(f, lo: float, hi: float, tol: float = 1e-8) -> tuple[float, float]:
    """Minimize a unimodal scalar function on [lo, hi].

    Returns (x, f(x)) at the midpoint of the final bracket.
    """
    if hi <= lo:
        raise ValueError("empty bracket")
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    return x, f(x)
