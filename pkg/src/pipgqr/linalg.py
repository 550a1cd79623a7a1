"""Linear-algebra kernels shared by the solver and preconditioner.

Dense matrices are numpy ndarrays (row-major), sparse matrices are scipy
CSC arrays, vectors are 1-d float ndarrays.
"""

import warnings

import numpy as np
import scipy.linalg
import scipy.sparse


class DimensionError(ValueError):
    """Operands do not conform."""


class RankDeficiencyError(ValueError):
    """Matrix does not have full column rank."""


class SingularMatrixError(ValueError):
    """Triangular system has a (near-)zero diagonal entry."""


def as_vector(x):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def is_sparse(M):
    return scipy.sparse.issparse(M)


def matvec(M, x, transpose=False):
    """Product M @ x (or M.T @ x) for dense or CSC M, with shape checks."""
    x = np.asarray(x, dtype=float)
    rows, cols = M.shape
    need = rows if transpose else cols
    if x.shape != (need,):
        raise DimensionError(
            f"matvec: matrix is {rows}x{cols} (transpose={transpose}), "
            f"vector has shape {x.shape}"
        )
    if transpose:
        return M.T @ x
    return M @ x


def qr_economy(A):
    """Economy QR of a tall matrix with positive R diagonal.

    Returns (Q, R) with Q of shape (rows, cols), R upper triangular with
    strictly positive diagonal so the factorization is unique. Raises
    RankDeficiencyError when a diagonal entry of R falls below the rank
    tolerance 1e-10 * max|A| * max(rows, cols).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < A.shape[1]:
        raise DimensionError(f"qr_economy expects rows >= cols, got {A.shape}")
    Q, R = np.linalg.qr(A, mode="reduced")
    # Flip signs so diag(R) > 0; keeps Q @ R == A.
    signs = np.sign(np.diag(R))
    signs[signs == 0.0] = 1.0
    Q = Q * signs
    R = signs[:, None] * R
    tol = 1e-10 * np.max(np.abs(A), initial=0.0) * max(A.shape)
    if np.any(np.diag(R) <= tol):
        raise RankDeficiencyError(
            "matrix is (numerically) rank deficient: "
            f"min |R_ii| = {np.min(np.abs(np.diag(R))):.3e}, tol = {tol:.3e}"
        )
    return Q, R


def solve_lower_triangular(L, b):
    """Solve L x = b with L square lower triangular."""
    L = np.asarray(L, dtype=float)
    b = np.asarray(b, dtype=float)
    n = L.shape[0]
    if L.shape != (n, n) or b.shape != (n,):
        raise DimensionError(f"triangular solve: L {L.shape}, b {b.shape}")
    diag = np.abs(np.diag(L))
    tol = 1e-14 * max(1.0, np.max(np.abs(L)))
    if np.any(diag <= tol):
        raise SingularMatrixError("zero or near-zero diagonal in triangular solve")
    return scipy.linalg.solve_triangular(L, b, lower=True)


def solve_upper_triangular(R, b):
    """Solve R x = b with R square upper triangular."""
    R = np.asarray(R, dtype=float)
    b = np.asarray(b, dtype=float)
    n = R.shape[0]
    if R.shape != (n, n) or b.shape != (n,):
        raise DimensionError(f"triangular solve: R {R.shape}, b {b.shape}")
    diag = np.abs(np.diag(R))
    tol = 1e-14 * max(1.0, np.max(np.abs(R)))
    if np.any(diag <= tol):
        raise SingularMatrixError("zero or near-zero diagonal in triangular solve")
    return scipy.linalg.solve_triangular(R, b, lower=False)


def power_iteration_max_eig(apply, dim, tol=1e-8, max_iters=5000, seed=0):
    """Largest eigenvalue of a symmetric PSD operator by power iteration.

    `apply` maps a vector of length `dim` to the operator applied to it.
    The start vector is a seeded pseudo-random unit vector so results are
    deterministic. Stops when the relative change of the Rayleigh quotient
    drops below `tol`; on non-convergence emits a warning and returns the
    best estimate (step-size rules tolerate overestimates).
    """
    if dim < 1:
        raise DimensionError("operator dimension must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iters):
        y = apply(x)
        lam_new = float(x @ y)
        ynorm = np.linalg.norm(y)
        if ynorm == 0.0:
            return 0.0
        x = y / ynorm
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-30):
            return lam_new
        lam = lam_new
    warnings.warn(
        f"power iteration did not converge in {max_iters} iterations; "
        f"returning best estimate {lam:.6e}",
        RuntimeWarning,
    )
    return lam


def matrix_exponential(A, t=1.0):
    """exp(A t) via scipy's scaling-and-squaring Pade implementation."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"matrix_exponential expects a square matrix, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return scipy.linalg.expm(A * t)
