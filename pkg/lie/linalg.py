"""Small dense kernels: Taylor matrix exponential and a cyclic Jacobi eigensolver."""

import logging
import math
from collections.abc import Callable

import numpy as np

from errors import ConditioningError, ShapeError

logger = logging.getLogger(__name__)

TAYLOR_DEGREE = 18
# Scaled matrices are brought below this 1-norm before the Taylor series
SCALED_NORM = 0.5

JACOBI_TOLERANCE = 1e-13
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOLERANCE = 1e-10


def _require_square(X: np.ndarray, name: str = "matrix") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {X.shape}")
    return X


def matrix_exp(X: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring a degree-18 Taylor polynomial.

    The matrix is scaled by 2**-s until its 1-norm is at most 0.5, the
    polynomial is evaluated in Horner form, and the result is squared s times.
    """
    X = _require_square(X)
    if not np.all(np.isfinite(X)):
        raise ConditioningError("matrix_exp received non-finite entries")

    n = X.shape[0]
    norm = float(np.linalg.norm(X, 1))
    squarings = 0 if norm <= SCALED_NORM else math.ceil(math.log2(norm / SCALED_NORM))
    A = X / (2.0**squarings)

    identity = np.eye(n)
    result = identity.copy()
    for k in range(TAYLOR_DEGREE, 0, -1):
        result = identity + (A @ result) / k

    for _ in range(squarings):
        result = result @ result
    return result


def is_symmetric(S: np.ndarray, tolerance: float = SYMMETRY_TOLERANCE) -> bool:
    """Check symmetry to ``tolerance`` relative to the largest entry (at least 1)."""
    S = np.asarray(S, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    return bool(np.max(np.abs(S - S.T), initial=0.0) <= tolerance * scale)


def jacobi_eigh(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, V)`` with eigenvalues ascending and the columns of
    ``V`` the matching orthonormal eigenvectors, so ``V @ diag(w) @ V.T == S``.
    """
    S = _require_square(S, "symmetric matrix")
    if not is_symmetric(S):
        raise ShapeError("jacobi_eigh requires a symmetric matrix")

    A = 0.5 * (S + S.T)
    n = A.shape[0]
    V = np.eye(n)
    target = JACOBI_TOLERANCE * float(np.linalg.norm(A))

    for sweep in range(JACOBI_MAX_SWEEPS + 1):
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off <= target:
            break
        if sweep == JACOBI_MAX_SWEEPS:
            raise ConditioningError(f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps")

        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q

                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0

                vec_p = V[:, p].copy()
                vec_q = V[:, q].copy()
                V[:, p] = c * vec_p - s * vec_q
                V[:, q] = s * vec_p + c * vec_q

    eigenvalues = np.diag(A).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], V[:, order]


def symmetric_rank(S: np.ndarray, rel_tol: float = 1e-10) -> int:
    """Numerical rank of a symmetric matrix.

    Singular values of a symmetric matrix are the absolute eigenvalues, so the
    Jacobi solver is run on ``S`` itself rather than on ``S.T @ S``.
    """
    eigenvalues, _ = jacobi_eigh(S)
    singular = np.abs(eigenvalues)
    largest = float(singular.max(initial=0.0))
    if largest == 0.0:
        return 0
    return int(np.count_nonzero(singular > rel_tol * largest))


def symmetric_function(
    S: np.ndarray,
    fn: Callable[[np.ndarray], np.ndarray],
    decomposition: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """``V fn(L) V^T`` for a symmetric ``S``; pass ``decomposition`` to reuse a ``jacobi_eigh`` result."""
    eigenvalues, V = decomposition if decomposition is not None else jacobi_eigh(S)
    result = (V * fn(eigenvalues)) @ V.T
    return 0.5 * (result + result.T)
