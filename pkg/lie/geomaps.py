"""Embeddings that turn left and congruence actions into adjoint actions.

Vectors acted on by a Lorentz or orthogonal matrix are lifted to block
matrices one size larger; covariances acted on by congruence ``R C R^T`` are
mapped through the SPD matrix logarithm; rotation-equivariant vectors are read
back out of a matrix through its skew-symmetric part.
"""

import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from errors import ConditioningError, ShapeError
from lie.algebra import GroupElement, hat, make_algebra, sample_group, vee
from lie.forms import modified_form_gl
from lie.linalg import is_symmetric, jacobi_eigh, symmetric_function

logger = logging.getLogger(__name__)

Signature = Literal["+---", "-+++"]

SPD_CONDITION_LIMIT = 1e12


class FourMomentum(BaseModel):
    """Energy-momentum four-vector ``(E, px, py, pz)`` in natural units."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    p: np.ndarray

    @field_validator("p", mode="before")
    @classmethod
    def _check_vector(cls, value: object) -> np.ndarray:
        p = np.asarray(value, dtype=np.float64)
        if p.shape != (4,):
            raise ValueError(f"four-momentum must have 4 components, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("four-momentum must be finite")
        return p


class SpdMatrix(BaseModel):
    """A symmetric positive-definite matrix, validated on construction."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    C: np.ndarray

    @field_validator("C", mode="before")
    @classmethod
    def _check_spd(cls, value: object) -> np.ndarray:
        C = np.asarray(value, dtype=np.float64)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError(f"SPD matrix must be square, got shape {C.shape}")
        if not is_symmetric(C, 1e-12):
            raise ValueError("SPD matrix must be symmetric")
        eigenvalues, _ = jacobi_eigh(C)
        if eigenvalues[0] <= 0:
            raise ValueError(f"SPD matrix has non-positive eigenvalue {eigenvalues[0]:.3e}")
        return C


def minkowski_metric(signature: Signature = "+---") -> np.ndarray:
    """``diag(1, -1, -1, -1)`` or ``diag(-1, 1, 1, 1)``."""
    if signature == "+---":
        return np.diag([1.0, -1.0, -1.0, -1.0])
    if signature == "-+++":
        return np.diag([-1.0, 1.0, 1.0, 1.0])
    raise ValueError(f"unknown metric signature '{signature}'")


def _momentum(p: FourMomentum | np.ndarray) -> np.ndarray:
    return p.p if isinstance(p, FourMomentum) else FourMomentum(p=p).p


def lorentz_lift(p: FourMomentum | np.ndarray, signature: Signature = "+---") -> np.ndarray:
    """Lift a four-momentum into gl(5) as ``[[0, p], [p^T eta, 0]]``.

    Conjugation by ``diag(Lambda, 1)`` maps ``lift(p)`` to ``lift(Lambda p)``.
    """
    p = _momentum(p)
    lifted = np.zeros((5, 5))
    lifted[:4, 4] = p
    lifted[4, :4] = p @ minkowski_metric(signature)
    return lifted


def orthogonal_lift(v: np.ndarray) -> np.ndarray:
    """Lift ``v`` into gl(n+1) as the symmetric block ``[[0, v], [v^T, 0]]``."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"orthogonal_lift expects a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ConditioningError("orthogonal_lift received non-finite entries")
    n = v.shape[0]
    lifted = np.zeros((n + 1, n + 1))
    lifted[:n, n] = v
    lifted[n, :n] = v
    return lifted


def block_embed(R: np.ndarray) -> np.ndarray:
    """``diag(R, 1)``, the group element acting on lifted vectors."""
    R = np.asarray(R, dtype=np.float64)
    n = R.shape[0]
    G = np.eye(n + 1)
    G[:n, :n] = R
    return G


def lorentz_group_sample(sigma: float, rng: np.random.Generator) -> GroupElement:
    """A proper orthochronous Lorentz matrix ``exp(omega)``, omega sampled in so(1,3)."""
    return sample_group(make_algebra("so13"), sigma, rng)


def spd_log(C: SpdMatrix | np.ndarray) -> np.ndarray:
    """Matrix logarithm ``V log(L) V^T`` of an SPD matrix."""
    C = C.C if isinstance(C, SpdMatrix) else np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or not is_symmetric(C, 1e-12):
        raise ShapeError("spd_log expects a symmetric square matrix")
    eigenvalues, V = jacobi_eigh(C)
    largest = float(eigenvalues[-1])
    if eigenvalues[0] <= 0 or eigenvalues[0] <= largest / SPD_CONDITION_LIMIT:
        raise ConditioningError(f"matrix is not (well-conditioned) positive-definite: eigenvalues {eigenvalues}")
    return symmetric_function(C, np.log, (eigenvalues, V))


def spd_exp(S: np.ndarray) -> SpdMatrix:
    """Matrix exponential of a symmetric matrix via eigendecomposition."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ShapeError(f"spd_exp expects a square matrix, got shape {S.shape}")
    if not is_symmetric(S, 1e-10):
        raise ShapeError("spd_exp expects a symmetric matrix")
    return SpdMatrix.model_construct(C=symmetric_function(S, np.exp))


def skew_extract(A: np.ndarray) -> np.ndarray:
    """Rotation-equivariant vector of a 3x3 matrix: vee of its skew-symmetric part."""
    A = np.asarray(A, dtype=np.float64)
    if A.shape[-2:] != (3, 3):
        raise ShapeError(f"skew_extract expects 3x3 matrices, got shape {A.shape}")
    skew = 0.5 * (A - np.swapaxes(A, -1, -2))
    return vee(skew, make_algebra("so3"))


def stabilize(z: np.ndarray | float) -> np.ndarray:
    """Odd, monotone squashing ``sign(z) log(1 + |z|)``."""
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z) * np.log1p(np.abs(z))


def pairwise_invariant(
    p_i: FourMomentum | np.ndarray,
    p_j: FourMomentum | np.ndarray,
    signature: Signature = "+---",
) -> float:
    """Lorentz-invariant edge feature ``psi(B(lift(p_i), lift(p_j)))`` on gl(5)."""
    z = modified_form_gl(lorentz_lift(p_i, signature), lorentz_lift(p_j, signature))
    return float(stabilize(z))


def edge_features(
    p_i: FourMomentum | np.ndarray,
    p_j: FourMomentum | np.ndarray,
    signature: Signature = "+---",
) -> tuple[float, float]:
    """The self and pair invariants that enter a particle edge message."""
    return pairwise_invariant(p_i, p_i, signature), pairwise_invariant(p_i, p_j, signature)


def embed_velocity_covariance(v: np.ndarray, C: np.ndarray, use_log: bool = True) -> np.ndarray:
    """Two-channel gl(3) feature ``[vee(hat(v)), vee(log C or C)]`` of shape ``[9, 2]``.

    Both channels transform by ``X -> R X R^T`` when ``v -> R v`` and ``C -> R C R^T``.
    """
    gl3 = make_algebra("gln", 3)
    velocity = vee(hat(np.asarray(v, dtype=np.float64), make_algebra("so3")), gl3)
    covariance = spd_log(C) if use_log else np.asarray(C, dtype=np.float64)
    return np.stack([velocity, vee(covariance, gl3)], axis=-1)
