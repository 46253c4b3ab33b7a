"""Ad-invariant bilinear forms: trace form, Killing oracle and the modified reductive form."""

import logging
from collections.abc import Callable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from errors import FormError, ShapeError
from lie.algebra import (
    LieAlgebraBasis,
    ad_matrix,
    sample_algebra,
    sample_group,
    vee,
)
from lie.linalg import is_symmetric, jacobi_eigh, symmetric_rank
from models import FormKind

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10
SUBSPACE_TOLERANCE = 1e-10


class BilinearForm(BaseModel):
    """A symmetric form stored as its Gram matrix in basis coordinates."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    gram: np.ndarray  # [K, K]
    algebra: LieAlgebraBasis
    kind: FormKind

    def apply(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``x^T G y`` over the last axis; leading axes broadcast."""
        return np.einsum("...i,ij,...j->...", x, self.gram, y)


class CenterDecomposition(BaseModel):
    """Coordinates spanning the center and the derived (semisimple) ideal."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    center_coords: np.ndarray  # [z, K]
    semisimple_coords: np.ndarray  # [s, K]


def _require_pair(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim < 2 or X.shape[-2:] != Y.shape[-2:] or X.shape[-1] != X.shape[-2]:
        raise ShapeError(f"forms need matching square matrices, got {X.shape} and {Y.shape}")
    return X, Y


def trace_form(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """``tr(XY)``; leading axes broadcast."""
    X, Y = _require_pair(X, Y)
    return np.einsum("...ij,...ji->...", X, Y)


def modified_form_gl(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Non-degenerate invariant form on gl(n): ``2n tr(XY) - tr(X) tr(Y)``."""
    X, Y = _require_pair(X, Y)
    n = X.shape[-1]
    return 2 * n * trace_form(X, Y) - np.trace(X, axis1=-2, axis2=-1) * np.trace(Y, axis1=-2, axis2=-1)


def decompose_gl(X: np.ndarray) -> tuple[np.ndarray, float]:
    """Split ``X = X0 + (tr X / n) I`` with ``X0`` traceless."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ShapeError(f"decompose_gl needs a square matrix, got {X.shape}")
    n = X.shape[0]
    trace = float(np.trace(X))
    return X - (trace / n) * np.eye(n), trace


def gram_from_matrix_form(
    basis: LieAlgebraBasis,
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    kind: FormKind,
) -> BilinearForm:
    """Evaluate a matrix-level form on every pair of basis elements."""
    E = basis.basis
    gram = fn(E[:, None, :, :], E[None, :, :, :])
    gram = 0.5 * (gram + gram.T)
    return BilinearForm(gram=gram, algebra=basis, kind=kind)


def killing_oracle(basis: LieAlgebraBasis) -> BilinearForm:
    """Killing form ``tr(ad_X ad_Y)`` computed by brute force from structure constants."""
    ads = [ad_matrix(np.eye(basis.K)[i], basis) for i in range(basis.K)]
    gram = np.array([[np.trace(a @ b) for b in ads] for a in ads])
    return BilinearForm(gram=gram, algebra=basis, kind="killing_oracle")


def _orthonormal_span(vectors: np.ndarray) -> np.ndarray:
    if vectors.size == 0:
        return np.zeros((0, vectors.shape[-1]))
    _, singular, vt = np.linalg.svd(vectors, full_matrices=False)
    if singular.size == 0 or singular[0] == 0:
        return np.zeros((0, vectors.shape[-1]))
    rank = int(np.count_nonzero(singular > SUBSPACE_TOLERANCE * singular[0]))
    return vt[:rank]


def center_decomposition(basis: LieAlgebraBasis) -> CenterDecomposition:
    """Center as the common kernel of all ad matrices; [g, g] as the span of all brackets.

    For gl(n) the center vector is ``vee(I / n)`` so that its coordinate is ``tr(X)``.
    """
    K = basis.K
    c = basis.structure
    if basis.name == "gln":
        center = vee(np.eye(basis.n) / basis.n, basis)[None, :]
    else:
        # z is central iff sum_i z_i c[i, j, k] = 0 for all j, k
        constraints = c.reshape(K, K * K).T
        _, singular, vt = np.linalg.svd(constraints, full_matrices=True)
        scale = singular[0] if singular.size and singular[0] > 0 else 1.0
        rank = int(np.count_nonzero(singular > SUBSPACE_TOLERANCE * scale))
        center = vt[rank:]
    semisimple = _orthonormal_span(c.reshape(K * K, K))
    return CenterDecomposition(center_coords=center, semisimple_coords=semisimple)


def _validate_decomposition(basis: LieAlgebraBasis, decomposition: CenterDecomposition) -> np.ndarray:
    Z = decomposition.center_coords
    S = decomposition.semisimple_coords
    if Z.shape[-1:] != (basis.K,) or S.shape[-1:] != (basis.K,):
        raise FormError("decomposition vectors must have K coordinates")
    for z in Z:
        if np.max(np.abs(ad_matrix(z, basis)), initial=0.0) > 1e-12 * max(1.0, float(np.max(np.abs(z)))):
            raise FormError("center vector does not commute with the algebra")
    P = np.concatenate([Z, S], axis=0).T
    if P.shape != (basis.K, basis.K) or np.linalg.matrix_rank(P) != basis.K:
        raise FormError("center and semisimple parts do not span the algebra")
    return P


def modified_form_general(
    basis: LieAlgebraBasis,
    decomposition: CenterDecomposition,
    center_inner: np.ndarray,
) -> BilinearForm:
    """Reductive form: ``center_inner`` on the center plus the Killing form on [g, g].

    The two blocks are orthogonal by construction.
    """
    P = _validate_decomposition(basis, decomposition)
    z = decomposition.center_coords.shape[0]
    center_inner = np.atleast_2d(np.asarray(center_inner, dtype=np.float64)) if z else np.zeros((0, 0))
    if center_inner.shape != (z, z):
        raise FormError(f"center_inner must be {z}x{z}, got {center_inner.shape}")
    if z:
        if not is_symmetric(center_inner, 1e-12):
            raise FormError("center_inner must be symmetric")
        eigenvalues, _ = jacobi_eigh(center_inner)
        if eigenvalues[0] <= 0:
            raise FormError("center_inner must be positive-definite")

    S = decomposition.semisimple_coords
    killing = killing_oracle(basis).gram
    block = np.zeros((basis.K, basis.K))
    block[:z, :z] = center_inner
    block[z:, z:] = S @ killing @ S.T
    P_inv = np.linalg.inv(P)
    gram = P_inv.T @ block @ P_inv
    gram = 0.5 * (gram + gram.T)
    return BilinearForm(gram=gram, algebra=basis, kind="modified_general")


def averaged_center_form(center_inner: np.ndarray, component_actions: Sequence[np.ndarray]) -> np.ndarray:
    """Average an inner product on the center over a finite group of component actions."""
    if not component_actions:
        raise FormError("component_actions must not be empty")
    center_inner = np.atleast_2d(np.asarray(center_inner, dtype=np.float64))
    total = np.zeros_like(center_inner)
    for gamma in component_actions:
        gamma = np.atleast_2d(np.asarray(gamma, dtype=np.float64))
        if gamma.shape != center_inner.shape:
            raise FormError(f"action shape {gamma.shape} does not match inner product {center_inner.shape}")
        if abs(np.linalg.det(gamma)) < 1e-12:
            raise FormError("component action is not invertible")
        total += gamma.T @ center_inner @ gamma
    return total / len(component_actions)


def random_symmetric_form(basis: LieAlgebraBasis, rng: np.random.Generator) -> BilinearForm:
    """A symmetric Gram with no invariance; negative control for the audit."""
    A = rng.normal(size=(basis.K, basis.K))
    return BilinearForm(gram=A + A.T, algebra=basis, kind="custom")


def form_for_model(basis: LieAlgebraBasis, kind: FormKind = "modified_gl") -> BilinearForm:
    """The form a model uses for gates, pooling and readout."""
    if kind == "modified_gl":
        return gram_from_matrix_form(basis, modified_form_gl, "modified_gl")
    if kind == "trace":
        return gram_from_matrix_form(basis, trace_form, "trace")
    if kind == "killing_oracle":
        return killing_oracle(basis)
    if kind == "modified_general":
        decomposition = center_decomposition(basis)
        z = decomposition.center_coords.shape[0]
        return modified_form_general(basis, decomposition, np.eye(z))
    raise FormError(f"form kind '{kind}' cannot be built for a model")


def check_ad_invariance(
    form: BilinearForm,
    basis: LieAlgebraBasis,
    trials: int,
    sigma: float,
    rng: np.random.Generator,
) -> float:
    """Worst relative change of ``form(X, Y)`` under random conjugations."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    worst = 0.0
    for _ in range(trials):
        element = sample_group(basis, sigma, rng)
        x = sample_algebra(basis, 1.0, rng)
        y = sample_algebra(basis, 1.0, rng)
        before = float(form.apply(x, y))
        after = float(form.apply(element.adj_vec @ x, element.adj_vec @ y))
        worst = max(worst, abs(after - before) / (1.0 + abs(before)))
    return worst


def nondegeneracy_rank(form: BilinearForm) -> int:
    """Numerical rank of the Gram (singular values above 1e-10 of the largest)."""
    return symmetric_rank(form.gram, RANK_TOLERANCE)
