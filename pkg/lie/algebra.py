"""Matrix Lie algebras: bases, hat/vee coordinates, brackets and adjoint actions.

Conventions for the supported algebras:

- ``so3``: the three standard generators, so that ``hat(v)`` is the cross-product matrix.
- ``sl2``, ``sl3``: off-diagonal pairs ``E_ij, E_ji`` for ``i < j`` (``E12, E21, E13, E31, E23, E32``),
  then the diagonal differences ``E_ii - E_(i+1)(i+1)``.
- ``sp4``: ``[[A, B], [C, -A^T]]`` with ``B, C`` symmetric, i.e. ``X^T J + J X = 0``
  for ``J = [[0, I2], [-I2, 0]]``; ordered as the four ``A`` units, then ``B``, then ``C``.
- ``so13``: three rotations then three boosts preserving ``eta = diag(-1, 1, 1, 1)``.
- ``gln``: elementary matrices ``E_ij`` in row-major order.
"""

import logging
import re
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict

from errors import AlgebraError, ConditioningError, NotInSpanError, ShapeError
from lie.linalg import matrix_exp

logger = logging.getLogger(__name__)

SUPPORTED_ALGEBRAS = ("so3", "sl2", "sl3", "sp4", "so13", "gln")

VEE_RELATIVE_TOLERANCE = 1e-8
MAX_CONDITION_NUMBER = 1e6
MAX_GROUP_RESAMPLES = 10

ALGEBRA_FLAG_PATTERN = re.compile(r"^(so3|sl2|sl3|sp4|so13|gl(\d+))$")


class LieAlgebraBasis(BaseModel):
    """A named matrix Lie algebra with an ordered basis and precomputed tables."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    n: int
    K: int
    basis: np.ndarray  # [K, n, n]
    structure: np.ndarray  # [K, K, K], [E_i, E_j] = sum_k c[i, j, k] E_k
    frobenius_gram: np.ndarray  # [K, K]
    dual_gram_inverse: np.ndarray  # [K, K]
    metric: np.ndarray | None = None  # J for sp4, eta for so13

    @property
    def label(self) -> str:
        """CLI spelling of the algebra (``gl3`` rather than ``gln``)."""
        return f"gl{self.n}" if self.name == "gln" else self.name


class GroupElement(BaseModel):
    """An invertible matrix together with its inverse and vectorized adjoint."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    g: np.ndarray  # [n, n]
    g_inv: np.ndarray  # [n, n]
    adj_vec: np.ndarray  # [K, K]


def _unit(n: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((n, n))
    E[i, j] = 1.0
    return E


def _so3_basis() -> list[np.ndarray]:
    return [
        np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]),
        np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]),
        np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
    ]


def _sln_basis(n: int) -> list[np.ndarray]:
    elements = []
    for i in range(n):
        for j in range(i + 1, n):
            elements.extend([_unit(n, i, j), _unit(n, j, i)])
    elements.extend(_unit(n, i, i) - _unit(n, i + 1, i + 1) for i in range(n - 1))
    return elements


def symplectic_form(m: int = 2) -> np.ndarray:
    """The standard symplectic matrix ``J = [[0, I], [-I, 0]]`` of size 2m."""
    identity = np.eye(m)
    zero = np.zeros((m, m))
    return np.block([[zero, identity], [-identity, zero]])


def _sp4_basis() -> list[np.ndarray]:
    m = 2
    elements = []
    for i in range(m):
        for j in range(m):
            A = _unit(m, i, j)
            elements.append(np.block([[A, np.zeros((m, m))], [np.zeros((m, m)), -A.T]]))
    symmetric = [_unit(m, 0, 0), _unit(m, 1, 1), _unit(m, 0, 1) + _unit(m, 1, 0)]
    for B in symmetric:
        elements.append(np.block([[np.zeros((m, m)), B], [np.zeros((m, m)), np.zeros((m, m))]]))
    for C in symmetric:
        elements.append(np.block([[np.zeros((m, m)), np.zeros((m, m))], [C, np.zeros((m, m))]]))
    return elements


def _so13_basis() -> list[np.ndarray]:
    elements = []
    for i, j in [(2, 3), (3, 1), (1, 2)]:
        elements.append(_unit(4, j, i) - _unit(4, i, j))
    for i in (1, 2, 3):
        elements.append(_unit(4, 0, i) + _unit(4, i, 0))
    return elements


def _gln_basis(n: int) -> list[np.ndarray]:
    return [_unit(n, i, j) for i in range(n) for j in range(n)]


def _compute_structure(basis: np.ndarray, dual_gram_inverse: np.ndarray) -> np.ndarray:
    K, n, _ = basis.shape
    brackets = np.einsum("iab,jbc->ijac", basis, basis) - np.einsum("jab,ibc->ijac", basis, basis)
    flat_basis = basis.reshape(K, n * n)
    projections = brackets.reshape(K * K, n * n) @ flat_basis.T
    coords = projections @ dual_gram_inverse.T
    residual = brackets.reshape(K * K, n * n) - coords @ flat_basis
    worst = float(np.max(np.abs(residual), initial=0.0))
    if worst > 1e-12:
        raise AlgebraError(f"basis is not closed under the bracket (residual {worst:.3e})")
    return coords.reshape(K, K, K)


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@lru_cache(maxsize=None)
def make_algebra(name: str, n: int | None = None) -> LieAlgebraBasis:
    """Build one of the supported algebras.

    ``n`` is required for ``gln`` (n >= 2) and ignored otherwise.
    """
    metric = None
    if name == "so3":
        elements, size = _so3_basis(), 3
    elif name == "sl2":
        elements, size = _sln_basis(2), 2
    elif name == "sl3":
        elements, size = _sln_basis(3), 3
    elif name == "sp4":
        elements, size = _sp4_basis(), 4
        metric = symplectic_form(2)
    elif name == "so13":
        elements, size = _so13_basis(), 4
        metric = np.diag([-1.0, 1.0, 1.0, 1.0])
    elif name == "gln":
        if n is None or n < 2:
            raise AlgebraError(f"gln requires n >= 2, got {n}")
        elements, size = _gln_basis(n), n
    else:
        raise AlgebraError(f"Unknown algebra '{name}'; expected one of {', '.join(SUPPORTED_ALGEBRAS)}")

    basis = np.stack(elements)
    K = basis.shape[0]
    flat = basis.reshape(K, size * size)
    frobenius_gram = flat @ flat.T
    if np.linalg.matrix_rank(frobenius_gram) != K:
        raise AlgebraError(f"basis of {name} is linearly dependent")
    dual_gram_inverse = np.linalg.inv(frobenius_gram)
    structure = _compute_structure(basis, dual_gram_inverse)

    logger.debug(f"Built algebra {name} (n={size}, K={K})")
    return LieAlgebraBasis(
        name=name,
        n=size,
        K=K,
        basis=_freeze(basis),
        structure=_freeze(structure),
        frobenius_gram=_freeze(frobenius_gram),
        dual_gram_inverse=_freeze(dual_gram_inverse),
        metric=None if metric is None else _freeze(metric),
    )


def algebra_from_flag(text: str) -> LieAlgebraBasis:
    """Parse CLI spellings such as ``so3``, ``sp4`` or ``gl3``."""
    match = ALGEBRA_FLAG_PATTERN.match(text.strip().lower())
    if not match:
        raise AlgebraError(f"Unknown algebra '{text}'; expected so3, sl2, sl3, sp4, so13 or glN")
    if match.group(2) is not None:
        return make_algebra("gln", int(match.group(2)))
    return make_algebra(match.group(1))


def hat(x: np.ndarray, basis: LieAlgebraBasis) -> np.ndarray:
    """Coordinates to matrix: ``sum_i x_i E_i``. Leading axes are broadcast."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != basis.K:
        raise ShapeError(f"expected {basis.K} coordinates, got {x.shape[-1]}")
    return np.tensordot(x, basis.basis, axes=([-1], [0]))


def vee(X: np.ndarray, basis: LieAlgebraBasis, rel_tol: float = VEE_RELATIVE_TOLERANCE) -> np.ndarray:
    """Matrix to coordinates by Frobenius projection onto the basis span.

    Raises ``NotInSpanError`` if the projection residual exceeds
    ``rel_tol * (1 + ||X||_F)``. Leading axes are broadcast and checked jointly.
    """
    X = np.asarray(X, dtype=np.float64)
    n = basis.n
    if X.shape[-2:] != (n, n):
        raise ShapeError(f"expected {n}x{n} matrices, got shape {X.shape}")
    lead = X.shape[:-2]
    flat = X.reshape(-1, n * n)
    coords = (flat @ basis.basis.reshape(basis.K, n * n).T) @ basis.dual_gram_inverse.T
    residual = np.linalg.norm(flat - coords @ basis.basis.reshape(basis.K, n * n), axis=1)
    tolerance = rel_tol * (1.0 + np.linalg.norm(flat, axis=1))
    if np.any(residual > tolerance):
        worst = int(np.argmax(residual - tolerance))
        raise NotInSpanError(float(residual[worst]), float(tolerance[worst]))
    return coords.reshape(*lead, basis.K)


def bracket(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Matrix commutator ``XY - YX``."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape or X.shape[-1] != X.shape[-2]:
        raise ShapeError(f"bracket needs equal square shapes, got {X.shape} and {Y.shape}")
    return X @ Y - Y @ X


def structure_constants(basis: LieAlgebraBasis) -> np.ndarray:
    """Structure tensor ``c`` with ``[E_i, E_j] = sum_k c[i, j, k] E_k``."""
    return basis.structure


def ad_matrix(x: np.ndarray, basis: LieAlgebraBasis) -> np.ndarray:
    """K x K matrix of ``Y -> [hat(x), Y]`` in basis coordinates."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (basis.K,):
        raise ShapeError(f"expected {basis.K} coordinates, got shape {x.shape}")
    return np.einsum("i,ijk->kj", x, basis.structure)


def sample_algebra(basis: LieAlgebraBasis, sigma: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """I.i.d. Gaussian coordinates with standard deviation ``sigma``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    shape = (basis.K,) if size is None else (size, basis.K)
    return rng.normal(0.0, sigma, size=shape)


def group_element(basis: LieAlgebraBasis, g: np.ndarray, g_inv: np.ndarray) -> GroupElement:
    """Assemble the vectorized adjoint column by column from ``vee(g E_i g^-1)``."""
    conjugated = np.einsum("ab,kbc,cd->kad", g, basis.basis, g_inv)
    adj_vec = vee(conjugated, basis).T
    return GroupElement(g=g, g_inv=g_inv, adj_vec=adj_vec)


def identity_element(basis: LieAlgebraBasis) -> GroupElement:
    identity = np.eye(basis.n)
    return GroupElement(g=identity, g_inv=identity.copy(), adj_vec=np.eye(basis.K))


def exp_element(x: np.ndarray, basis: LieAlgebraBasis) -> GroupElement:
    """Group element ``exp(hat(x))`` with the exact inverse ``exp(-hat(x))``."""
    X = hat(x, basis)
    return group_element(basis, matrix_exp(X), matrix_exp(-X))


def sample_group(basis: LieAlgebraBasis, sigma: float, rng: np.random.Generator) -> GroupElement:
    """Exponential of a Gaussian algebra sample, resampled if badly conditioned."""
    for attempt in range(MAX_GROUP_RESAMPLES):
        element = exp_element(sample_algebra(basis, sigma, rng), basis)
        condition = float(np.linalg.cond(element.g))
        if condition <= MAX_CONDITION_NUMBER:
            return element
        logger.warning(f"Resampling group element (attempt {attempt + 1}): condition number {condition:.2e}")
    raise ConditioningError(f"no group sample with condition number <= {MAX_CONDITION_NUMBER:.0e} after {MAX_GROUP_RESAMPLES} tries")


def sample_group_or_identity(basis: LieAlgebraBasis, sigma: float, rng: np.random.Generator) -> GroupElement:
    """Like ``sample_group`` but a zero ``sigma`` yields the identity."""
    if sigma == 0:
        return identity_element(basis)
    return sample_group(basis, sigma, rng)


def compose(basis: LieAlgebraBasis, a: GroupElement, b: GroupElement) -> GroupElement:
    """The product ``a b``; its adjoint is recomputed by conjugation, not multiplied."""
    return group_element(basis, a.g @ b.g, b.g_inv @ a.g_inv)


def conjugate_features(x: np.ndarray, element: GroupElement) -> np.ndarray:
    """Apply ``Ad_g`` to every column of a ``[..., K, C]`` feature tensor."""
    return np.einsum("kj,...jc->...kc", element.adj_vec, x)
