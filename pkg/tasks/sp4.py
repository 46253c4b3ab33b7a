"""The sp(4) invariant-regression benchmark."""

import logging

import numpy as np

from errors import ConditioningError, ShapeError
from lie.algebra import hat, make_algebra, sample_algebra, vee
from lie.rng import DATA_STREAM, make_rng
from tasks.storage import Dataset

logger = logging.getLogger(__name__)

DEFAULT_SIGMA = 0.4


def sp4_targets(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """``sin tr(XY) + cos tr(YY) - tr(YY)^3 / 2 + det(XY) + exp tr(XX)`` over leading axes."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape or X.shape[-2:] != (4, 4):
        raise ShapeError(f"sp4 targets need matching 4x4 matrices, got {X.shape} and {Y.shape}")
    XY = X @ Y
    tr_xy = np.trace(XY, axis1=-2, axis2=-1)
    tr_yy = np.einsum("...ij,...ji->...", Y, Y)
    tr_xx = np.einsum("...ij,...ji->...", X, X)
    with np.errstate(over="ignore"):
        value = np.sin(tr_xy) + np.cos(tr_yy) - 0.5 * tr_yy**3 + np.linalg.det(XY) + np.exp(tr_xx)
    if not np.all(np.isfinite(value)):
        raise ConditioningError("sp4 target overflowed; reduce the sampling scale")
    return value


def sp4_target(X: np.ndarray, Y: np.ndarray, check_span: bool = False) -> float:
    if check_span:
        basis = make_algebra("sp4")
        vee(X, basis)
        vee(Y, basis)
    return float(sp4_targets(X, Y))


def gen_sp4_dataset(N: int, sigma: float = DEFAULT_SIGMA, seed: int = 0) -> Dataset:
    """``N`` coordinate pairs ``(x, y)`` with standardized targets."""
    if N < 1:
        raise ValueError("N must be at least 1")
    basis = make_algebra("sp4")
    rng = make_rng(seed, DATA_STREAM)
    coords = sample_algebra(basis, sigma, rng, size=2 * N).reshape(N, 2, basis.K)
    raw = sp4_targets(hat(coords[:, 0], basis), hat(coords[:, 1], basis))

    mean = float(raw.mean())
    std = float(raw.std())
    if not std > 0:
        std = 1.0
    logger.info(f"Generated {N} sp4 pairs (sigma {sigma}, seed {seed}); target mean {mean:.4g}, std {std:.4g}")
    return Dataset(
        algebra="sp4",
        n=basis.n,
        K=basis.K,
        inputs_per_sample=2,
        channels=2,
        target_dim=1,
        seed=seed,
        target_mean=mean,
        target_std=std,
        inputs=coords,
        targets=((raw - mean) / std)[:, None],
    )
