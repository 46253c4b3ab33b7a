"""Regression metrics under the adjoint action.

Each conjugation round draws one group element and applies it to every
sample, so ``M`` rounds cost ``M`` full passes over the data.
"""

import logging
import time

import numpy as np

from errors import IncompatibleError
from lie.algebra import GroupElement, conjugate_features, sample_group_or_identity
from lie.rng import EVAL_STREAM, make_rng
from models import EvalReport
from network.model import Network
from tasks.storage import Dataset
from training.parallel import map_chunks

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 64


def check_compatible(model: Network, ds: Dataset) -> None:
    """Raise ``IncompatibleError`` unless ``model`` can consume ``ds``."""
    if model.basis.label != ds.algebra:
        raise IncompatibleError(f"model is built on {model.basis.label} but the dataset holds {ds.algebra}")
    if model.in_channels != ds.channels:
        raise IncompatibleError(f"model expects {model.in_channels} input channels, dataset has {ds.channels}")


def predict(model: Network, features: np.ndarray, chunk_size: int = DEFAULT_CHUNK_SIZE, threads: int = 1) -> np.ndarray:
    """Model outputs for ``[N, K, C]`` features, evaluated chunk by chunk."""
    outputs = map_chunks(lambda s: model.forward(features[s])[0], len(features), chunk_size, threads)
    return np.concatenate(outputs, axis=0)


def _rounds(model: Network, M: int, sigma: float, seed: int) -> list[GroupElement]:
    if M < 1:
        raise ValueError("M must be at least 1")
    rng = make_rng(seed, EVAL_STREAM)
    return [sample_group_or_identity(model.basis, sigma, rng) for _ in range(M)]


def invariance_error(
    model: Network,
    ds: Dataset | np.ndarray,
    M: int,
    sigma: float,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
) -> float:
    """Mean over samples and ``M`` conjugations of ``(f(Ad_g x) - f(x))^2``."""
    features = ds.features if isinstance(ds, Dataset) else np.asarray(ds, dtype=np.float64)
    base = predict(model, features, chunk_size, threads)
    total = 0.0
    for element in _rounds(model, M, sigma, seed):
        moved = predict(model, conjugate_features(features, element), chunk_size, threads)
        total += float(np.mean((moved - base) ** 2))
    return total / M


def evaluate(
    model: Network,
    ds: Dataset,
    M: int,
    sigma: float,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
) -> EvalReport:
    """In-distribution MSE, MSE averaged over ``M`` conjugations, and the invariance error."""
    check_compatible(model, ds)
    started = time.perf_counter()
    features = ds.features
    base = predict(model, features, chunk_size, threads)
    mse_id = float(np.mean((base - ds.targets) ** 2))

    conjugated = 0.0
    deviation = 0.0
    for element in _rounds(model, M, sigma, seed):
        moved = predict(model, conjugate_features(features, element), chunk_size, threads)
        conjugated += float(np.mean((moved - ds.targets) ** 2))
        deviation += float(np.mean((moved - base) ** 2))

    report = EvalReport(
        mse_id=mse_id,
        mse_conjugated=conjugated / M,
        invariance_error=deviation / M,
        M=M,
        group_sigma=sigma,
        wall_time=time.perf_counter() - started,
    )
    logger.debug(f"Evaluated {ds.N} samples under {M} conjugations in {report.wall_time:.2f}s")
    return report
