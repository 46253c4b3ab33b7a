"""Toy velocity/covariance sequences with speed-dependent sensor noise.

Ground-truth velocities are sums of sinusoids, the noise magnitude follows a
sigmoid in speed, and each step's covariance is made anisotropic by a slowly
drifting rotation. Samples embed ``(noisy velocity, covariance)`` into gl(3)
and regress the clean velocity.
"""

import logging
import math
from typing import NamedTuple

import numpy as np

from errors import ShapeError
from lie.algebra import hat, make_algebra
from lie.geomaps import embed_velocity_covariance
from lie.linalg import matrix_exp
from lie.rng import DATA_STREAM, make_rng
from models import NoiseParams
from tasks.storage import Dataset

logger = logging.getLogger(__name__)

SINUSOIDS_PER_AXIS = 3
# Covariance eigenvalues relative to sigma^2; largest / smallest = 3
ANISOTROPY = np.array([3.0**-0.5, 1.0, 3.0**0.5])
ROTATION_DRIFT = 0.05


class CovSequence(NamedTuple):
    velocities: np.ndarray  # [T, 3]
    covariances: np.ndarray  # [T, 3, 3]
    positions: np.ndarray  # [T, 3]
    noisy_velocities: np.ndarray  # [T, 3]


def noise_sigma(speed: np.ndarray | float, params: NoiseParams) -> np.ndarray:
    """``sigma_min + (sigma_max - sigma_min) * sigmoid(lambda * (speed - v_mid))``."""
    if params.v_mid is None:
        raise ValueError("noise_sigma needs a resolved v_mid")
    speed = np.asarray(speed, dtype=np.float64)
    if np.any(speed < 0):
        raise ValueError("speed must be non-negative")
    # tanh form of the logistic avoids overflow far from v_mid
    sigmoid = 0.5 * (1.0 + np.tanh(0.5 * params.lam * (speed - params.v_mid)))
    return params.sigma_min + (params.sigma_max - params.sigma_min) * sigmoid


def noisy_velocity(
    v_gt: np.ndarray,
    C: np.ndarray,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Draws from ``N(v_gt, C)`` via the Cholesky factor of ``C``; ``C`` may be batched with ``v_gt``."""
    v_gt = np.asarray(v_gt, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if C.shape != (*v_gt.shape, v_gt.shape[-1]):
        raise ShapeError(f"covariance shape {C.shape} does not match velocity shape {v_gt.shape}")
    factor = np.linalg.cholesky(C)
    shape = v_gt.shape if size is None else (size, *v_gt.shape)
    z = rng.normal(size=shape)
    return v_gt + np.einsum("...ij,...j->...i", factor, z)


def gen_cov_sequence(T: int, dt: float, params: NoiseParams, seed: int, index: int = 0) -> CovSequence:
    """One trajectory of ``T`` steps; ``index`` selects an independent sequence for the same seed."""
    if T < 2:
        raise ValueError("T must be at least 2")
    if not dt > 0:
        raise ValueError("dt must be positive")
    rng = make_rng(seed, DATA_STREAM, index)
    so3 = make_algebra("so3")

    amplitude = rng.uniform(0.5, 2.0, size=(SINUSOIDS_PER_AXIS, 3))
    frequency = rng.uniform(0.2, 1.5, size=(SINUSOIDS_PER_AXIS, 3))
    phase = rng.uniform(0.0, 2.0 * math.pi, size=(SINUSOIDS_PER_AXIS, 3))
    t = np.arange(T) * dt
    velocities = np.sum(amplitude * np.sin(frequency * t[:, None, None] + phase), axis=1)

    positions = np.zeros((T, 3))
    positions[1:] = np.cumsum(0.5 * dt * (velocities[1:] + velocities[:-1]), axis=0)

    speeds = np.linalg.norm(velocities, axis=1)
    if params.v_mid is None:
        params = params.model_copy(update={"v_mid": float(speeds.mean())})
    sigma = noise_sigma(speeds, params)

    axis = rng.normal(size=3)
    drift = rng.normal(0.0, ROTATION_DRIFT, size=3)
    covariances = np.empty((T, 3, 3))
    for k in range(T):
        R = matrix_exp(hat(axis + t[k] * drift, so3))
        C = (R * (sigma[k] ** 2 * ANISOTROPY)) @ R.T
        covariances[k] = 0.5 * (C + C.T)

    noisy = noisy_velocity(velocities, covariances, rng)
    return CovSequence(velocities, covariances, positions, noisy)


def gen_covseq_dataset(N: int, steps: int, dt: float, params: NoiseParams, seed: int) -> Dataset:
    """``N`` samples taken step by step from consecutive independent sequences of ``steps`` steps."""
    if N < 1:
        raise ValueError("N must be at least 1")
    gl3 = make_algebra("gln", 3)
    inputs = np.empty((N, 2, gl3.K))
    targets = np.empty((N, 3))
    filled = 0
    index = 0
    while filled < N:
        sequence = gen_cov_sequence(steps, dt, params, seed, index)
        for k in range(min(steps, N - filled)):
            embedded = embed_velocity_covariance(sequence.noisy_velocities[k], sequence.covariances[k])
            inputs[filled] = embedded.T
            targets[filled] = sequence.velocities[k]
            filled += 1
        index += 1
    logger.info(f"Generated {N} covariance-sequence samples from {index} sequences (seed {seed})")
    return Dataset(
        algebra=gl3.label,
        n=3,
        K=gl3.K,
        inputs_per_sample=2,
        channels=2,
        target_dim=3,
        seed=seed,
        inputs=inputs,
        targets=targets,
    )
