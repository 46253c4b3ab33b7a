"""Adjoint augmentation of invariant-target datasets."""

import logging

import numpy as np

from errors import IncompatibleError
from lie.algebra import algebra_from_flag, sample_group_or_identity
from lie.rng import AUGMENT_STREAM, make_rng
from tasks.storage import Dataset

logger = logging.getLogger(__name__)


def augment_adjoint(
    ds: Dataset,
    M: int,
    seed: int,
    sigma: float = 0.5,
    extend: bool = False,
    epoch: int | None = None,
) -> Dataset:
    """Conjugate every sample by ``M`` independent group elements.

    Copies are ordered round by round (all samples under their first element,
    then the second, ...). With ``extend`` the originals come first.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    if ds.target_dim != 1:
        raise IncompatibleError("adjoint augmentation keeps targets fixed, so it needs an invariant scalar target")
    basis = algebra_from_flag(ds.algebra)
    rng = make_rng(seed, AUGMENT_STREAM, epoch)

    copies = np.empty((M, *ds.inputs.shape))
    for m in range(M):
        for i in range(ds.N):
            adj = sample_group_or_identity(basis, sigma, rng).adj_vec
            copies[m, i] = ds.inputs[i] @ adj.T
    inputs = copies.reshape(M * ds.N, ds.inputs_per_sample, ds.K)
    targets = np.tile(ds.targets, (M, 1))
    if extend:
        inputs = np.concatenate([ds.inputs, inputs])
        targets = np.concatenate([ds.targets, targets])
    logger.debug(f"Augmented {ds.N} samples with {M} conjugations each (sigma {sigma})")
    return ds.model_copy(update={"inputs": inputs, "targets": targets})
