"""Regression loss."""

import numpy as np

from errors import ShapeError


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all entries and its gradient ``2 (pred - target) / count``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction shape {pred.shape} does not match target shape {target.shape}")
    if pred.size == 0:
        raise ShapeError("mse_loss needs at least one prediction")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size
