"""Central finite-difference check of hand-written gradients."""

import logging

import numpy as np
from pydantic import BaseModel

from errors import ConditioningError
from network import layers as L
from network.model import Model, Network
from training.losses import mse_loss

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
# Tensors whose gradients sit below this fraction of the largest gradient are
# compared against that floor, since central differences cannot resolve them
RELATIVE_FLOOR = 1e-6
ABSOLUTE_FLOOR = 1e-8
GATE_MARGIN = 1e-4
MAX_RESAMPLES = 50
# Steps above this let O(h^2) truncation swamp the comparison
TRUNCATION_WARNING_STEP = 1e-3


class GradCheckReport(BaseModel):
    max_rel_err: float
    per_param: dict[str, float]
    resamples: int = 0

    def per_layer(self) -> dict[str, float]:
        """Worst error per layer (``layer3``, ``head0``, ...)."""
        worst: dict[str, float] = {}
        for name, err in self.per_param.items():
            owner = name.split(".")[0]
            worst[owner] = max(worst.get(owner, 0.0), err)
        return worst


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = ABSOLUTE_FLOOR) -> float:
    """``max|a - f| / max(max|a|, max|f|, floor)`` over one parameter tensor."""
    scale = max(float(np.max(np.abs(analytic), initial=0.0)), float(np.max(np.abs(numeric), initial=0.0)), floor)
    return float(np.max(np.abs(analytic - numeric), initial=0.0)) / scale


def gate_margin(model: Network, x: np.ndarray) -> float:
    """Smallest distance of any ReLU gate, or any pooling runner-up score, from its switching point."""
    if not isinstance(model, Model):
        return float("inf")
    _, inputs = model.forward_features(x)
    margin = float("inf")
    for spec, slots, layer_input in zip(model.specs, model._slots, inputs):
        if spec.kind in ("relu", "leaky_relu"):
            _, s = L.relu_gates(layer_input, model.params[slots[0]], model.form)
            margin = min(margin, float(np.min(np.abs(s))))
        elif spec.kind == "pool" and layer_input.shape[-3] > 1:
            scores = np.sort(L.pool_scores(layer_input, model.params[slots[0]], model.form), axis=-2)
            margin = min(margin, float(np.min(scores[..., -1, :] - scores[..., -2, :])))
    return margin


def _loss(model: Network, x: np.ndarray, target: np.ndarray) -> float:
    out, _ = model.forward(x)
    loss, _ = mse_loss(out, target)
    if not np.isfinite(loss):
        raise ConditioningError("gradient check hit a non-finite loss")
    return loss


def grad_check(
    model: Network,
    x: np.ndarray,
    target: np.ndarray,
    h: float = DEFAULT_STEP,
    rng: np.random.Generator | None = None,
    margin: float = GATE_MARGIN,
) -> GradCheckReport:
    """Compare ``model.gradients`` against central differences of the MSE loss.

    When a gate sits within ``margin`` of zero, ``x`` is redrawn (same shape and
    scale) from ``rng``; without ``rng`` the check proceeds as is.
    """
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    if h > TRUNCATION_WARNING_STEP:
        logger.warning(f"Step h={h:g} is large; truncation error will dominate the comparison")

    x = np.asarray(x, dtype=np.float64)
    resamples = 0
    scale = float(np.std(x)) or 1.0
    while rng is not None and gate_margin(model, x) < margin:
        if resamples == MAX_RESAMPLES:
            raise ConditioningError(f"could not keep gates {margin:g} away from zero after {MAX_RESAMPLES} draws")
        x = rng.normal(0.0, scale, size=x.shape)
        resamples += 1

    out, cache = model.forward(x)
    _, grad_out = mse_loss(out, target)
    analytic = model.gradients(cache, grad_out)
    largest = max((float(np.max(np.abs(a), initial=0.0)) for a in analytic), default=0.0)
    floor = max(ABSOLUTE_FLOOR, RELATIVE_FLOOR * largest)

    per_param: dict[str, float] = {}
    for name, p, a in zip(model.param_names, model.params, analytic):
        numeric = np.zeros_like(p)
        for index in np.ndindex(p.shape):
            original = p[index]
            p[index] = original + h
            plus = _loss(model, x, target)
            p[index] = original - h
            minus = _loss(model, x, target)
            p[index] = original
            numeric[index] = (plus - minus) / (2.0 * h)
        per_param[name] = relative_error(a, numeric, floor)

    report = GradCheckReport(max_rel_err=max(per_param.values(), default=0.0), per_param=per_param, resamples=resamples)
    logger.debug(f"Gradient check: max relative error {report.max_rel_err:.3e} over {len(per_param)} tensors")
    return report
