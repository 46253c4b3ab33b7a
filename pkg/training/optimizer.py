"""Adam with bias-corrected moments."""

from dataclasses import dataclass, field

import numpy as np

from errors import ConditioningError, ShapeError


@dataclass
class AdamState:
    first_moments: list[np.ndarray] = field(default_factory=list)
    second_moments: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: list[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    """Update ``params`` in place and return the advanced state (step ``t + 1``)."""
    if len(params) != len(grads) or len(params) != len(state.first_moments):
        raise ShapeError("params, grads and optimizer state must have the same length")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise ConditioningError("non-finite gradient")

    t = state.t + 1
    first: list[np.ndarray] = []
    second: list[np.ndarray] = []
    for p, g, m, v in zip(params, grads, state.first_moments, state.second_moments):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)
        first.append(m)
        second.append(v)
    return AdamState(first, second, t)


class Adam:
    """Holds hyperparameters and state for a fixed parameter list."""

    def __init__(self, params: list[np.ndarray], lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState.zeros_like(params)

    def step(self, grads: list[np.ndarray]) -> None:
        self.state = adam_step(self.params, grads, self.state, self.lr, self.beta1, self.beta2, self.eps)
