"""Fully-connected baseline on flattened algebra coordinates.

It sees the same ``[B, K, C]`` tensors as a ReLN model but ignores their
group structure, so it is neither equivariant nor invariant.
"""

from collections.abc import Sequence

import numpy as np

from errors import ShapeError, SpecError
from lie.algebra import LieAlgebraBasis
from lie.rng import INIT_STREAM, make_rng
from models import ModelDescriptor, TrainingState
from network.layers import dense_backward, dense_forward
from network.model import ForwardCache


def mlp_parameter_shapes(widths: Sequence[int]) -> list[tuple[str, tuple[int, ...]]]:
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for j, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
        shapes.append((f"dense{j}.W", (fan_in, fan_out)))
        shapes.append((f"dense{j}.b", (fan_out,)))
    return shapes


class MlpModel:
    """ReLU hidden layers, linear output."""

    kind = "mlp"

    def __init__(self, basis: LieAlgebraBasis, widths: Sequence[int], params: Sequence[np.ndarray]):
        widths = list(widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise SpecError(f"invalid MLP widths {widths}")
        if widths[0] % basis.K:
            raise SpecError(f"MLP input width {widths[0]} is not a multiple of K={basis.K}")
        shapes = mlp_parameter_shapes(widths)
        if len(params) != len(shapes):
            raise ShapeError(f"expected {len(shapes)} parameter tensors, got {len(params)}")
        for (name, shape), p in zip(shapes, params):
            if np.shape(p) != shape:
                raise ShapeError(f"parameter {name} must have shape {shape}, got {np.shape(p)}")
        self.basis = basis
        self.widths = widths
        self.param_names = [name for name, _ in shapes]
        self.params = [np.array(p, dtype=np.float64) for p in params]
        self.grads = [np.zeros_like(p) for p in self.params]

    @property
    def in_channels(self) -> int:
        return self.widths[0] // self.basis.K

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.params))

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1:] != (self.basis.K, self.in_channels):
            raise ShapeError(f"MLP expects [B, {self.basis.K}, {self.in_channels}] input, got shape {x.shape}")
        h = x.reshape(x.shape[0], -1)
        inputs: list[np.ndarray] = []
        n_dense = len(self.widths) - 1
        for j in range(n_dense):
            inputs.append(h)
            h = dense_forward(h, self.params[2 * j], self.params[2 * j + 1])
            if j < n_dense - 1:
                h = np.maximum(h, 0.0)
        return h, ForwardCache(head_inputs=inputs, output_shape=h.shape)

    def gradients(self, cache: ForwardCache, grad_out: np.ndarray) -> list[np.ndarray]:
        grad_out = np.asarray(grad_out, dtype=np.float64)
        if grad_out.shape != cache.output_shape:
            raise ShapeError(f"stale cache: upstream gradient {grad_out.shape} vs forward output {cache.output_shape}")
        grads: list[np.ndarray] = [np.zeros_like(p) for p in self.params]
        g = grad_out
        n_dense = len(self.widths) - 1
        for j in reversed(range(n_dense)):
            if j < n_dense - 1:
                g = np.where(cache.head_inputs[j + 1] > 0.0, g, 0.0)
            g, grads[2 * j], grads[2 * j + 1] = dense_backward(cache.head_inputs[j], self.params[2 * j], g)
        return grads

    def backward(self, cache: ForwardCache, grad_out: np.ndarray) -> list[np.ndarray]:
        self.grads = self.gradients(cache, grad_out)
        return self.grads

    def descriptor(self, state: TrainingState | None = None) -> ModelDescriptor:
        return ModelDescriptor(
            kind="mlp",
            algebra=self.basis.label,
            n=self.basis.n,
            form="custom",
            head_widths=self.widths,
            state=state,
        )


def mlp_param_count(in_dim: int, hidden: int, out_dim: int) -> int:
    return in_dim * hidden + hidden + hidden * hidden + hidden + hidden * out_dim + out_dim


def matched_mlp(target_params: int, in_dim: int, out_dim: int) -> list[int]:
    """Widths ``[in, h, h, out]`` whose parameter count is closest to ``target_params``."""
    if target_params < 1:
        raise SpecError("target parameter count must be positive")
    best = min(range(1, 4097), key=lambda h: (abs(mlp_param_count(in_dim, h, out_dim) - target_params), h))
    return [in_dim, best, best, out_dim]


def init_mlp(widths: Sequence[int], seed: int, basis: LieAlgebraBasis) -> MlpModel:
    """He-scaled Gaussian weights (``sqrt(2 / fan_in)``), zero biases."""
    rng = make_rng(seed, INIT_STREAM)
    params = []
    for name, shape in mlp_parameter_shapes(widths):
        if name.endswith(".b"):
            params.append(np.zeros(shape))
        else:
            params.append(rng.normal(0.0, np.sqrt(2.0 / shape[0]), size=shape))
    return MlpModel(basis, widths, params)
