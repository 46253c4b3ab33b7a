"""Composition of ReLN layers, the invariant readout and a scalar head."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from errors import ShapeError, SpecError
from lie.algebra import LieAlgebraBasis
from lie.forms import BilinearForm, form_for_model
from lie.rng import INIT_STREAM, make_rng
from models import FormKind, LayerSpec, ModelDescriptor, TrainingState
from network import layers as L

logger = logging.getLogger(__name__)

DEFAULT_LAYERS = "linear,relu,bracket,linear,leaky_relu"

# Parameter name suffix -> layer kinds that own it, in declaration order
LAYER_PARAMS: dict[str, tuple[str, ...]] = {
    "linear": ("W",),
    "relu": ("U",),
    "leaky_relu": ("U",),
    "bracket": ("Wa", "Wb"),
    "pool": ("Wd",),
    "invariant": (),
}


@dataclass
class ForwardCache:
    """Activations a backward pass needs: every layer input and every head activation."""

    layer_inputs: list[np.ndarray] = field(default_factory=list)
    head_inputs: list[np.ndarray] = field(default_factory=list)
    output_shape: tuple[int, ...] = ()


class Network(Protocol):
    """What the trainer, evaluator and codec need from a model."""

    kind: str
    basis: LieAlgebraBasis
    params: list[np.ndarray]
    grads: list[np.ndarray]
    param_names: list[str]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]: ...

    def gradients(self, cache: ForwardCache, grad_out: np.ndarray) -> list[np.ndarray]: ...

    def backward(self, cache: ForwardCache, grad_out: np.ndarray) -> list[np.ndarray]: ...

    def descriptor(self, state: TrainingState | None = None) -> ModelDescriptor: ...

    @property
    def in_channels(self) -> int: ...

    @property
    def n_params(self) -> int: ...


def validate_chain(specs: Sequence[LayerSpec], head_widths: Sequence[int]) -> None:
    """Raise ``SpecError`` unless the layers form a valid stack ending in the invariant readout."""
    if not specs:
        raise SpecError("a model needs at least the invariant readout layer")
    kinds = [spec.kind for spec in specs]
    if kinds[-1] != "invariant" or kinds.count("invariant") != 1:
        raise SpecError("the invariant readout must appear exactly once, as the last layer")
    if kinds.count("pool") > 1:
        raise SpecError("at most one pooling layer is supported")
    for i, (prev, nxt) in enumerate(zip(specs, specs[1:])):
        if prev.out_channels != nxt.in_channels:
            raise SpecError(
                f"layer {i} ({prev.kind}) outputs {prev.out_channels} channels "
                f"but layer {i + 1} ({nxt.kind}) expects {nxt.in_channels}"
            )
    if len(head_widths) < 2:
        raise SpecError("head needs at least an input and an output width")
    if head_widths[0] != specs[-1].out_channels:
        raise SpecError(f"head input width {head_widths[0]} does not match {specs[-1].out_channels} invariant channels")
    if any(w < 1 for w in head_widths):
        raise SpecError("head widths must be positive")


def parameter_shapes(specs: Sequence[LayerSpec], head_widths: Sequence[int]) -> list[tuple[str, tuple[int, ...]]]:
    """Names and shapes of every parameter tensor in declaration order."""
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for i, spec in enumerate(specs):
        for suffix in LAYER_PARAMS[spec.kind]:
            shapes.append((f"layer{i}.{suffix}", (spec.in_channels, spec.out_channels)))
    for j, (fan_in, fan_out) in enumerate(zip(head_widths, head_widths[1:])):
        shapes.append((f"head{j}.W", (fan_in, fan_out)))
        shapes.append((f"head{j}.b", (fan_out,)))
    return shapes


class Model:
    """A ReLN stack: equivariant layers, ``y_c = B(x_c, x_c)``, then a tanh head."""

    kind = "reln"

    def __init__(
        self,
        basis: LieAlgebraBasis,
        specs: Sequence[LayerSpec],
        head_widths: Sequence[int],
        params: Sequence[np.ndarray],
        form: FormKind | BilinearForm = "modified_gl",
    ):
        validate_chain(specs, head_widths)
        self.basis = basis
        self.specs = list(specs)
        self.head_widths = list(head_widths)
        self.form = form if isinstance(form, BilinearForm) else form_for_model(basis, form)

        shapes = parameter_shapes(self.specs, self.head_widths)
        if len(params) != len(shapes):
            raise ShapeError(f"expected {len(shapes)} parameter tensors, got {len(params)}")
        for (name, shape), p in zip(shapes, params):
            if np.shape(p) != shape:
                raise ShapeError(f"parameter {name} must have shape {shape}, got {np.shape(p)}")
        self.param_names = [name for name, _ in shapes]
        self.params = [np.array(p, dtype=np.float64) for p in params]
        self.grads = [np.zeros_like(p) for p in self.params]

        # Per-layer indices into self.params
        self._slots: list[list[int]] = []
        cursor = 0
        for spec in self.specs:
            count = len(LAYER_PARAMS[spec.kind])
            self._slots.append(list(range(cursor, cursor + count)))
            cursor += count
        self._head_start = cursor

    @property
    def in_channels(self) -> int:
        return self.specs[0].in_channels

    @property
    def has_pool(self) -> bool:
        return any(spec.kind == "pool" for spec in self.specs)

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.params))

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        expected_ndim = 4 if self.has_pool else 3
        if x.ndim != expected_ndim or x.shape[-2] != self.basis.K or x.shape[-1] != self.in_channels:
            layout = "[B, N, K, C]" if self.has_pool else "[B, K, C]"
            raise ShapeError(
                f"model expects {layout} input with K={self.basis.K}, C={self.in_channels}; got shape {x.shape}"
            )
        return x

    def forward_features(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Run the equivariant stack; returns the invariant readout ``[B, C]`` and each layer's input."""
        inputs: list[np.ndarray] = []
        for spec, slots in zip(self.specs, self._slots):
            inputs.append(x)
            p = [self.params[i] for i in slots]
            if spec.kind == "linear":
                x = L.linear_forward(x, p[0])
            elif spec.kind in ("relu", "leaky_relu"):
                x = L.relu_forward(x, p[0], self.form, spec.alpha)
            elif spec.kind == "bracket":
                x = L.bracket_forward(x, p[0], p[1], self.basis)
            elif spec.kind == "pool":
                x = L.pool_forward(x, p[0], self.form)
            else:
                x = L.invariant_forward(x, self.form)
        return x, inputs

    def forward(self, x: np.ndarray | L.AlgFeature) -> tuple[np.ndarray, ForwardCache]:
        data = x.data if isinstance(x, L.AlgFeature) else x
        y, inputs = self.forward_features(self._check_input(data))

        head_inputs: list[np.ndarray] = []
        h = y
        n_dense = len(self.head_widths) - 1
        for j in range(n_dense):
            head_inputs.append(h)
            W = self.params[self._head_start + 2 * j]
            b = self.params[self._head_start + 2 * j + 1]
            h = L.dense_forward(h, W, b)
            if j < n_dense - 1:
                h = np.tanh(h)
        return h, ForwardCache(layer_inputs=inputs, head_inputs=head_inputs, output_shape=h.shape)

    def gradients(self, cache: ForwardCache, grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of every parameter given ``dLoss/dOutput``; touches no model state."""
        grad_out = np.asarray(grad_out, dtype=np.float64)
        if grad_out.shape != cache.output_shape or len(cache.layer_inputs) != len(self.specs):
            raise ShapeError(f"stale cache: upstream gradient {grad_out.shape} vs forward output {cache.output_shape}")
        grads: list[np.ndarray] = [np.zeros_like(p) for p in self.params]

        g = grad_out
        n_dense = len(self.head_widths) - 1
        for j in reversed(range(n_dense)):
            index = self._head_start + 2 * j
            if j < n_dense - 1:
                # the stored input of dense j + 1 is tanh of dense j's output
                activated = cache.head_inputs[j + 1]
                g = g * (1.0 - activated * activated)
            g, grads[index], grads[index + 1] = L.dense_backward(cache.head_inputs[j], self.params[index], g)

        for spec, slots, x in reversed(list(zip(self.specs, self._slots, cache.layer_inputs))):
            p = [self.params[i] for i in slots]
            if spec.kind == "linear":
                g, grads[slots[0]] = L.linear_backward(x, p[0], g)
            elif spec.kind in ("relu", "leaky_relu"):
                g, grads[slots[0]] = L.relu_backward(x, p[0], self.form, spec.alpha, g)
            elif spec.kind == "bracket":
                g, grads[slots[0]], grads[slots[1]] = L.bracket_backward(x, p[0], p[1], self.basis, g)
            elif spec.kind == "pool":
                g, grads[slots[0]] = L.pool_backward(x, p[0], self.form, g)
            else:
                g = L.invariant_backward(x, self.form, g)

        return grads

    def backward(self, cache: ForwardCache, grad_out: np.ndarray) -> list[np.ndarray]:
        """Like ``gradients`` but also fills ``self.grads``."""
        self.grads = self.gradients(cache, grad_out)
        return self.grads

    def descriptor(self, state: TrainingState | None = None) -> ModelDescriptor:
        return ModelDescriptor(
            kind="reln",
            algebra=self.basis.label,
            n=self.basis.n,
            form=self.form.kind,
            layers=self.specs,
            head_widths=self.head_widths,
            state=state,
        )


def init_params(
    specs: Sequence[LayerSpec],
    seed: int,
    basis: LieAlgebraBasis,
    head_hidden: int = 32,
    out_dim: int = 1,
    form: FormKind = "modified_gl",
) -> Model:
    """Random model: Gaussian weights with std ``1/sqrt(fan_in)``, zero biases."""
    specs = list(specs)
    if not specs:
        raise SpecError("a model needs at least the invariant readout layer")
    head_widths = [specs[-1].out_channels, head_hidden, out_dim]
    validate_chain(specs, head_widths)

    rng = make_rng(seed, INIT_STREAM)
    params = []
    for name, shape in parameter_shapes(specs, head_widths):
        if name.endswith(".b"):
            params.append(np.zeros(shape))
        else:
            params.append(rng.normal(0.0, 1.0 / np.sqrt(shape[0]), size=shape))
    model = Model(basis, specs, head_widths, params, form)
    logger.debug(f"Initialized {basis.label} model with {model.n_params} parameters (seed {seed})")
    return model


def model_forward(m: Network, x: np.ndarray | L.AlgFeature) -> tuple[np.ndarray, ForwardCache]:
    return m.forward(x)


def model_backward(m: Network, cache: ForwardCache, grad_out: np.ndarray) -> list[np.ndarray]:
    return m.backward(cache, grad_out)


def parse_layers(text: str, in_channels: int, channels: int) -> list[LayerSpec]:
    """Build a layer chain from a comma list such as ``linear,relu,bracket,leaky_relu:0.2,linear``.

    ``linear`` maps the running width to ``channels`` (``linear:8`` picks the
    width); ``leaky_relu:A`` sets the leak. The invariant readout is appended
    when missing.
    """
    specs: list[LayerSpec] = []
    width = in_channels
    for token in filter(None, (t.strip() for t in text.split(","))):
        kind, _, arg = token.partition(":")
        kind = kind.replace("-", "_")
        if kind == "linear":
            out = int(arg) if arg else channels
            specs.append(LayerSpec(kind="linear", in_channels=width, out_channels=out))
            width = out
        elif kind == "leaky_relu":
            specs.append(LayerSpec.square("leaky_relu", width, float(arg) if arg else 0.2))
        elif kind in ("relu", "bracket", "pool", "invariant"):
            if arg:
                raise SpecError(f"layer '{kind}' takes no argument")
            specs.append(LayerSpec.square(kind, width))
        else:
            raise SpecError(f"unknown layer kind '{kind}'")
    if not specs or specs[-1].kind != "invariant":
        specs.append(LayerSpec.square("invariant", width))
    return specs
