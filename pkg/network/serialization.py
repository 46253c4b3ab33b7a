"""RLNM model payloads.

Layout: ``"RLNM" | version u32 | descriptor (u32 length + UTF-8 JSON) |
parameters f64 | [Adam first moments f64 | Adam second moments f64] | CRC-32``.
The moment tensors are present exactly when the descriptor carries a
training state.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from errors import FileFormatError, IncompatibleError
from lie.algebra import algebra_from_flag
from models import ModelDescriptor, TrainingState
from network.baseline import MlpModel, mlp_parameter_shapes
from network.model import Model, Network, parameter_shapes
from utils.binary import ByteReader, ByteWriter

logger = logging.getLogger(__name__)

MODEL_MAGIC = b"RLNM"
MODEL_VERSION = 1


@dataclass
class Checkpoint:
    """A model plus what is needed to continue training it."""

    model: Network
    state: TrainingState | None
    first_moments: list[np.ndarray] | None = None
    second_moments: list[np.ndarray] | None = None


def serialize_model(
    m: Network,
    state: TrainingState | None = None,
    first_moments: list[np.ndarray] | None = None,
    second_moments: list[np.ndarray] | None = None,
) -> bytes:
    if state is not None and (first_moments is None or second_moments is None):
        raise ValueError("a training state must be saved together with both Adam moment lists")
    writer = ByteWriter(MODEL_MAGIC, MODEL_VERSION)
    writer.text(m.descriptor(state).model_dump_json())
    for p in m.params:
        writer.array(p)
    if state is not None:
        for moments in (first_moments, second_moments):
            assert moments is not None
            if len(moments) != len(m.params):
                raise ValueError("Adam moments must match the parameter list")
            for moment in moments:
                writer.array(moment)
    return writer.finish()


def _shapes_for(descriptor: ModelDescriptor) -> list[tuple[int, ...]]:
    if descriptor.kind == "mlp":
        return [shape for _, shape in mlp_parameter_shapes(descriptor.head_widths)]
    return [shape for _, shape in parameter_shapes(descriptor.layers, descriptor.head_widths)]


def model_from_descriptor(descriptor: ModelDescriptor, params: list[np.ndarray]) -> Network:
    basis = algebra_from_flag(descriptor.algebra)
    if basis.n != descriptor.n:
        raise IncompatibleError(f"descriptor says n={descriptor.n} but {descriptor.algebra} has n={basis.n}")
    if descriptor.kind == "mlp":
        return MlpModel(basis, descriptor.head_widths, params)
    return Model(basis, descriptor.layers, descriptor.head_widths, params, descriptor.form)


def load_checkpoint(payload: bytes) -> Checkpoint:
    reader = ByteReader(payload, MODEL_MAGIC, MODEL_VERSION)
    try:
        descriptor = ModelDescriptor.model_validate_json(reader.text())
    except ValidationError as e:
        raise FileFormatError(f"invalid model descriptor: {e}") from e

    shapes = _shapes_for(descriptor)
    params = [reader.array(shape) for shape in shapes]
    first = second = None
    if descriptor.state is not None:
        first = [reader.array(shape) for shape in shapes]
        second = [reader.array(shape) for shape in shapes]
    reader.finish()

    return Checkpoint(
        model=model_from_descriptor(descriptor, params),
        state=descriptor.state,
        first_moments=first,
        second_moments=second,
    )


def deserialize_model(payload: bytes) -> Network:
    return load_checkpoint(payload).model


def save_model(
    path: Path,
    m: Network,
    state: TrainingState | None = None,
    first_moments: list[np.ndarray] | None = None,
    second_moments: list[np.ndarray] | None = None,
) -> None:
    Path(path).write_bytes(serialize_model(m, state, first_moments, second_moments))
    logger.info(f"Saved {m.kind} model to {path}")


def load_model(path: Path) -> Network:
    return deserialize_model(Path(path).read_bytes())
