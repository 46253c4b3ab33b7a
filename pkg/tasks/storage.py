"""Datasets and the RLND file format.

Layout: ``"RLND" | version u32 | algebra (u32 length + UTF-8) | n u32 | K u32 |
inputs_per_sample u32 | channels u32 | target_dim u32 | N u64 | seed u64 |
target mean f64 | target std f64 | inputs f64 [N, inputs_per_sample, K] |
targets f64 [N, target_dim] | CRC-32``.
"""

import logging
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from utils.binary import ByteReader, ByteWriter

logger = logging.getLogger(__name__)

DATASET_MAGIC = b"RLND"
DATASET_VERSION = 1


class Dataset(BaseModel):
    """Samples of algebra coordinates with (possibly standardized) targets."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    algebra: str
    n: int = Field(ge=1)
    K: int = Field(ge=1)
    inputs_per_sample: int = Field(ge=1)
    channels: int = Field(ge=1)
    target_dim: int = Field(ge=1)
    seed: int = Field(ge=0)
    target_mean: float = 0.0
    target_std: float = Field(default=1.0, gt=0)
    inputs: np.ndarray  # [N, inputs_per_sample, K]
    targets: np.ndarray  # [N, target_dim]

    @model_validator(mode="after")
    def _check_shapes(self) -> "Dataset":
        N = self.inputs.shape[0] if self.inputs.ndim else 0
        if self.inputs.shape != (N, self.inputs_per_sample, self.K):
            raise ValueError(f"inputs must have shape [N, {self.inputs_per_sample}, {self.K}], got {self.inputs.shape}")
        if self.targets.shape != (N, self.target_dim):
            raise ValueError(f"targets must have shape [{N}, {self.target_dim}], got {self.targets.shape}")
        if self.channels != self.inputs_per_sample:
            raise ValueError("each input element is fed as one channel, so channels must equal inputs_per_sample")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise ValueError("dataset entries must be finite")
        if not (np.isfinite(self.target_mean) and np.isfinite(self.target_std)):
            raise ValueError("target affine parameters must be finite")
        return self

    @property
    def N(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def features(self) -> np.ndarray:
        """Model input layout ``[N, K, channels]``."""
        return np.ascontiguousarray(np.swapaxes(self.inputs, 1, 2))

    def subset(self, index: np.ndarray) -> "Dataset":
        return self.model_copy(update={"inputs": self.inputs[index], "targets": self.targets[index]})


def destandardize(ds: Dataset) -> np.ndarray:
    """Targets in their original units: ``targets * std + mean``."""
    return ds.targets * ds.target_std + ds.target_mean


def encode_dataset(ds: Dataset) -> bytes:
    writer = ByteWriter(DATASET_MAGIC, DATASET_VERSION)
    writer.text(ds.algebra)
    for value in (ds.n, ds.K, ds.inputs_per_sample, ds.channels, ds.target_dim):
        writer.u32(value)
    writer.u64(ds.N)
    writer.u64(ds.seed)
    writer.f64(ds.target_mean)
    writer.f64(ds.target_std)
    writer.array(ds.inputs)
    writer.array(ds.targets)
    return writer.finish()


def decode_dataset(payload: bytes) -> Dataset:
    reader = ByteReader(payload, DATASET_MAGIC, DATASET_VERSION)
    algebra = reader.text()
    n, K, inputs_per_sample, channels, target_dim = (reader.u32() for _ in range(5))
    N = reader.u64()
    seed = reader.u64()
    mean = reader.f64()
    std = reader.f64()
    inputs = reader.array((N, inputs_per_sample, K))
    targets = reader.array((N, target_dim))
    reader.finish()
    return Dataset(
        algebra=algebra,
        n=n,
        K=K,
        inputs_per_sample=inputs_per_sample,
        channels=channels,
        target_dim=target_dim,
        seed=seed,
        target_mean=mean,
        target_std=std,
        inputs=inputs,
        targets=targets,
    )


def write_dataset(ds: Dataset, path: Path) -> int:
    """Write ``ds``; returns the file's CRC-32 (its last four bytes)."""
    payload = encode_dataset(ds)
    Path(path).write_bytes(payload)
    checksum = int.from_bytes(payload[-4:], "little")
    logger.info(f"Wrote {ds.N} samples ({ds.algebra}) to {path}, crc32 {checksum:08x}")
    return checksum


def read_dataset(path: Path) -> Dataset:
    return decode_dataset(Path(path).read_bytes())
