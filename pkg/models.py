"""Pydantic models for configuration, reports and file descriptors."""

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

LayerKind = Literal["linear", "relu", "leaky_relu", "bracket", "pool", "invariant"]
FormKind = Literal["trace", "killing_oracle", "modified_gl", "modified_general", "custom"]

# Layers whose parameters are square channel maps
SQUARE_KINDS = ("relu", "leaky_relu", "bracket", "pool", "invariant")


class LayerSpec(BaseModel):
    """One layer of a ReLN stack."""

    model_config = ConfigDict(frozen=True)

    kind: LayerKind
    in_channels: int = Field(ge=1)
    out_channels: int = Field(ge=1)
    alpha: float = Field(default=0.0, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_shape(self) -> "LayerSpec":
        if self.kind in SQUARE_KINDS and self.in_channels != self.out_channels:
            raise ValueError(f"{self.kind} layer requires in_channels == out_channels")
        if self.kind != "leaky_relu" and self.alpha != 0.0:
            raise ValueError("alpha is only meaningful for leaky_relu")
        return self

    @classmethod
    def square(cls, kind: LayerKind, channels: int, alpha: float = 0.0) -> "LayerSpec":
        return cls(kind=kind, in_channels=channels, out_channels=channels, alpha=alpha)


class TrainingState(BaseModel):
    """Resumable training progress stored alongside a checkpoint."""

    epoch: int = Field(default=0, ge=0)
    adam_step: int = Field(default=0, ge=0)
    best_val: float | None = None


class ModelDescriptor(BaseModel):
    """Self-describing header of an RLNM model payload."""

    kind: Literal["reln", "mlp"] = "reln"
    algebra: str
    n: int = Field(ge=1)
    form: FormKind = "modified_gl"
    layers: list[LayerSpec] = Field(default_factory=list)
    head_widths: list[int] = Field(default_factory=list)
    state: TrainingState | None = None


class NoiseParams(BaseModel):
    """State-dependent velocity noise law.

    Defaults are the published sensor settings; ``v_mid`` of ``None`` means
    "use the mean ground-truth speed of the trajectory".
    """

    model_config = ConfigDict(populate_by_name=True)

    sigma_min: float = Field(default=0.2, gt=0)
    sigma_max: float = Field(default=1.0, gt=0)
    lam: float = Field(default=0.8, gt=0, alias="lambda")
    v_mid: float | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _check_range(self) -> "NoiseParams":
        if self.sigma_min > self.sigma_max:
            raise ValueError("sigma_min must not exceed sigma_max")
        return self


class TrainConfig(BaseModel):
    """Everything that determines a training run."""

    train_path: Path
    test_path: Path | None = None
    out_path: Path | None = None
    metrics_path: Path | None = None
    checkpoint_path: Path | None = None
    resume_path: Path | None = None

    layers: list[LayerSpec] = Field(default_factory=list)
    form: FormKind = "modified_gl"
    head_hidden: int = Field(default=32, ge=1)
    baseline: bool = False

    lr: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, gt=0, lt=1)
    beta2: float = Field(default=0.999, gt=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    batch_size: int = Field(default=100, ge=1)
    epochs: int = Field(default=10, ge=0)
    seed: int = Field(default=0, ge=0)

    eval_conj: int = Field(default=8, ge=1)
    group_sigma: float = Field(default=0.5, ge=0)
    augment: int = Field(default=0, ge=0)
    val_fraction: float = Field(default=0.1, ge=0, lt=1)

    threads: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=64, ge=1)


class EvalReport(BaseModel):
    """The three regression metrics plus bookkeeping."""

    mse_id: float = Field(ge=0)
    mse_conjugated: float = Field(ge=0)
    invariance_error: float = Field(ge=0)
    M: int = Field(ge=0)
    group_sigma: float = Field(ge=0)
    wall_time: float = Field(ge=0)


class EpochMetrics(BaseModel):
    """One line of the metrics log."""

    epoch: int
    train_loss: float
    val_loss: float
    mse_id: float
    mse_conjugated: float
    invariance_error: float
    seconds: float


class PropertyResult(BaseModel):
    """Outcome of one audited property."""

    name: str
    deviation: float
    tolerance: float
    passed: bool
    detail: str = ""
