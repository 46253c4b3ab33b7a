"""Training loop: deterministic mini-batch Adam with validation, evaluation and checkpoints."""

import logging
import time
from pathlib import Path
from typing import NamedTuple

import numpy as np

from config import settings
from errors import IncompatibleError
from lie.algebra import algebra_from_flag
from lie.rng import SHUFFLE_STREAM, make_rng
from models import EpochMetrics, EvalReport, TrainConfig, TrainingState
from network.baseline import init_mlp, matched_mlp
from network.model import DEFAULT_LAYERS, Network, init_params, parse_layers
from network.serialization import load_checkpoint, save_model, serialize_model
from tasks.augment import augment_adjoint
from tasks.storage import Dataset, read_dataset
from training.losses import mse_loss
from training.metrics import check_compatible, evaluate, predict
from training.optimizer import AdamState, adam_step
from training.parallel import map_chunks
from utils.formatting import format_metrics_line

logger = logging.getLogger(__name__)


class TrainResult(NamedTuple):
    model: Network
    history: list[EpochMetrics]
    report: EvalReport


def batch_gradients(
    model: Network,
    x: np.ndarray,
    y: np.ndarray,
    chunk_size: int,
    threads: int = 1,
) -> tuple[float, list[np.ndarray]]:
    """MSE over the batch and its parameter gradients, reduced in chunk order."""
    count = y.size

    def run(s: slice) -> tuple[float, list[np.ndarray]]:
        out, cache = model.forward(x[s])
        diff = out - y[s]
        return float(np.sum(diff * diff)), model.gradients(cache, 2.0 * diff / count)

    results = map_chunks(run, len(x), chunk_size, threads)
    squared = 0.0
    total = [np.zeros_like(p) for p in model.params]
    for chunk_squared, grads in results:
        squared += chunk_squared
        for acc, g in zip(total, grads):
            acc += g
    return squared / count, total


def split_validation(ds: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Hold out ``round(fraction * N)`` samples (at least one when ``fraction > 0`` and N > 1)."""
    n_val = int(round(fraction * ds.N))
    if fraction > 0 and n_val == 0 and ds.N > 1:
        n_val = 1
    order = make_rng(seed, SHUFFLE_STREAM).permutation(ds.N)
    return ds.subset(np.sort(order[n_val:])), ds.subset(np.sort(order[:n_val]))


def _build_model(cfg: TrainConfig, ds: Dataset) -> Network:
    basis = algebra_from_flag(ds.algebra)
    specs = cfg.layers or parse_layers(DEFAULT_LAYERS, ds.channels, settings.channels)
    if specs[0].in_channels != ds.channels:
        raise IncompatibleError(f"first layer expects {specs[0].in_channels} channels, dataset has {ds.channels}")
    reln = init_params(specs, cfg.seed, basis, cfg.head_hidden, ds.target_dim, cfg.form)
    if not cfg.baseline:
        return reln
    widths = matched_mlp(reln.n_params, basis.K * ds.channels, ds.target_dim)
    logger.info(f"Baseline MLP widths {widths} matched to {reln.n_params} ReLN parameters")
    return init_mlp(widths, cfg.seed, basis)


def _mse(model: Network, ds: Dataset, cfg: TrainConfig) -> float:
    if ds.N == 0:
        return float("nan")
    return mse_loss(predict(model, ds.features, cfg.chunk_size, cfg.threads), ds.targets)[0]


def train_loop(cfg: TrainConfig) -> TrainResult:
    """Train per ``cfg``; identical configs give bit-identical parameters and metrics."""
    full = read_dataset(cfg.train_path)
    if full.target_dim != 1:
        raise IncompatibleError(f"training needs a scalar target, dataset has target_dim {full.target_dim}")
    test = read_dataset(cfg.test_path) if cfg.test_path else None
    if test is not None and test.algebra != full.algebra:
        raise IncompatibleError(f"train data is {full.algebra} but test data is {test.algebra}")
    train, val = split_validation(full, cfg.val_fraction, cfg.seed)

    start_epoch = 0
    best_val: float | None = None
    if cfg.resume_path:
        checkpoint = load_checkpoint(Path(cfg.resume_path).read_bytes())
        model = checkpoint.model
        state = checkpoint.state or TrainingState()
        optimizer = AdamState(
            checkpoint.first_moments or [np.zeros_like(p) for p in model.params],
            checkpoint.second_moments or [np.zeros_like(p) for p in model.params],
            state.adam_step,
        )
        start_epoch = state.epoch
        best_val = state.best_val
        logger.info(f"Resuming from {cfg.resume_path} at epoch {start_epoch} (Adam step {state.adam_step})")
    else:
        model = _build_model(cfg, full)
        optimizer = AdamState.zeros_like(model.params)
    check_compatible(model, full)

    monitor = test if test is not None else (val if val.N else train)
    metrics_file = None
    if cfg.metrics_path:
        metrics_file = open(cfg.metrics_path, "a" if cfg.resume_path else "w", encoding="utf-8")  # noqa: SIM115

    history: list[EpochMetrics] = []
    report = evaluate(model, monitor, cfg.eval_conj, cfg.group_sigma, cfg.seed, cfg.chunk_size, cfg.threads)
    best_bytes: bytes | None = None
    try:
        for epoch in range(start_epoch, cfg.epochs):
            started = time.perf_counter()
            data = train
            if cfg.augment:
                data = augment_adjoint(train, cfg.augment, cfg.seed, cfg.group_sigma, extend=True, epoch=epoch)
            features = data.features
            order = make_rng(cfg.seed, SHUFFLE_STREAM, epoch).permutation(data.N)

            weighted = 0.0
            for begin in range(0, data.N, cfg.batch_size):
                index = order[begin : begin + cfg.batch_size]
                loss, grads = batch_gradients(model, features[index], data.targets[index], cfg.chunk_size, cfg.threads)
                optimizer = adam_step(model.params, grads, optimizer, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
                weighted += loss * len(index)
            train_loss = weighted / max(data.N, 1)

            val_loss = _mse(model, val, cfg)
            report = evaluate(model, monitor, cfg.eval_conj, cfg.group_sigma, cfg.seed, cfg.chunk_size, cfg.threads)
            metrics = EpochMetrics(
                epoch=epoch + 1,
                train_loss=train_loss,
                val_loss=val_loss,
                mse_id=report.mse_id,
                mse_conjugated=report.mse_conjugated,
                invariance_error=report.invariance_error,
                seconds=time.perf_counter() - started,
            )
            history.append(metrics)
            if metrics_file is not None:
                metrics_file.write(format_metrics_line(metrics) + "\n")
                metrics_file.flush()
            logger.info(
                f"Epoch {metrics.epoch}/{cfg.epochs}: train {train_loss:.4e}, val {val_loss:.4e}, "
                f"conj {report.mse_conjugated:.4e}, inv {report.invariance_error:.2e}"
            )

            selection = val_loss if np.isfinite(val_loss) else train_loss
            if best_val is None or selection < best_val:
                best_val = selection
                if cfg.out_path:
                    best_bytes = serialize_model(model)
            if cfg.checkpoint_path:
                state = TrainingState(epoch=epoch + 1, adam_step=optimizer.t, best_val=best_val)
                save_model(cfg.checkpoint_path, model, state, optimizer.first_moments, optimizer.second_moments)
    finally:
        if metrics_file is not None:
            metrics_file.close()

    if cfg.out_path:
        # A run that never beats its starting best (e.g. a resumed one) writes its final model
        Path(cfg.out_path).write_bytes(best_bytes if best_bytes is not None else serialize_model(model))
        logger.info(f"Saved {model.kind} model to {cfg.out_path}")
    return TrainResult(model=model, history=history, report=report)
