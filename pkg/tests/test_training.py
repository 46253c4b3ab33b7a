"""Tests for losses, Adam, metrics and the training loop."""

import numpy as np
import pytest

from errors import ConditioningError, IncompatibleError, ShapeError
from lie.algebra import make_algebra
from models import NoiseParams, TrainConfig, TrainingState
from network.baseline import init_mlp
from network.model import init_params, parse_layers
from network.serialization import load_checkpoint, load_model, save_model
from tasks.covseq import gen_covseq_dataset
from tasks.sp4 import gen_sp4_dataset
from tasks.storage import write_dataset
from training.losses import mse_loss
from training.metrics import check_compatible, evaluate, invariance_error, predict
from training.optimizer import Adam, AdamState, adam_step
from training.parallel import chunk_slices, map_chunks
from training.trainer import batch_gradients, split_validation, train_loop
from utils.formatting import parse_metrics_line


@pytest.fixture
def train_file(tmp_path, sp4_dataset):
    path = tmp_path / "train.rlnd"
    write_dataset(sp4_dataset, path)
    return path


def _config(train_file, **overrides):
    fields = dict(
        train_path=train_file,
        layers=parse_layers("linear,relu,bracket", 2, 3),
        head_hidden=4,
        batch_size=8,
        epochs=2,
        seed=7,
        eval_conj=2,
        chunk_size=5,
        lr=1e-2,
    )
    fields.update(overrides)
    return TrainConfig(**fields)


class TestMseLoss:
    def test_value_and_gradient(self):
        loss, grad = mse_loss(np.array([[1.0], [2.0]]), np.zeros((2, 1)))
        assert loss == pytest.approx(2.5)
        assert np.allclose(grad, [[1.0], [2.0]])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mse_loss(np.zeros((2, 1)), np.zeros(2))

    def test_empty(self):
        with pytest.raises(ShapeError):
            mse_loss(np.zeros((0, 1)), np.zeros((0, 1)))


class TestAdam:
    def test_first_step_moves_by_learning_rate(self):
        params = [np.array([0.0])]
        state = adam_step(params, [np.array([1.0])], AdamState.zeros_like(params), lr=0.1)
        assert params[0][0] == pytest.approx(-0.1, rel=1e-6)
        assert state.t == 1

    def test_bias_correction_on_sign_flip(self):
        params = [np.array([0.0])]
        state = AdamState.zeros_like(params)
        state = adam_step(params, [np.array([1.0])], state, lr=0.1)
        state = adam_step(params, [np.array([-1.0])], state, lr=0.1)
        # m = -0.01, bias-corrected by 1 - 0.9^2; v_hat = 1
        assert params[0][0] == pytest.approx(-0.1 + 0.1 * 0.01 / 0.19, rel=1e-6)
        assert state.first_moments[0][0] == pytest.approx(-0.01)
        assert state.second_moments[0][0] == pytest.approx(0.001999)

    def test_state_is_not_mutated(self):
        params = [np.zeros(2)]
        state = AdamState.zeros_like(params)
        adam_step(params, [np.ones(2)], state, lr=0.1)
        assert state.t == 0
        assert np.array_equal(state.first_moments[0], np.zeros(2))

    def test_minimizes_quadratic(self):
        target = np.array([1.0, -2.0, 0.5])
        params = [np.zeros(3)]
        optimizer = Adam(params, lr=0.05)
        for _ in range(3000):
            optimizer.step([params[0] - target])
        assert np.allclose(params[0], target, atol=1e-2)

    def test_non_finite_gradient(self):
        params = [np.zeros(1)]
        with pytest.raises(ConditioningError):
            adam_step(params, [np.array([np.nan])], AdamState.zeros_like(params), lr=0.1)

    def test_shape_mismatch(self):
        params = [np.zeros(2)]
        with pytest.raises(ShapeError):
            adam_step(params, [np.zeros(3)], AdamState.zeros_like(params), lr=0.1)


class TestParallel:
    def test_chunk_slices(self):
        assert chunk_slices(10, 4) == [slice(0, 4), slice(4, 8), slice(8, 10)]
        assert chunk_slices(0, 4) == []

    def test_rejects_zero_chunk(self):
        with pytest.raises(ValueError):
            chunk_slices(3, 0)

    def test_results_keep_chunk_order(self):
        assert map_chunks(lambda s: s.start, 10, 3, threads=4) == [0, 3, 6, 9]

    def test_batch_gradients_independent_of_threads(self, small_model, sp4_dataset):
        x = sp4_dataset.features
        y = sp4_dataset.targets
        loss_1, grads_1 = batch_gradients(small_model, x, y, chunk_size=7, threads=1)
        loss_4, grads_4 = batch_gradients(small_model, x, y, chunk_size=7, threads=4)
        assert loss_1 == loss_4
        assert all(np.array_equal(a, b) for a, b in zip(grads_1, grads_4))

    def test_batch_gradients_match_full_batch(self, small_model, sp4_dataset):
        x = sp4_dataset.features
        y = sp4_dataset.targets
        loss, grads = batch_gradients(small_model, x, y, chunk_size=7)
        out, cache = small_model.forward(x)
        full_loss, grad_out = mse_loss(out, y)
        full = small_model.gradients(cache, grad_out)
        assert loss == pytest.approx(full_loss, rel=1e-12)
        assert all(np.allclose(a, b, rtol=1e-10, atol=1e-14) for a, b in zip(grads, full))


class TestMetrics:
    def test_reln_model_is_invariant(self, small_model, sp4_dataset):
        assert invariance_error(small_model, sp4_dataset, M=3, sigma=0.5, seed=0) < 1e-16

    def test_mlp_is_not(self, sp4, sp4_dataset):
        model = init_mlp([20, 8, 8, 1], seed=0, basis=sp4)
        assert invariance_error(model, sp4_dataset, M=3, sigma=0.5, seed=0) > 1e-6

    def test_accepts_raw_features(self, small_model, sp4_dataset):
        from_dataset = invariance_error(small_model, sp4_dataset, M=2, sigma=0.5, seed=1)
        from_array = invariance_error(small_model, sp4_dataset.features, M=2, sigma=0.5, seed=1)
        assert from_dataset == from_array

    def test_evaluate_report(self, small_model, sp4_dataset):
        report = evaluate(small_model, sp4_dataset, M=4, sigma=0.5, seed=0)
        expected = float(np.mean((predict(small_model, sp4_dataset.features) - sp4_dataset.targets) ** 2))
        assert report.mse_id == pytest.approx(expected)
        assert report.mse_conjugated == pytest.approx(report.mse_id, rel=1e-8)
        assert report.M == 4

    def test_zero_sigma_is_exact(self, sp4, sp4_dataset):
        model = init_mlp([20, 8, 8, 1], seed=0, basis=sp4)
        report = evaluate(model, sp4_dataset, M=2, sigma=0.0, seed=0)
        assert report.invariance_error == 0.0
        assert report.mse_conjugated == report.mse_id

    def test_thread_count_does_not_change_metrics(self, sp4, sp4_dataset):
        model = init_mlp([20, 8, 8, 1], seed=0, basis=sp4)
        one = evaluate(model, sp4_dataset, M=3, sigma=0.5, seed=2, chunk_size=6, threads=1)
        four = evaluate(model, sp4_dataset, M=3, sigma=0.5, seed=2, chunk_size=6, threads=4)
        assert one.mse_conjugated == four.mse_conjugated
        assert one.invariance_error == four.invariance_error

    def test_requires_rounds(self, small_model, sp4_dataset):
        with pytest.raises(ValueError):
            evaluate(small_model, sp4_dataset, M=0, sigma=0.5, seed=0)

    def test_incompatible_algebra(self, sp4_dataset):
        so3 = make_algebra("so3")
        model = init_params(parse_layers("linear", 2, 2), seed=0, basis=so3, head_hidden=2)
        with pytest.raises(IncompatibleError):
            check_compatible(model, sp4_dataset)

    def test_incompatible_channels(self, sp4, sp4_dataset):
        model = init_params(parse_layers("linear", 3, 2), seed=0, basis=sp4, head_hidden=2)
        with pytest.raises(IncompatibleError):
            evaluate(model, sp4_dataset, M=1, sigma=0.5, seed=0)


class TestSplitValidation:
    def test_sizes(self, sp4_dataset):
        train, val = split_validation(sp4_dataset, 0.25, seed=0)
        assert (train.N, val.N) == (30, 10)

    def test_disjoint_and_complete(self, sp4_dataset):
        train, val = split_validation(sp4_dataset, 0.1, seed=3)
        rows = {row.tobytes() for row in np.concatenate([train.inputs, val.inputs])}
        assert len(rows) == sp4_dataset.N

    def test_small_fraction_keeps_one(self, sp4_dataset):
        _, val = split_validation(sp4_dataset, 0.001, seed=0)
        assert val.N == 1

    def test_zero_fraction(self, sp4_dataset):
        train, val = split_validation(sp4_dataset, 0.0, seed=0)
        assert (train.N, val.N) == (sp4_dataset.N, 0)


class TestTrainLoop:
    def test_history_and_metrics_log(self, train_file, tmp_path):
        metrics_path = tmp_path / "metrics.tsv"
        result = train_loop(_config(train_file, metrics_path=metrics_path))
        assert [m.epoch for m in result.history] == [1, 2]
        lines = metrics_path.read_text().splitlines()
        assert len(lines) == 2
        assert parse_metrics_line(lines[1]) == result.history[1]
        assert result.report.invariance_error < 1e-16

    def test_reduces_training_loss(self, train_file):
        result = train_loop(_config(train_file, epochs=15, lr=2e-2))
        assert result.history[-1].train_loss < result.history[0].train_loss

    def test_bit_identical_reruns(self, train_file):
        a = train_loop(_config(train_file, augment=1))
        b = train_loop(_config(train_file, augment=1))
        assert all(np.array_equal(p, q) for p, q in zip(a.model.params, b.model.params))
        assert [m.train_loss for m in a.history] == [m.train_loss for m in b.history]

    def test_threads_do_not_change_parameters(self, train_file):
        a = train_loop(_config(train_file, threads=1))
        b = train_loop(_config(train_file, threads=3))
        assert all(np.array_equal(p, q) for p, q in zip(a.model.params, b.model.params))

    def test_zero_epochs_saves_initial_model(self, train_file, tmp_path):
        out = tmp_path / "model.rlnm"
        result = train_loop(_config(train_file, epochs=0, out_path=out))
        assert result.history == []
        saved = load_model(out)
        assert all(np.array_equal(p, q) for p, q in zip(saved.params, result.model.params))

    def test_resume_matches_uninterrupted_run(self, train_file, tmp_path):
        full = train_loop(_config(train_file, epochs=3))
        checkpoint = tmp_path / "ckpt.rlnm"
        train_loop(_config(train_file, epochs=1, checkpoint_path=checkpoint))
        resumed = train_loop(_config(train_file, epochs=3, resume_path=checkpoint))
        assert [m.epoch for m in resumed.history] == [2, 3]
        assert all(np.array_equal(p, q) for p, q in zip(full.model.params, resumed.model.params))

    def test_resume_without_improvement_writes_model(self, train_file, tmp_path):
        checkpoint, out = tmp_path / "ckpt.rlnm", tmp_path / "model.rlnm"
        train_loop(_config(train_file, epochs=1, checkpoint_path=checkpoint))
        saved = load_checkpoint(checkpoint.read_bytes())
        unbeatable = TrainingState(epoch=1, adam_step=saved.state.adam_step, best_val=0.0)
        save_model(checkpoint, saved.model, unbeatable, saved.first_moments, saved.second_moments)

        resumed = train_loop(_config(train_file, epochs=3, resume_path=checkpoint, out_path=out))
        assert [m.epoch for m in resumed.history] == [2, 3]
        written = load_model(out)
        assert all(np.array_equal(p, q) for p, q in zip(written.params, resumed.model.params))

    def test_finished_resume_writes_model(self, train_file, tmp_path):
        checkpoint, out = tmp_path / "ckpt.rlnm", tmp_path / "model.rlnm"
        first = train_loop(_config(train_file, epochs=2, checkpoint_path=checkpoint))
        resumed = train_loop(_config(train_file, epochs=2, resume_path=checkpoint, out_path=out))
        assert resumed.history == []
        assert all(np.array_equal(p, q) for p, q in zip(load_model(out).params, first.model.params))

    def test_baseline_is_parameter_matched(self, train_file):
        reln = train_loop(_config(train_file, epochs=0))
        mlp = train_loop(_config(train_file, epochs=1, baseline=True))
        assert mlp.model.kind == "mlp"
        assert abs(mlp.model.n_params - reln.model.n_params) <= 0.2 * reln.model.n_params

    def test_vector_targets_rejected(self, tmp_path):
        path = tmp_path / "cov.rlnd"
        write_dataset(gen_covseq_dataset(6, steps=3, dt=0.1, params=NoiseParams(), seed=0), path)
        with pytest.raises(IncompatibleError):
            train_loop(_config(path))

    def test_first_layer_must_match_channels(self, train_file):
        with pytest.raises(IncompatibleError):
            train_loop(_config(train_file, layers=parse_layers("linear", 3, 2)))


def _write(tmp_path, name, ds):
    path = tmp_path / name
    write_dataset(ds, path)
    return path


@pytest.mark.slow
class TestLearning:
    def test_overfits_small_set(self, tmp_path):
        path = _write(tmp_path, "small.rlnd", gen_sp4_dataset(32, sigma=0.4, seed=5))
        cfg = _config(
            path,
            layers=parse_layers("linear,relu,bracket,relu", 2, 8),
            head_hidden=16,
            batch_size=32,
            epochs=1500,
            lr=1e-2,
            val_fraction=0.0,
            eval_conj=1,
        )
        history = train_loop(cfg).history
        # one full batch per epoch, so the first epoch's loss is the initial loss
        assert history[-1].train_loss <= 0.1 * history[0].train_loss

    def test_beats_matched_mlp_under_conjugation(self, tmp_path):
        train_path = _write(tmp_path, "train.rlnd", gen_sp4_dataset(512, sigma=0.4, seed=21))
        test_path = _write(tmp_path, "test.rlnd", gen_sp4_dataset(256, sigma=0.4, seed=22))
        common = dict(
            test_path=test_path,
            layers=parse_layers("linear,relu,bracket,relu", 2, 8),
            head_hidden=16,
            batch_size=32,
            epochs=60,
            lr=5e-3,
            eval_conj=4,
            group_sigma=1.0,
            val_fraction=0.0,
        )
        reln = train_loop(_config(train_path, **common)).report
        mlp = train_loop(_config(train_path, baseline=True, **common)).report
        assert reln.invariance_error <= 1e-10
        assert mlp.invariance_error >= 1e-3
        assert reln.mse_conjugated <= 0.2 * mlp.mse_conjugated
